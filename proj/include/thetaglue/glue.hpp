#pragma once

// The glued curve C^x / q^Z, the two theta sections built from the W'
// products, the covering to P^1 and its verification routines.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "thetaglue/lgmodel.hpp"
#include "thetaglue/params.hpp"
#include "thetaglue/qseries.hpp"
#include "thetaglue/thetanum.hpp"

namespace thetaglue {

struct EllipticCurveQ {
    complex q;
    [[nodiscard]] complex reduce(complex z) const { return reduce_mod_q(z, q); }
};

/// Ring of the two-component construction.
inline RingMeta glue_ring() { return {2, 4, -8}; }

/// Factors of W'_parity written through the charts z_j:
/// parity 1: q1 / z_{2i-1}^2 and z_{-2i+1}^2 / q1; parity 2: q2 / z_{2i}^2 and z_{-2i+2}^2 / q2.
inline std::vector<FactorStream> wprime_definition_families(int parity, const RingMeta& meta) {
    if (parity != 1 && parity != 2) throw domain_error("W' parity must be 1 or 2");
    const Monomial qk = Monomial::q(meta, parity);
    auto family = [meta, qk, parity](bool inner) -> FactorStream {
        return [meta, qk, parity, inner, i = 0]() mutable -> std::optional<Monomial> {
            ++i;
            if (inner) return qk / chart_monomial(parity == 1 ? 2 * i - 1 : 2 * i, meta).pow(2);
            return chart_monomial(parity == 1 ? -2 * i + 1 : -2 * i + 2, meta).pow(2) / qk;
        };
    };
    std::vector<FactorStream> fs;
    fs.push_back(family(true));
    fs.push_back(family(false));
    return fs;
}

inline FactorStream wprime_definition_stream(int parity, const RingMeta& meta) {
    return merge_streams(wprime_definition_families(parity, meta));
}

/// Automorphy of unit * W'_parity under z -> qz.
inline Monomial corrected_automorphy(int parity, const Monomial& unit, const rational& order) {
    const RingMeta& meta = unit.meta();
    const Monomial w = product_automorphy([&] { return wprime_definition_families(parity, meta); }, meta, order);
    return w * Monomial::q_total(meta).pow(unit.z_exponent());
}

/// The reindexed form prod (1 + q^{2i-1} / y)(1 + q^{2i-1} y).
inline Monomial jtp_variable(int parity, const RingMeta& meta) {
    const Monomial z2 = Monomial::z(meta, 2);
    return parity == 1 ? Monomial::q(meta, 2) * z2 : z2 / Monomial::q(meta, 1);
}

inline FactorStream wprime_qform_stream(int parity, const RingMeta& meta) {
    const Monomial q = Monomial::q_total(meta), y = jtp_variable(parity, meta);
    std::vector<FactorStream> fs;
    fs.push_back(geometric_stream(q / y, q.pow(2)));
    fs.push_back(geometric_stream(q * y, q.pow(2)));
    return merge_streams(std::move(fs));
}

inline TruncatedSeries wprime_series(int parity, const rational& order, const RingMeta& meta = glue_ring()) {
    return truncated_product(wprime_definition_stream(parity, meta), meta, order);
}

inline rational theta_characteristic(int parity) { return parity == 1 ? rational(1, 2) : rational(0); }

/// e^{pi i tau/6} / eta(2 tau) * theta_{a,0}(2 zeta - tau1, 2 tau), the eta quotient being prod (1 - q^{2m})^{-1}.
inline TruncatedSeries theta_form_series(int parity, const rational& order, const RingMeta& meta = glue_ring()) {
    const TruncatedSeries theta = theta_series(theta_characteristic(parity), 2, Monomial::q(meta, 1).inverse(), 2, order);
    return series_invert_unit(eta_product(meta, 2, order)) * theta;
}

struct ThetaSection {
    rational a;          // characteristic
    int alpha = 2;       // argument multiplier
    Monomial shift;      // e^{2 pi i sigma}, sigma = -tau1
    int modulus = 2;     // theta at modulus * tau
    Monomial unit_correction;
    int product_form = 1;  // parity of the W' it corrects
    Monomial automorphy;   // of unit_correction * W'
};

struct CoveringMap {
    ThetaSection s1, s2;
    KahlerParams params;
    rational order;
    TruncatedSeries s1_series, s2_series;  // corrected sections, exact

    [[nodiscard]] std::array<complex, 2> taus() const { return {params.tau1, params.tau2}; }
};

inline ThetaSection make_section(int parity, const rational& order, const RingMeta& meta = glue_ring()) {
    const TruncatedSeries w = wprime_series(parity, order, meta);
    const TruncatedSeries theta = theta_form_series(parity, order, meta);
    const Monomial u = extract_unit(theta, w);
    return {theta_characteristic(parity), 2, Monomial::q(meta, 1).inverse(), 2, u, parity, corrected_automorphy(parity, u, order)};
}

inline CoveringMap build_covering(const KahlerParams& p, const rational& order = 16, const RingMeta& meta = glue_ring()) {
    CoveringMap m{make_section(1, order, meta), make_section(2, order, meta), p, order, TruncatedSeries(meta, order),
                  TruncatedSeries(meta, order)};
    if (!(m.s1.automorphy == m.s2.automorphy))
        throw not_proportional("corrected sections have automorphy " + m.s1.automorphy.to_string() + " and " +
                               m.s2.automorphy.to_string());
    m.s1_series = wprime_series(1, order, meta) * m.s1.unit_correction;
    m.s2_series = wprime_series(2, order, meta) * m.s2.unit_correction;
    return m;
}

/// Corrected section value unit(z) * W'_parity(z).
inline EvalResult section_value(const CoveringMap& m, int parity, complex z) {
    const ThetaSection& s = parity == 1 ? m.s1 : m.s2;
    const auto t = m.taus();
    const complex u = monomial_value(s.unit_correction, t, z);
    const EvalResult w = wprime_num(parity, z, m.params);
    return {u * w.value, std::abs(u) * w.error_bound};
}

struct ProjectivePoint {
    complex x0, x1;
    double err0 = 0.0, err1 = 0.0;
};

inline ProjectivePoint normalize(complex a, complex b, double ea = 0.0, double eb = 0.0) {
    if (a == complex(0.0, 0.0) && b == complex(0.0, 0.0)) throw domain_error("[0 : 0] is not a point of P^1");
    const complex s = std::abs(a) >= std::abs(b) ? a : b;
    const double as = std::abs(s);
    return {a / s, b / s, ea / as, eb / as};
}

/// [s1(z) : s2(z)], scaled so the larger coordinate is 1.
inline ProjectivePoint covering_eval(const CoveringMap& m, complex z) {
    if (z == complex(0.0, 0.0)) throw domain_error("covering undefined at z = 0");
    const auto a = section_value(m, 1, z), b = section_value(m, 2, z);
    return normalize(a.value, b.value, a.error_bound, b.error_bound);
}

inline double chordal(const ProjectivePoint& p, const ProjectivePoint& r) {
    const double n1 = std::hypot(std::abs(p.x0), std::abs(p.x1)), n2 = std::hypot(std::abs(r.x0), std::abs(r.x1));
    return std::abs(p.x0 * r.x1 - p.x1 * r.x0) / (n1 * n2);
}

struct ChainStage {
    std::string name;
    std::optional<Monomial> unit;  // rhs = unit * lhs
    bool passed = false;
    std::string detail;
};

struct ChainReport {
    int which = 1;
    rational order;
    std::vector<ChainStage> stages;
    std::optional<Monomial> end_to_end;
    bool units_compose = false;
    std::optional<Monomial> corrected_automorphy;
    std::optional<Monomial> reference_automorphy;  // of W'_2
    bool passed = false;
};

inline ChainReport chain_verify(int which, const rational& order, const RingMeta& meta = glue_ring()) {
    if (which != 1 && which != 2) throw domain_error("chain must be 1 or 2");
    if (order < 4) throw domain_error("chain verification needs order >= 4");
    const TruncatedSeries definition = truncated_product(wprime_definition_stream(which, meta), meta, order);
    const TruncatedSeries qform = truncated_product(wprime_qform_stream(which, meta), meta, order);
    const TruncatedSeries jtp = series_invert_unit(eta_product(meta, 2, order)) * jtp_sum(jtp_variable(which, meta), order);
    const TruncatedSeries theta = theta_form_series(which, order, meta);

    ChainReport rep{which, order, {}, std::nullopt, false, std::nullopt, std::nullopt, false};
    const std::array<std::pair<const char*, std::pair<const TruncatedSeries*, const TruncatedSeries*>>, 3> pairs{{
        {"definition -> q-form", {&definition, &qform}},
        {"q-form -> triple product sum", {&qform, &jtp}},
        {"sum -> eta-prefactored theta", {&jtp, &theta}},
    }};
    bool all = true;
    for (const auto& [name, pr] : pairs) {
        ChainStage st{name, std::nullopt, false, {}};
        try {
            st.unit = extract_unit(*pr.second, *pr.first);
            st.passed = true;
            st.detail = st.unit->is_one() ? "equal" : "equal up to the unit " + st.unit->to_string();
        } catch (const not_proportional& e) {
            st.detail = e.what();
            all = false;
        }
        rep.stages.push_back(std::move(st));
    }
    try {
        rep.end_to_end = extract_unit(theta, definition);
    } catch (const not_proportional&) {
        all = false;
    }
    if (all) {
        Monomial composed = Monomial::one(meta);
        for (const auto& st : rep.stages) composed = composed * *st.unit;
        rep.units_compose = composed == *rep.end_to_end;
        rep.corrected_automorphy = corrected_automorphy(which, *rep.end_to_end, order);
        rep.reference_automorphy = corrected_automorphy(2, Monomial::one(meta), order);
    }
    rep.passed = all && rep.units_compose && *rep.corrected_automorphy == *rep.reference_automorphy;
    return rep;
}

/// Random point of {|q| < |z| <= 1}, log-uniform in the radius.
inline complex sample_fundamental(std::mt19937_64& rng, complex q) {
    std::uniform_real_distribution<double> t(0.0, 1.0);
    const double radius = std::pow(std::abs(q), t(rng));
    return std::polar(radius, 2.0 * pi * t(rng));
}

struct DescentOptions {
    int samples = 100;
    double tol = 1e-9;
    int cross_points = 10;
    double cross_tol = 1e-10;
    rational cross_order = 32;
    std::uint64_t seed = 20240611;
};

struct DescentReport {
    CheckResult result;
    double max_chordal = 0.0;
    double max_cross_rel = 0.0;
};

/// Exact corrected sections and their numeric values at points of
/// {|q|^{1/4} <= |z| <= 1}, where the q-expansion is summable.
inline double cross_check_sections(const CoveringMap& m, int points, const rational& order, std::mt19937_64& rng) {
    const RingMeta& meta = m.s1.unit_correction.meta();
    const TruncatedSeries e1 = wprime_series(1, order, meta) * m.s1.unit_correction;
    const TruncatedSeries e2 = wprime_series(2, order, meta) * m.s2.unit_correction;
    const auto t = m.taus();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < points; ++i) {
        const complex z = std::polar(std::pow(std::abs(m.params.q), 0.25 * u(rng)), 2.0 * pi * u(rng));
        const complex n1 = section_value(m, 1, z).value, n2 = section_value(m, 2, z).value;
        worst = std::max(worst, std::abs(series_value(e1, t, z) - n1) / std::abs(n1));
        worst = std::max(worst, std::abs(series_value(e2, t, z) - n2) / std::abs(n2));
    }
    return worst;
}

inline DescentReport descent_check(const CoveringMap& m, const DescentOptions& opt = {}) {
    if (opt.samples < 1) throw domain_error("descent needs at least one sample");
    std::mt19937_64 rng(opt.seed);
    DescentReport rep{CheckResult::ok(), 0.0, 0.0};
    std::optional<Discrepancy> worst;
    for (int i = 0; i < opt.samples; ++i) {
        const complex z = sample_fundamental(rng, m.params.q);
        const double d = chordal(covering_eval(m, m.params.q * z), covering_eval(m, z));
        if (d > rep.max_chordal) {
            rep.max_chordal = d;
            if (d >= opt.tol) worst = Discrepancy{"z = " + complex_text(z), "", "", std::nullopt};
        }
    }
    if (opt.cross_points > 0) rep.max_cross_rel = cross_check_sections(m, opt.cross_points, opt.cross_order, rng);
    std::ostringstream os;
    os.precision(3);
    os << "max chordal " << rep.max_chordal << ", max exact/numeric deviation " << rep.max_cross_rel;
    if (worst) {
        worst->lhs = "chordal " + std::to_string(rep.max_chordal);
        worst->rhs = "tolerance " + std::to_string(opt.tol);
        rep.result = CheckResult::fail(*worst, os.str());
    } else if (rep.max_cross_rel >= opt.cross_tol) {
        rep.result = CheckResult::fail({"cross-check", std::to_string(rep.max_cross_rel), std::to_string(opt.cross_tol),
                                        std::nullopt},
                                       os.str());
    } else {
        rep.result = CheckResult::ok(os.str());
    }
    return rep;
}

/// The covering with s1's unit deprived of its z-factor.
inline CoveringMap strip_unit(CoveringMap m) {
    m.s1.unit_correction = m.s1.unit_correction.without_z();
    m.s1_series = wprime_series(1, m.order, m.s1.unit_correction.meta()) * m.s1.unit_correction;
    return m;
}

struct RamificationReport {
    std::vector<complex> points;
    std::vector<complex> predicted;  // +-sqrt(q1), +-q1 sqrt(q2), reduced
    std::vector<complex> w1_critical, w2_critical_image;
    std::vector<int> fiber_counts;
    std::vector<std::array<complex, 2>> targets;
    double max_prediction_error = 0.0, max_critical_error = 0.0;
    bool generic = true;
    bool passed = false;
};

inline RamificationReport ramification_analysis(const KahlerParams& p, double tol = 1e-8) {
    RamificationReport rep;
    const complex r1 = std::sqrt(p.q1), r2 = p.q1 * std::sqrt(p.q2);
    rep.predicted = {reduce_mod_q(r1, p.q), reduce_mod_q(-r1, p.q), reduce_mod_q(r2, p.q), reduce_mod_q(-r2, p.q)};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
            if (std::abs(rep.predicted[i] - rep.predicted[j]) < 1e-4) rep.generic = false;

    rep.points = find_ramification(p, tol);
    const auto s1 = lg_family(1, p), s2 = lg_family(2, p);
    const auto [c1, c2] = critical_points(s1);
    const auto [d1, d2] = critical_points(s2);
    rep.w1_critical = {c1, c2};
    rep.w2_critical_image = {s2.global_of(d1), s2.global_of(d2)};

    auto nearest = [](complex x, const std::vector<complex>& pts, std::size_t from, std::size_t to) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = from; i < std::min(to, pts.size()); ++i) best = std::min(best, std::abs(pts[i] - x));
        return best;
    };
    for (complex x : rep.predicted) rep.max_prediction_error = std::max(rep.max_prediction_error, nearest(x, rep.points, 0, 4));
    for (complex x : rep.w1_critical)
        rep.max_critical_error = std::max(rep.max_critical_error, nearest(reduce_mod_q(x, p.q), rep.points, 0, 2));
    for (complex x : rep.w2_critical_image)
        rep.max_critical_error = std::max(rep.max_critical_error, nearest(reduce_mod_q(x, p.q), rep.points, 2, 4));

    const CoveringMap m = build_covering(p);
    rep.targets = {{complex(1.0, 0.0), complex(1.0, 0.0)},
                   {complex(1.0, 0.0), complex(0.3, 0.7)},
                   {complex(-2.0, 0.5), complex(1.0, 0.0)}};
    for (const auto& [a, b] : rep.targets) {
        const Evaluator f = [&, a = a, b = b](complex z) {
            return b * section_value(m, 1, z).value - a * section_value(m, 2, z).value;
        };
        rep.fiber_counts.push_back(count_zeros(f, p));
    }
    rep.passed = rep.points.size() == 4 && rep.max_prediction_error < tol && rep.max_critical_error < tol &&
                 std::all_of(rep.fiber_counts.begin(), rep.fiber_counts.end(), [](int c) { return c == 2; });
    return rep;
}

struct FiberMatchOptions {
    int samples = 200;
    double band = 0.01;          // excluded tropical distance from the boundary circles
    double match_tol = 1e-9;     // chordal, for involution partners
    double w_gap = 1e-3;         // superpotential separation defining an unmatched pair
    double separation = 1e-6;    // required chordal distance of unmatched pairs
    std::uint64_t seed = 77;
};

struct FiberMatchReport {
    CheckResult result;
    int matched = 0, unmatched = 0, skipped = 0;
    double max_matched = 0.0, min_unmatched = std::numeric_limits<double>::infinity();
};

inline complex sample_interior(std::mt19937_64& rng, const Annulus& a, double band) {
    const AffineInterval iv = interval_for(a);
    if (iv.length() <= 2.0 * band) throw domain_error("annulus too thin for the exclusion band");
    std::uniform_real_distribution<double> t(iv.lo + band, iv.hi - band), ang(0.0, 2.0 * pi);
    return std::polar(std::exp(-2.0 * pi * t(rng)), ang(rng));
}

/// On the interior of Y_index, equal superpotential values and equal covering values select the same pairs.
inline FiberMatchReport fiber_match_check(const CoveringMap& m, int index, const FiberMatchOptions& opt = {}) {
    if (index != 1 && index != 2) throw domain_error("fiber matching is defined for index 1 and 2");
    if (opt.samples < 1) throw domain_error("fiber matching needs at least one sample");
    const LGModelSpec s = lg_family(index, m.params);
    std::mt19937_64 rng(opt.seed + static_cast<std::uint64_t>(index));
    FiberMatchReport rep{CheckResult::ok(), 0, 0, 0};
    std::optional<Discrepancy> bad;
    for (int i = 0; i < opt.samples; ++i) {
        const complex z = sample_interior(rng, s.z_plane, opt.band);
        const complex partner = s.global_of(s.q_k / s.local_of(z));
        const complex wz = superpotential_global(s, z);
        const double dw = std::abs(superpotential_global(s, partner) - wz) / std::abs(wz);
        const double dm = chordal(covering_eval(m, z), covering_eval(m, partner));
        ++rep.matched;
        rep.max_matched = std::max(rep.max_matched, dm);
        if ((dm >= opt.match_tol || dw > 1e-12) && !bad)
            bad = Discrepancy{"pair " + complex_text(z) + ", " + complex_text(partner), std::to_string(dm),
                              "matched tolerance", std::nullopt};

        const complex w = sample_interior(rng, s.z_plane, opt.band);
        if (std::abs(superpotential_global(s, w) - wz) <= opt.w_gap) {
            ++rep.skipped;
            continue;
        }
        const double du = chordal(covering_eval(m, z), covering_eval(m, w));
        ++rep.unmatched;
        rep.min_unmatched = std::min(rep.min_unmatched, du);
        if (du <= opt.separation && !bad)
            bad = Discrepancy{"pair " + complex_text(z) + ", " + complex_text(w), std::to_string(du),
                              "unmatched separation", std::nullopt};
    }
    std::ostringstream os;
    os.precision(3);
    os << rep.matched << " matched (max chordal " << rep.max_matched << "), " << rep.unmatched
       << " unmatched (min chordal " << rep.min_unmatched << "), " << rep.skipped << " skipped";
    rep.result = bad ? CheckResult::fail(*bad, os.str()) : CheckResult::ok(os.str());
    return rep;
}

} // namespace thetaglue
