#pragma once

// n rational curves in a cycle: one normalized product W'_k per component,
// their triple-product closed forms, automorphy data and translation points.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thetaglue/params.hpp"
#include "thetaglue/qseries.hpp"
#include "thetaglue/thetanum.hpp"

namespace thetaglue {

struct CycleParams {
    std::vector<complex> taus;
    std::vector<complex> qs;  // q_k
    complex q;                // product of the q_k
    RingMeta meta;
    bool degenerate = false;  // n = 1

    [[nodiscard]] int n() const { return static_cast<int>(taus.size()); }
};

inline CycleParams make_cycle(const std::vector<complex>& taus) {
    if (taus.empty()) throw domain_error("a cycle needs at least one component");
    CycleParams c;
    c.taus = taus;
    c.q = 1.0;
    for (complex t : taus) {
        if (!(t.imag() > 0.0)) throw domain_error("cycle parameters need positive imaginary parts");
        c.qs.push_back(nome(t));
        c.q *= c.qs.back();
    }
    c.meta = RingMeta::for_cycle(c.n());
    c.degenerate = c.n() == 1;
    return c;
}

/// z_k = z / (q_1 ... q_{k-1}).
inline Monomial cycle_chart(const RingMeta& meta, int k) {
    Monomial c = Monomial::z(meta);
    for (int j = 1; j < k; ++j) c = c / Monomial::q(meta, j);
    return c;
}

namespace detail {

inline void require_component(const RingMeta& meta, int k) {
    if (k < 1 || k > meta.vars) throw domain_error("component index " + std::to_string(k) + " outside 1.." + std::to_string(meta.vars));
}

} // namespace detail

/// Families q^{2i} q_k / z_k^2 (i >= 0) and q^{2i} z_k^2 / q_k (i >= 1).
inline std::vector<FactorStream> cycle_families(const RingMeta& meta, int k) {
    detail::require_component(meta, k);
    const Monomial q2 = Monomial::q_total(meta).pow(2), qk = Monomial::q(meta, k), zk = cycle_chart(meta, k);
    std::vector<FactorStream> fs;
    fs.push_back(geometric_stream(qk / zk.pow(2), q2));
    fs.push_back(geometric_stream(q2 * zk.pow(2) / qk, q2));
    return fs;
}

inline TruncatedSeries cycle_product(const RingMeta& meta, int k, const rational& order) {
    if (order < 2) throw domain_error("cycle products need order >= 2");
    return truncated_product(merge_streams(cycle_families(meta, k)), meta, order);
}

/// y = q z_k^2 / q_k; W'_k prod (1 - q^{2m}) = sum_l q^{l^2} y^l.
inline Monomial cycle_jtp_variable(const RingMeta& meta, int k) {
    return Monomial::q_total(meta) * cycle_chart(meta, k).pow(2) / Monomial::q(meta, k);
}

inline CheckResult cycle_closed_form_check(const RingMeta& meta, int k, const rational& order) {
    return compare_series(cycle_product(meta, k, order) * eta_product(meta, 2, order),
                          jtp_sum(cycle_jtp_variable(meta, k), order));
}

inline Monomial cycle_automorphy(const RingMeta& meta, int k, const rational& order) {
    return product_automorphy([&] { return cycle_families(meta, k); }, meta, order);
}

/// p_1 = 1 and p_k = p_{k-1} sqrt((a_k / a_{k-1}) (q_{k-1} / q_k)).
inline std::vector<Monomial> translation_points(const std::vector<Monomial>& automorphy) {
    std::vector<Monomial> p;
    if (automorphy.empty()) return p;
    const RingMeta& meta = automorphy.front().meta();
    p.push_back(Monomial::one(meta));
    for (std::size_t k = 1; k < automorphy.size(); ++k) {
        const Monomial r = automorphy[k] / automorphy[k - 1] * Monomial::q(meta, static_cast<int>(k)) /
                           Monomial::q(meta, static_cast<int>(k) + 1);
        p.push_back(p.back() * r.sqrt());
    }
    return p;
}

/// Numeric W'_k at z.
inline EvalResult cycle_wprime_num(const CycleParams& c, int k, complex z, double tol = 1e-17) {
    detail::require_component(c.meta, k);
    if (z == complex(0.0, 0.0)) throw domain_error("W' is undefined at z = 0");
    complex zk = z;
    for (int j = 1; j < k; ++j) zk /= c.qs[j - 1];
    const complex qk = c.qs[k - 1], q2 = c.q * c.q;
    const complex a = qk / (zk * zk), b = zk * zk / qk;
    const double aq2 = std::abs(q2);
    complex prod = 1.0 + a, qp = q2;
    double tail = 0.0;
    for (int i = 1; i < 100000; ++i) {
        prod *= (1.0 + qp * a) * (1.0 + qp * b);
        qp *= q2;
        const double s = std::abs(qp) * (std::abs(a) + std::abs(b)) / (1.0 - aq2);
        tail = std::expm1(s);
        if (tail < tol) break;
    }
    detail::require_finite(prod, "cycle_wprime_num");
    return {prod, std::abs(prod) * (tail + 16.0 * std::numeric_limits<double>::epsilon())};
}

struct ThetaRecognition {
    rational a;
    Monomial shift;
    Monomial unit;  // theta form = unit * W'_k
    bool local_shift = false;
};

/// The first candidate theta_{a,0}(2 zeta + sigma, 2 tau) / prod (1 - q^{2m}) proportional to W'_k.
/// Shift q1^{-1} is tried first, then q^{1-2a} / (q_k (q_1 ... q_{k-1})^2).
inline std::optional<ThetaRecognition> recognize_theta(const RingMeta& meta, int k, const TruncatedSeries& w,
                                                       const rational& order) {
    const int n = meta.vars;
    const TruncatedSeries eta_inv = series_invert_unit(eta_product(meta, 2, order));
    const Monomial local_base = (cycle_chart(meta, k).pow(2) / Monomial::q(meta, k)).without_z();
    for (bool local : {false, true}) {
        for (int j = 0; j < 2 * n; ++j) {
            const rational a(j, 2 * n);
            try {
                const Monomial shift =
                    local ? Monomial::q_total(meta, 1 - 2 * a) * local_base : Monomial::q(meta, 1).inverse();
                const TruncatedSeries theta = eta_inv * theta_series(a, 2, shift, 2, order);
                return ThetaRecognition{a, shift, extract_unit(theta, w), local};
            } catch (const lattice_violation&) {
            } catch (const floor_violation&) {
            } catch (const not_proportional&) {
            }
        }
    }
    return std::nullopt;
}

struct CycleSectionData {
    int k = 1;
    TruncatedSeries series;
    Monomial automorphy;
    CheckResult closed_form;
    Monomial translation_point;
    std::optional<ThetaRecognition> theta;
    std::optional<Monomial> corrected_automorphy;
};

struct CycleReport {
    int n = 0;
    rational order;
    bool degenerate = false;
    std::vector<CycleSectionData> sections;
    std::vector<complex> sample_points;
    std::vector<double> singular_values;
    int rank = 0;
    bool shared_corrected_automorphy = false;
    std::optional<bool> basis_claim;  // asserted for n = 2 only
    std::vector<std::string> notes;
    bool passed = false;
};

/// Default sample points: distinct radii inside the fundamental annulus.
inline std::vector<complex> default_cycle_samples(const CycleParams& c) {
    std::vector<complex> zs;
    const int n = c.n();
    for (int i = 0; i < n; ++i)
        zs.push_back(std::polar(std::pow(std::abs(c.q), (i + 0.37) / (n + 0.5)), 2.0 * pi * (0.11 + 0.29 * i)));
    return zs;
}

inline CycleReport cycle_report(const CycleParams& c, const rational& order = 12, std::vector<complex> samples = {}) {
    const RingMeta& meta = c.meta;
    const int n = c.n();
    if (samples.empty()) samples = default_cycle_samples(c);
    if (static_cast<int>(samples.size()) != n) throw domain_error("cycle report needs n sample points");
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t j = i + 1; j < samples.size(); ++j)
            if (std::abs(reduce_mod_q(samples[i], c.q) - reduce_mod_q(samples[j], c.q)) < 1e-9)
                throw domain_error("sample points coincide modulo q");

    CycleReport rep;
    rep.n = n;
    rep.order = order;
    rep.degenerate = c.degenerate;
    rep.sample_points = samples;
    if (c.degenerate) rep.notes.push_back("degenerate cycle: a single nodal rational curve");

    std::vector<Monomial> autos;
    for (int k = 1; k <= n; ++k) {
        CycleSectionData d{k, cycle_product(meta, k, order), cycle_automorphy(meta, k, order),
                           cycle_closed_form_check(meta, k, order), Monomial::one(meta), std::nullopt, std::nullopt};
        d.theta = recognize_theta(meta, k, d.series, order);
        if (d.theta) d.corrected_automorphy = d.automorphy * Monomial::q_total(meta).pow(d.theta->unit.z_exponent());
        autos.push_back(d.automorphy);
        rep.sections.push_back(std::move(d));
    }
    const auto points = translation_points(autos);
    for (int k = 0; k < n; ++k) rep.sections[k].translation_point = points[k];

    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const auto& d = rep.sections[k];
            const complex u = d.theta ? monomial_value(d.theta->unit, c.taus, samples[i]) : complex(1.0, 0.0);
            m(i, k) = u * cycle_wprime_num(c, k + 1, samples[i]).value;
        }
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i) rep.singular_values.push_back(sv(i));
    for (double s : rep.singular_values)
        if (s > 1e-10 * rep.singular_values.front()) ++rep.rank;

    rep.shared_corrected_automorphy = std::all_of(rep.sections.begin(), rep.sections.end(), [&](const auto& d) {
        return d.corrected_automorphy && *d.corrected_automorphy == *rep.sections.front().corrected_automorphy;
    });
    const bool closed = std::all_of(rep.sections.begin(), rep.sections.end(), [](const auto& d) { return d.closed_form.passed; });
    const bool even_degree = std::all_of(rep.sections.begin(), rep.sections.end(),
                                         [](const auto& d) { return d.automorphy.z_exponent() == -2; });
    bool nodes = true;
    for (int k = 1; k < n; ++k)
        nodes = nodes && points[k] / points[k - 1] == Monomial::q(meta, k);
    if (n == 2) {
        rep.basis_claim = rep.rank == 2 && rep.shared_corrected_automorphy && rep.sections[0].theta &&
                          rep.sections[1].theta && rep.sections[0].theta->a == rational(1, 2) &&
                          rep.sections[1].theta->a == 0;
    } else if (n > 2) {
        rep.notes.push_back("each section has automorphy of z-degree -2; the sections differ by the translations p_k");
        if (!rep.shared_corrected_automorphy) rep.notes.push_back("corrected automorphies are not shared");
    }
    rep.passed = closed && even_degree && nodes && rep.basis_claim.value_or(true);
    return rep;
}

} // namespace thetaglue
