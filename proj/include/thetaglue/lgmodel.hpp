#pragma once

// Affine base intervals, the tropicalization dictionary, the indexed family of
// Landau-Ginzburg annuli and the small exact checks attached to them.

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "thetaglue/params.hpp"
#include "thetaglue/qseries.hpp"
#include "thetaglue/thetanum.hpp"

namespace thetaglue {

struct AffineInterval {
    double lo = 0.0, hi = 1.0;
    [[nodiscard]] double length() const { return hi - lo; }
};

struct GluedCircle {
    double circumference = 0.0;
    double shift = 0.0;
};

struct Annulus {
    double r_in = 0.0, r_out = 1.0;
    [[nodiscard]] bool contains(complex z) const {
        const double r = std::abs(z);
        return r > r_in && r < r_out;
    }
};

struct HolonomyData {
    double angle = 0.0;  // in [0, 2 pi)
};

inline HolonomyData make_holonomy(double angle) {
    double a = std::fmod(angle, 2.0 * pi);
    if (a < 0) a += 2.0 * pi;
    if (a >= 2.0 * pi) a = 0.0;
    return {a};
}

struct DiscClass {
    std::string label;
    complex area;  // integral of B + i omega over the disc
    int count = 1;
};

/// Ring used for charts and the Laurent identities of this module.
inline RingMeta chart_ring() { return {2, 4, -64}; }

struct LGModelSpec {
    int index = 1;
    int parameter = 1;  // 1 for q1 (odd index), 2 for q2 (even index)
    complex q_k;
    Annulus local;
    Monomial chart = Monomial::z(chart_ring());  // z_index as a monomial in z
    complex chart_factor;                        // numeric value of chart / z
    Annulus z_plane;

    [[nodiscard]] complex local_of(complex z) const { return chart_factor * z; }
    [[nodiscard]] complex global_of(complex u) const { return u / chart_factor; }
};

inline std::tuple<AffineInterval, AffineInterval, GluedCircle> glue_intervals(const KahlerParams& p) {
    const double a = p.tau1.imag(), b = p.tau2.imag();
    return {AffineInterval{0.0, a}, AffineInterval{-b, 0.0}, GluedCircle{a + b, p.tau.imag()}};
}

inline double tropicalize(complex z) {
    if (z == complex(0.0, 0.0)) throw domain_error("tropicalization undefined at z = 0");
    return -std::log(std::abs(z)) / (2.0 * pi);
}

inline Annulus annulus_for(const AffineInterval& iv) {
    if (!(iv.lo < iv.hi)) throw domain_error("degenerate interval");
    return {std::exp(-2.0 * pi * iv.hi), std::exp(-2.0 * pi * iv.lo)};
}

inline AffineInterval interval_for(const Annulus& a) {
    if (!(a.r_in > 0.0) || !(a.r_in < a.r_out)) throw domain_error("degenerate annulus");
    return {tropicalize(a.r_out), tropicalize(a.r_in)};
}

inline complex semiflat_coordinate(double area, HolonomyData hol) { return std::polar(std::exp(-2.0 * pi * area), hol.angle); }

/// (a, b) -> (b, a): complex-affine and symplectic-affine lengths trade places.
inline std::pair<double, double> mirror_swap(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw domain_error("mirror_swap needs positive lengths");
    return {b, a};
}

/// Chart of z_index from q z_{i+2} = z_i, z_1 = z, z_2 = z / q1.
inline Monomial chart_monomial(int index, const RingMeta& meta = chart_ring()) {
    const Monomial q = Monomial::q_total(meta), z = Monomial::z(meta);
    const auto fdiv = [](int a, int b) { return static_cast<int>(std::floor(static_cast<double>(a) / b)); };
    if (index % 2 != 0) {
        const int i = fdiv(index - 1, 2);
        return q.pow(-i) * z;
    }
    const int i = index / 2;
    return q.pow(-(i - 1)) * Monomial::q(meta, 1).inverse() * z;
}

inline LGModelSpec lg_family(int index, const KahlerParams& p) {
    LGModelSpec s;
    s.index = index;
    const bool odd = index % 2 != 0;
    s.parameter = odd ? 1 : 2;
    s.q_k = odd ? p.q1 : p.q2;
    s.local = odd ? Annulus{std::abs(p.q1), 1.0} : Annulus{std::abs(p.q2), 1.0};
    s.chart = chart_monomial(index);
    const std::array<complex, 2> taus{p.tau1, p.tau2};
    s.chart_factor = monomial_value(s.chart, taus, 1.0);
    const double c = std::abs(s.chart_factor);
    s.z_plane = {s.local.r_in / c, s.local.r_out / c};
    return s;
}

/// u + q_k / u for u in the local annulus.
inline complex superpotential_eval(const LGModelSpec& s, complex u) {
    if (!s.local.contains(u)) throw outside_domain("point " + complex_text(u) + " outside the local annulus");
    return u + s.q_k / u;
}

/// The model's superpotential pulled back to the global coordinate z.
inline complex superpotential_global(const LGModelSpec& s, complex z) { return superpotential_eval(s, s.local_of(z)); }

/// +-sqrt(q_k), principal branch first.
inline std::pair<complex, complex> critical_points(const LGModelSpec& s) {
    const complex r = std::sqrt(s.q_k);
    return {r, -r};
}

/// sum n_beta z_beta over the disc classes of P^1, with z_{beta_1} z_{beta_2} = q.
/// Series live in the one-variable ring in q, so q/z has weight 1.
inline TruncatedSeries disc_superpotential(const std::vector<DiscClass>& discs, complex tau, const rational& order = 4) {
    const RingMeta meta{1, 4, -8};
    if (discs.empty() || discs.size() > 2) throw domain_error("P^1 carries one or two basic disc classes");
    complex total = 0.0;
    for (const auto& d : discs) {
        if (d.count < 0) throw domain_error("negative disc count for " + d.label);
        if (!(d.area.imag() > 0.0)) throw domain_error("disc " + d.label + " has non-positive symplectic area");
        total += d.area;
    }
    if (discs.size() == 2 && std::abs(total - tau) > 1e-10)
        throw inconsistent_relation("disc areas sum to " + complex_text(total) + ", the class relation needs " +
                                    complex_text(tau));
    const std::array<Monomial, 2> zbeta{Monomial::z(meta), Monomial::q_total(meta) * Monomial::z(meta, -1)};
    TruncatedSeries w(meta, order);
    for (std::size_t i = 0; i < discs.size(); ++i) w.add_term(zbeta[i].key(), discs[i].count);
    return w;
}

struct ProductFormulaReport {
    CheckResult result;
    Monomial displayed_prefactor;
    std::optional<Monomial> measured_prefactor;
    TruncatedSeries lhs, rhs;
};

/// (z_j + q_k/z_j)(z_{-j} + q_k/z_{-j}) against q_k q^j (1 + q_k/z_j^2)(1 + z_{-j}^2/q_k),
/// both expanded as Laurent polynomials in z through the charts.
inline ProductFormulaReport product_formula_check(int j, int k) {
    if (k != 1 && k != 2) throw domain_error("k must be 1 or 2");
    const RingMeta meta = chart_ring();
    const rational order = 256;
    const Monomial one = Monomial::one(meta), qk = Monomial::q(meta, k);
    const Monomial zj = chart_monomial(j, meta), zmj = chart_monomial(-j, meta);
    auto binom = [&](const Monomial& a, const Monomial& b) {
        const std::array<Monomial, 2> ms{a, b};
        return TruncatedSeries::from_monomials(meta, order, ms);
    };
    const TruncatedSeries lhs = binom(zj, qk / zj) * binom(zmj, qk / zmj);
    const TruncatedSeries core = binom(one, qk / zj.pow(2)) * binom(one, zmj.pow(2) / qk);
    const Monomial displayed = qk * Monomial::q_total(meta).pow(j);
    const TruncatedSeries rhs = core * displayed;

    ProductFormulaReport rep{compare_series(lhs, rhs), displayed, std::nullopt, lhs, rhs};
    try {
        rep.measured_prefactor = extract_unit(lhs, core);
    } catch (const not_proportional&) {
    }
    if (!rep.result.passed && rep.measured_prefactor)
        rep.result.detail += "; measured prefactor " + rep.measured_prefactor->to_string() + ", displayed " +
                             displayed.to_string();
    return rep;
}

/// Laurent polynomials in x with Laurent-polynomial coefficients in one
/// parameter q, keyed by (x exponent, q exponent).
using QLaurent = std::map<std::pair<std::int64_t, std::int64_t>, rational>;

/// Monic relation x^d = sum_{i<d} coeffs[i] x^i; coeffs[0] must be a single q-power
/// so that x is invertible in the quotient.
struct MonicRelation {
    std::vector<QLaurent> coeffs;  // each entry has x exponent 0
};

namespace detail {

inline void qlaurent_add(QLaurent& acc, std::int64_t xe, std::int64_t qe, const rational& c) {
    if (c == 0) return;
    auto [it, inserted] = acc.try_emplace({xe, qe}, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) acc.erase(it);
    }
}

} // namespace detail

/// Normal form modulo the relation on the basis {1, x, ..., x^{d-1}}.
inline QLaurent reduce_modulo(QLaurent f, const MonicRelation& rel) {
    const auto d = static_cast<std::int64_t>(rel.coeffs.size());
    if (d == 0) throw domain_error("empty relation");
    const QLaurent& c0 = rel.coeffs[0];
    if (c0.size() != 1) throw not_invertible("x is not a unit modulo the relation");
    const auto [c0key, c0val] = *c0.begin();
    for (int guard = 0; guard < 100000; ++guard) {
        auto it = std::find_if(f.begin(), f.end(), [&](const auto& t) { return t.first.first >= d || t.first.first < 0; });
        if (it == f.end()) return f;
        const auto [key, c] = *it;
        f.erase(it);
        const auto [xe, qe] = key;
        if (xe >= d) {
            // x^e = x^{e-d} * sum_i coeffs[i] x^i
            for (std::int64_t i = 0; i < d; ++i)
                for (const auto& [ck, cv] : rel.coeffs[i]) detail::qlaurent_add(f, xe - d + i, qe + ck.second, c * cv);
        } else {
            // x^{-1} = (x^{d-1} - sum_{i>=1} coeffs[i] x^{i-1}) / coeffs[0]
            const std::int64_t q0 = c0key.second;
            detail::qlaurent_add(f, xe + d, qe - q0, c / c0val);
            for (std::int64_t i = 1; i < d; ++i)
                for (const auto& [ck, cv] : rel.coeffs[i])
                    detail::qlaurent_add(f, xe + i, qe + ck.second - q0, -c * cv / c0val);
        }
    }
    throw non_terminating("reduction did not terminate");
}

/// Relation of the Jacobian ring of W: the numerator of dW/dz made monic.
inline MonicRelation jacobian_relation(const TruncatedSeries& w) {
    if (w.meta().vars != 1) throw ring_mismatch("Jacobian ring expects the one-parameter ring");
    const TruncatedSeries dw = derivative_z(w);
    if (dw.empty()) throw domain_error("constant superpotential");
    const auto [zmin, zmax] = *dw.z_range();
    // z^{-zmin} dW is a polynomial of degree zmax - zmin
    const std::int64_t d = zmax - zmin;
    QLaurent lead;
    std::vector<QLaurent> poly(static_cast<std::size_t>(d + 1));
    for (const auto& [k, c] : dw.terms()) {
        if (k.q[0] % w.meta().denom != 0) throw lattice_violation("fractional q-power in superpotential");
        detail::qlaurent_add(poly[static_cast<std::size_t>(k.z - zmin)], 0, k.q[0] / w.meta().denom, c);
    }
    if (poly[d].size() != 1) throw not_invertible("leading coefficient of dW is not a unit");
    const auto [lk, lv] = *poly[d].begin();
    MonicRelation rel;
    for (std::int64_t i = 0; i < d; ++i) {
        QLaurent ci;
        for (const auto& [k, c] : poly[static_cast<std::size_t>(i)]) detail::qlaurent_add(ci, 0, k.second - lk.second, -c / lv);
        rel.coeffs.push_back(ci);
    }
    return rel;
}

/// z + q/z in the one-parameter ring.
inline TruncatedSeries p1_superpotential() {
    const RingMeta meta{1, 4, -8};
    const std::array<Monomial, 2> ms{Monomial::z(meta), Monomial::q_total(meta) * Monomial::z(meta, -1)};
    return TruncatedSeries::from_monomials(meta, 4, ms);
}

/// z^e reduced in Jac(z + q/z).
inline QLaurent jacobian_reduce(std::int64_t e) {
    QLaurent f;
    f[{e, 0}] = 1;
    return reduce_modulo(std::move(f), jacobian_relation(p1_superpotential()));
}

/// c[i][j] = e_i e_j on the basis {x^0, ..., x^{d-1}}.
inline std::vector<std::vector<QLaurent>> structure_constants(const MonicRelation& rel) {
    const auto d = static_cast<std::int64_t>(rel.coeffs.size());
    std::vector<std::vector<QLaurent>> c(d, std::vector<QLaurent>(d));
    for (std::int64_t i = 0; i < d; ++i)
        for (std::int64_t j = 0; j < d; ++j) {
            QLaurent m;
            m[{i + j, 0}] = 1;
            c[i][j] = reduce_modulo(std::move(m), rel);
        }
    return c;
}

inline std::string qlaurent_text(const QLaurent& f, const std::string& x = "z") {
    if (f.empty()) return "0";
    std::string out;
    for (const auto& [k, c] : f) {
        std::string t = detail::rational_text(c);
        std::string mono;
        if (k.second != 0) mono += "q" + (k.second == 1 ? std::string() : "^" + std::to_string(k.second));
        if (k.first != 0) mono += (mono.empty() ? "" : " ") + x + (k.first == 1 ? std::string() : "^" + std::to_string(k.first));
        if (!mono.empty()) t = (c == 1 ? mono : t + " " + mono);
        out += (out.empty() ? "" : " + ") + t;
    }
    return out;
}

/// Structure constants of Jac(z + q/z) on {1, z} against QH(P^1) = C[H]/(H^2 - q) on {1, H}.
inline CheckResult jacobian_vs_qh() {
    const auto jac = structure_constants(jacobian_relation(p1_superpotential()));
    QLaurent q;
    q[{0, 1}] = 1;
    const auto qh = structure_constants(MonicRelation{{q, QLaurent{}}});
    if (jac.size() != qh.size())
        return CheckResult::fail({"rank", std::to_string(jac.size()), std::to_string(qh.size()), std::nullopt},
                                 "ranks differ");
    for (std::size_t i = 0; i < jac.size(); ++i)
        for (std::size_t j = 0; j < jac.size(); ++j)
            if (jac[i][j] != qh[i][j])
                return CheckResult::fail({"e" + std::to_string(i) + "*e" + std::to_string(j), qlaurent_text(jac[i][j]),
                                          qlaurent_text(qh[i][j], "H"), std::nullopt},
                                         "structure constants differ");
    return CheckResult::ok("z*z = " + qlaurent_text(jac[1][1]) + " on basis {1, z}");
}

} // namespace thetaglue
