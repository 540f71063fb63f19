#pragma once

// Double-precision theta functions with characteristics, the Dedekind eta
// function, the products W'_1 and W'_2, argument-principle zero counts on the
// fundamental annulus, and the ramification search for the theta pair.
//
// Tail bounds. A theta sum is truncated once the ratio r of consecutive term
// moduli is below 1 in both directions; the remaining terms are dominated by
// a geometric series, |tail| <= |t| r / (1 - r). Derivative terms carry an
// extra |2 pi (n+a)|^d, absorbed by r (1 + 1/|n+a|)^d. Products are bounded
// through |prod (1+u_i) - 1| <= exp(sum |u_i|) - 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "thetaglue/params.hpp"
#include "thetaglue/qseries.hpp"

namespace thetaglue {

struct EvalResult {
    complex value;
    double error_bound = 0.0;
};

struct SumTolerance {
    double relative = 1e-14;
    double absolute = 1e-30;
};

namespace detail {

inline void require_finite(complex v, const char* what) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw domain_error(std::string(what) + " overflowed double precision");
}

inline void require_upper_half_plane(complex tau, const char* what) {
    if (!(tau.imag() > 0.0)) throw domain_error(std::string(what) + " needs Im(tau) > 0");
}

} // namespace detail

/// theta_{a,b}(w, tau') and its first two w-derivatives from one lattice sum.
inline std::array<EvalResult, 3> theta_num_derivatives(double a, double b, complex w, complex tau_p,
                                                       SumTolerance tol = {}) {
    detail::require_upper_half_plane(tau_p, "theta_num");
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const complex pi_i{0.0, pi};
    auto term = [&](double s) { return std::exp(pi_i * s * s * tau_p + two_pi_i * s * (w + b)); };
    // log |t_{n+dir}| - log |t_n| at s = n + a
    auto log_ratio = [&](double s, int dir) {
        return -pi * tau_p.imag() * (2.0 * dir * s + 1.0) - dir * 2.0 * pi * w.imag();
    };

    std::array<complex, 3> sum{};
    std::array<double, 3> abs_sum{}, tail{};
    auto accumulate = [&](double s) {
        const complex t = term(s);
        const complex d = two_pi_i * s;
        const std::array<complex, 3> parts{t, d * t, d * d * t};
        for (int k = 0; k < 3; ++k) {
            sum[k] += parts[k];
            abs_sum[k] += std::abs(parts[k]);
        }
    };

    const long centre = std::lround(-w.imag() / tau_p.imag() - a);
    accumulate(static_cast<double>(centre) + a);
    constexpr long max_terms = 100000;
    for (int dir : {1, -1}) {
        for (long n = centre, steps = 0;; n += dir, ++steps) {
            if (steps > max_terms) throw domain_error("theta_num: lattice sum did not converge");
            const double s = static_cast<double>(n) + a;
            const double next_s = s + dir;
            const double r = std::exp(log_ratio(s, dir));
            // tail from n + dir onwards; the ratio only shrinks moving outward
            if (r < 1.0 && dir * next_s >= 1.0) {
                const double first = std::abs(term(s)) * r;
                std::array<double, 3> bound{};
                bool small = true;
                for (int k = 0; k < 3 && small; ++k) {
                    const double rho = r * std::pow(1.0 + 1.0 / std::abs(next_s), k);
                    if (rho >= 1.0) {
                        small = false;
                        break;
                    }
                    bound[k] = first * std::pow(2.0 * pi * std::abs(next_s), k) / (1.0 - rho);
                    small = bound[k] < std::max(tol.relative * std::abs(sum[k]), tol.absolute);
                }
                if (small) {
                    for (int k = 0; k < 3; ++k) tail[k] += bound[k];
                    break;
                }
            }
            accumulate(next_s);
        }
    }

    std::array<EvalResult, 3> out;
    for (int k = 0; k < 3; ++k) {
        detail::require_finite(sum[k], "theta_num");
        out[k] = {sum[k], tail[k] + 4.0 * eps * abs_sum[k]};
    }
    return out;
}

/// theta_{a,b}(w, tau') = sum_n exp(pi i (n+a)^2 tau' + 2 pi i (n+a)(w+b)), or its w-derivative.
inline EvalResult theta_num(double a, double b, complex w, complex tau_p, bool derivative = false,
                            SumTolerance tol = {}) {
    return theta_num_derivatives(a, b, w, tau_p, tol)[derivative ? 1 : 0];
}

/// eta(tau) = e^{pi i tau / 12} prod_{m>=1} (1 - e^{2 pi i tau m}).
inline EvalResult eta_num(complex tau, double rel_tol = 1e-14) {
    detail::require_upper_half_plane(tau, "eta_num");
    const complex x = nome(tau);
    const double ax = std::abs(x);
    complex prod = 1.0, xm = 1.0;
    double tail = 0.0;
    for (int m = 1;; ++m) {
        xm *= x;
        prod *= 1.0 - xm;
        const double next = std::pow(ax, m + 1);
        const double s = next / ((1.0 - ax) * (1.0 - next));
        tail = std::expm1(s);
        if (tail < rel_tol / 2 || m > 100000) break;
    }
    const complex value = std::exp(complex(0.0, pi) * tau / 12.0) * prod;
    detail::require_finite(value, "eta_num");
    return {value, std::abs(value) * (tail + 8.0 * std::numeric_limits<double>::epsilon())};
}

/// The two monomials of the i-th W' factor pair, divided by q^{2i-1}.
inline std::pair<complex, complex> wprime_factor_pair(int parity, complex z, const KahlerParams& p) {
    if (parity == 1) return {1.0 / (p.q2 * z * z), p.q2 * z * z};
    if (parity == 2) return {p.q1 / (z * z), z * z / p.q1};
    throw domain_error("W' parity must be 1 or 2");
}

/// W'_k(z) = prod_{i>=1} (1 + q^{2i-1} A)(1 + q^{2i-1} B) with (A, B) from wprime_factor_pair.
inline EvalResult wprime_num(int parity, complex z, const KahlerParams& p, double tol = 1e-15) {
    if (z == complex(0.0, 0.0)) throw domain_error("W' is undefined at z = 0");
    const auto [A, B] = wprime_factor_pair(parity, z, p);
    const double aq = std::abs(p.q);
    if (!(aq < 1.0)) throw domain_error("W' needs |q| < 1");
    const double scale = std::abs(A) + std::abs(B);
    complex prod = 1.0, qpow = p.q;  // q^{2i-1}
    const complex q2 = p.q * p.q;
    double tail = 0.0;
    for (int i = 1;; ++i) {
        prod *= (1.0 + qpow * A) * (1.0 + qpow * B);
        qpow *= q2;
        const double next = std::abs(qpow) * std::max(std::abs(A), std::abs(B));
        tail = std::expm1(std::abs(qpow) * scale / (1.0 - aq * aq));
        if ((next < tol * 1e-2 && tail < tol) || i > 100000) break;
    }
    detail::require_finite(prod, "wprime_num");
    return {prod, std::abs(prod) * (tail + 16.0 * std::numeric_limits<double>::epsilon())};
}

/// Numerical value of an exact monomial: q_j^r = e^{2 pi i r tau_j}.
inline complex monomial_value(const Monomial& m, std::span<const complex> taus, complex z) {
    complex phase = 0.0;
    for (int j = 0; j < m.meta().vars; ++j)
        phase += static_cast<double>(m.key().q[j]) / static_cast<double>(m.meta().denom) * taus[j];
    return m.coeff().convert_to<double>() * std::exp(two_pi_i * phase) * std::pow(z, static_cast<int>(m.z_exponent()));
}

inline complex series_value(const TruncatedSeries& s, std::span<const complex> taus, complex z) {
    complex sum = 0.0;
    for (const auto& m : s.monomials()) sum += monomial_value(m, taus, z);
    return sum;
}

/// z q^{-k} in the fundamental domain |q| < |z| <= 1.
inline complex reduce_mod_q(complex z, complex q) {
    if (z == complex(0.0, 0.0)) throw domain_error("cannot reduce z = 0 modulo q");
    const double t = std::log(std::abs(z)) / std::log(std::abs(q));
    auto k = static_cast<int>(std::floor(t));
    complex r = z * std::pow(q, -k);
    // repair rounding at the two boundary circles
    if (std::abs(r) > 1.0 + 1e-15) r /= q;
    else if (std::abs(r) <= std::abs(q)) r *= 1.0 / q;
    return r;
}

using Evaluator = std::function<complex(complex)>;

struct ZeroCountOptions {
    double first_offset = 0.0137;  // contour position as a fraction of the log-period
    double nudge = 0.0613;
    int max_retries = 8;
    double vanishing = 1e-10;      // min |f| / max |f| accepted on a contour
};

namespace detail {

/// Winding number of f around |z| = r, or nullopt when the contour is unusable.
inline std::optional<double> winding(const Evaluator& f, double radius, double vanishing) {
    for (std::size_t samples = 256; samples <= (std::size_t{1} << 18); samples *= 2) {
        double total = 0.0, fmin = std::numeric_limits<double>::infinity(), fmax = 0.0;
        bool smooth = true;
        complex prev = f(radius);
        for (std::size_t j = 1; j <= samples && smooth; ++j) {
            const double theta = 2.0 * pi * static_cast<double>(j) / static_cast<double>(samples);
            const complex cur = f(std::polar(radius, theta));
            fmin = std::min(fmin, std::abs(cur));
            fmax = std::max(fmax, std::abs(cur));
            const double step = std::arg(cur / prev);
            if (std::abs(step) > 0.5) smooth = false;
            total += step;
            prev = cur;
        }
        if (!std::isfinite(fmin) || fmin <= vanishing * fmax) return std::nullopt;
        if (smooth) return total / (2.0 * pi);
    }
    return std::nullopt;
}

} // namespace detail

/// Zeros of f in {|q| < |z| <= 1}: winding on the outer circle minus winding
/// on the inner circle, the two radii differing by the factor |q|.
inline int count_zeros(const Evaluator& f, const KahlerParams& p, ZeroCountOptions opt = {}) {
    const double period = -std::log(std::abs(p.q));
    for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
        const double offset = std::fmod(opt.first_offset + attempt * opt.nudge, 1.0) * period;
        const double r_out = std::exp(-offset), r_in = r_out * std::abs(p.q);
        auto w_out = detail::winding(f, r_out, opt.vanishing);
        auto w_in = detail::winding(f, r_in, opt.vanishing);
        if (!w_out || !w_in) continue;
        const double ro = std::round(*w_out), ri = std::round(*w_in);
        if (std::abs(*w_out - ro) >= 0.1 || std::abs(*w_in - ri) >= 0.1) continue;
        return static_cast<int>(ro - ri);
    }
    throw contour_failure("no usable contour pair after " + std::to_string(opt.max_retries) + " nudges");
}

/// The theta pair theta_{1/2,0}(w, 2 tau), theta_{0,0}(w, 2 tau) with w = 2 zeta - tau1.
struct ThetaPairNumeric {
    KahlerParams params;

    [[nodiscard]] complex w_of(complex z) const { return 2.0 * std::log(z) / two_pi_i - params.tau1; }
    [[nodiscard]] complex z_of(complex w) const { return std::exp(two_pi_i * (w + params.tau1) / 2.0); }
    [[nodiscard]] std::array<EvalResult, 3> first(complex w) const {
        return theta_num_derivatives(0.5, 0.0, w, 2.0 * params.tau);
    }
    [[nodiscard]] std::array<EvalResult, 3> second(complex w) const {
        return theta_num_derivatives(0.0, 0.0, w, 2.0 * params.tau);
    }
    /// Wronskian in zeta (d/dzeta = 2 d/dw) and its zeta-derivative.
    [[nodiscard]] std::pair<complex, complex> wronskian(complex w) const {
        const auto t1 = first(w), t2 = second(w);
        const complex f = t1[0].value * t2[1].value - t2[0].value * t1[1].value;
        const complex df = t1[0].value * t2[2].value - t2[0].value * t1[2].value;
        return {2.0 * f, 4.0 * df};
    }
};

/// Zeros of the Wronskian of the theta pair on C^x / q^Z, by Newton iteration
/// from a fixed 8x8 log-polar seed grid; sorted by decreasing modulus, then
/// by argument in [0, 2 pi).
inline std::vector<complex> find_ramification(const KahlerParams& p, double tol = 1e-8) {
    detail::require_upper_half_plane(p.tau, "find_ramification");
    const ThetaPairNumeric pair{p};
    const double aq = std::abs(p.q);
    std::vector<complex> roots;
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            const complex seed = std::polar(std::pow(aq, (i + 0.5) / 8.0), 2.0 * pi * (j + 0.5) / 8.0);
            complex zeta = std::log(seed) / two_pi_i;
            bool converged = false;
            for (int it = 0; it < 80; ++it) {
                const auto [f, df] = pair.wronskian(2.0 * zeta - p.tau1);
                if (df == complex(0.0, 0.0)) break;
                complex step = f / df;
                if (std::abs(step) > 0.05) step *= 0.05 / std::abs(step);
                zeta -= step;
                if (std::abs(step) < 1e-14 * (1.0 + std::abs(zeta))) {
                    converged = true;
                    break;
                }
            }
            if (!converged) continue;
            const auto [f, df] = pair.wronskian(2.0 * zeta - p.tau1);
            if (!(std::abs(f) < tol)) continue;
            roots.push_back(reduce_mod_q(std::exp(two_pi_i * zeta), p.q));
        }
    }

    auto angle = [](complex z) {
        double a = std::arg(z);
        return a < 0 ? a + 2.0 * pi : a;
    };
    std::sort(roots.begin(), roots.end(), [&](complex x, complex y) {
        if (std::abs(std::abs(x) - std::abs(y)) > tol) return std::abs(x) > std::abs(y);
        return angle(x) < angle(y);
    });
    std::vector<complex> distinct;
    for (complex r : roots)
        if (std::none_of(distinct.begin(), distinct.end(), [&](complex d) { return std::abs(d - r) < tol; }))
            distinct.push_back(r);
    if (distinct.size() < 4)
        throw convergence_failure("found " + std::to_string(distinct.size()) + " ramification points, expected 4");
    return distinct;
}

} // namespace thetaglue
