// Acceptance suite: one PASS/FAIL line per criterion.
// Exit status is 0 only if every criterion passes. With --expect-red LIST (comma-separated
// criterion numbers) the listed criteria must fail and all others must pass.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "thetaglue/cycle.hpp"
#include "thetaglue/glue.hpp"
#include "thetaglue/lgmodel.hpp"

using namespace thetaglue;

namespace {

const complex I{0.0, 1.0};

struct Outcome {
    bool passed;
    std::string detail;
};

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

Outcome jtp_identity() {
    const RingMeta R = glue_ring();
    const Monomial z2 = Monomial::z(R, 2);
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (const Monomial& y : {Monomial::q(R, 2) * z2, z2 / Monomial::q(R, 1)}) {
        const CheckResult r = jtp_check(y, 40);
        ok = ok && r.passed;
        if (!r.passed) detail += "y = " + y.to_string() + ": " + r.detail + "; ";
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && s < 10.0;
    return {ok, detail + "weight 40, both y, " + sci(s) + " s"};
}

Outcome chain_two() {
    const auto rep = chain_verify(2, 16);
    bool ok = rep.passed && rep.stages.size() == 3;
    for (const auto& st : rep.stages) ok = ok && st.unit && st.unit->is_one();
    return {ok, "units 1, 1, 1 at weight 16"};
}

Outcome chain_one() {
    const auto rep = chain_verify(1, 16);
    if (rep.stages.size() != 3 || !rep.stages[0].unit || !rep.stages[1].unit || !rep.stages[2].unit)
        return {false, "a stage is not proportional"};
    const Monomial u = *rep.stages[2].unit;
    const Monomial direct = extract_unit(theta_form_series(1, 16), wprime_series(1, 16));
    const Monomial one = Monomial::one(glue_ring());
    const bool ok = rep.stages[0].unit->is_one() && rep.stages[1].unit->is_one() && u.z_exponent() == 1 &&
                    u == direct && corrected_automorphy(1, u, 16) == corrected_automorphy(2, one, 16);
    return {ok, "u = " + u.to_string() + ", end-to-end " + direct.to_string() + ", shared automorphy " +
                    corrected_automorphy(1, u, 16).to_string()};
}

Outcome descent() {
    bool ok = true;
    std::string detail;
    for (const auto& p : {make_params(0.5 * I, 0.5 * I), make_params(0.4 * I, 0.7 * I)}) {
        const CoveringMap m = build_covering(p);
        DescentOptions opt;
        opt.cross_points = 0;
        const auto good = descent_check(m, opt), bad = descent_check(strip_unit(m), opt);
        ok = ok && good.result.passed && good.max_chordal < 1e-9 && !bad.result.passed;
        detail += "max " + sci(good.max_chordal) + ", control " + sci(bad.max_chordal) + "; ";
    }
    return {ok, detail + "100 samples each"};
}

Outcome degree_two() {
    const KahlerParams p = make_params(0.5 * I, 0.5 * I);
    const CoveringMap m = build_covering(p);
    const std::array<std::array<complex, 2>, 5> combos{{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0},
                                                         {1.0, complex(-0.3, -0.7)}, {complex(-2.0, 0.5), 1.0}}};
    bool ok = true;
    std::string counts;
    for (const auto& c : combos) {
        const Evaluator f = [&](complex z) {
            return c[0] * section_value(m, 1, z).value + c[1] * section_value(m, 2, z).value;
        };
        const int n = count_zeros(f, p);
        ok = ok && n == 2;
        counts += (counts.empty() ? "" : ",") + std::to_string(n);
    }
    return {ok, "zero counts " + counts};
}

Outcome ramification() {
    const auto rep = ramification_analysis(make_params(0.5 * I, 0.5 * I), 1e-8);
    bool ok = rep.points.size() == 4 && rep.max_prediction_error < 1e-8 && rep.max_critical_error < 1e-8;
    const double expect[4] = {0.2078796, -0.2078796, 0.0089833, -0.0089833};
    for (std::size_t i = 0; ok && i < 4; ++i) ok = std::abs(rep.points[i] - expect[i]) < 1e-7;
    return {ok, std::to_string(rep.points.size()) + " points, prediction error " + sci(rep.max_prediction_error) +
                    ", critical error " + sci(rep.max_critical_error)};
}

Outcome local_model() {
    const CoveringMap m = build_covering(make_params(0.5 * I, 0.5 * I));
    bool ok = true;
    std::string detail;
    for (int index : {1, 2}) {
        const auto rep = fiber_match_check(m, index);
        ok = ok && rep.result.passed && rep.matched == 200;
        detail += "index " + std::to_string(index) + ": " + std::to_string(rep.matched) + " matched, max " +
                  sci(rep.max_matched) + ", unmatched min " + sci(rep.min_unmatched) + "; ";
    }
    return {ok, detail};
}

Outcome cross_oracle() {
    const KahlerParams p = make_params(0.5 * I, 0.5 * I);
    const std::array<complex, 2> taus{p.tau1, p.tau2};
    const TruncatedSeries w1 = wprime_series(1, 32), w2 = wprime_series(2, 32);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const complex z = std::polar(std::pow(std::abs(p.q), 0.25 * u(rng)), 2.0 * pi * u(rng));
        for (int parity : {1, 2}) {
            const complex exact = series_value(parity == 1 ? w1 : w2, taus, z);
            const complex num = wprime_num(parity, z, p).value;
            worst = std::max(worst, std::abs(exact - num) / std::abs(num));
        }
    }
    const complex at_one = wprime_num(2, 1.0, p).value;
    const bool ok = worst < 1e-10 && std::abs(at_one - 1.043298) < 1e-5;
    std::ostringstream os;
    os.precision(8);
    os << "10 points, worst relative " << sci(worst) << "; W'_2(1) = " << at_one.real();
    return {ok, os.str()};
}

Outcome quantum_cohomology() {
    const CheckResult r = jacobian_vs_qh();
    QLaurent q;
    q[{0, 1}] = 1;
    return {r.passed && jacobian_reduce(2) == q, r.detail};
}

Outcome product_formula() {
    bool ok = true;
    std::string failing;
    for (int k : {1, 2})
        for (int j = -4; j <= 4; ++j) {
            const auto rep = product_formula_check(j, k);
            if (!rep.result.passed) {
                ok = false;
                if (failing.empty())
                    failing = "first failure j=" + std::to_string(j) + " k=" + std::to_string(k) + ": measured " +
                              (rep.measured_prefactor ? rep.measured_prefactor->to_string() : std::string("none")) +
                              ", displayed " + rep.displayed_prefactor.to_string();
            }
        }
    return {ok, ok ? "all 18 cases exact" : failing + " (only j = 0 holds)"};
}

Outcome cycles() {
    bool ok = true;
    const RingMeta R2 = RingMeta::for_cycle(2);
    for (int k : {1, 2}) ok = ok && cycle_product(R2, k, 12) == convert_ring(wprime_series(k, 12), R2);
    for (int n : {3, 5}) {
        const RingMeta R = RingMeta::for_cycle(n);
        std::vector<Monomial> autos;
        for (int k = 1; k <= n; ++k) {
            ok = ok && cycle_closed_form_check(R, k, 12).passed;
            autos.push_back(cycle_automorphy(R, k, 12));
            ok = ok && autos.back().z_exponent() == -2;
        }
        const auto p = translation_points(autos);
        for (int k = 1; k < n; ++k) ok = ok && p[k] / p[k - 1] == Monomial::q(R, k);
    }
    return {ok, "n = 2 term for term at weight 12; n = 3, 5 closed form, z-degree -2, translations"};
}

Outcome affine() {
    bool ok = true;
    double trip = 0.0, seam = 0.0;
    for (const auto& p : {make_params(0.5 * I, 0.5 * I), make_params(0.4 * I, 0.7 * I), make_params(0.2 + 0.3 * I, -0.1 + 0.6 * I)}) {
        const auto [i1, i2, circle] = glue_intervals(p);
        const double expected = p.tau1.imag() + p.tau2.imag();
        ok = ok && std::abs(circle.circumference - expected) <= 1e-12 * expected;
        for (const auto& iv : {i1, i2}) {
            const auto back = interval_for(annulus_for(iv));
            trip = std::max({trip, std::abs(back.lo - iv.lo), std::abs(back.hi - iv.hi)});
        }
        for (int index = -6; index <= 6; ++index) {
            const Annulus a = lg_family(index, p).z_plane, back = annulus_for(interval_for(a));
            trip = std::max({trip, std::abs(back.r_in - a.r_in) / a.r_in, std::abs(back.r_out - a.r_out) / a.r_out});
            if (index < 6) seam = std::max(seam, std::abs(a.r_in - lg_family(index + 1, p).z_plane.r_out) / a.r_in);
        }
    }
    ok = ok && trip <= 1e-12 && seam <= 1e-12;
    return {ok, "round trip " + sci(trip) + ", seam " + sci(seam) + " over index -6..6"};
}

std::set<int> parse_list(const std::string& s) {
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
    return out;
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> expect_red;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--expect-red" && i + 1 < argc) {
            expect_red = parse_list(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--expect-red N,M,...]\n";
            return 2;
        }
    }

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"Jacobi triple product", jtp_identity},
        {"W'_2 chain", chain_two},
        {"W'_1 chain", chain_one},
        {"descent", descent},
        {"degree two", degree_two},
        {"ramification", ramification},
        {"local model", local_model},
        {"exact/numeric cross-oracle", cross_oracle},
        {"Jacobian ring vs QH(P^1)", quantum_cohomology},
        {"chart product formula", product_formula},
        {"n-cycle", cycles},
        {"affine gluing", affine},
    };

    const auto start = std::chrono::steady_clock::now();
    int failures = 0, unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        Outcome o{false, ""};
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.passed ? "PASS" : "FAIL") << " " << n << " " << criteria[i].first << ": " << o.detail << "\n";
        if (!o.passed) ++failures;
        if (o.passed == expect_red.count(n) > 0) ++unexpected;
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << failures << " of " << criteria.size() << " criteria failed, " << sci(s) << " s\n";
    if (!expect_red.empty()) {
        std::cout << (unexpected == 0 ? "outcome matches the expected red set" : "outcome differs from the expected red set")
                  << "\n";
        return unexpected == 0 ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
