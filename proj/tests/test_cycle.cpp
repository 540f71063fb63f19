#include <catch2/catch_amalgamated.hpp>

#include "thetaglue/cycle.hpp"
#include "thetaglue/glue.hpp"

using namespace thetaglue;
using Catch::Matchers::WithinAbs;

namespace {

const complex I{0.0, 1.0};

std::vector<complex> halves(int n) { return std::vector<complex>(static_cast<std::size_t>(n), 0.5 * I); }

} // namespace

TEST_CASE("make_cycle", "[cycle]") {
    const auto c2 = make_cycle({0.1 + 0.5 * I, 0.3 + 0.7 * I});
    const auto p = make_params(0.1 + 0.5 * I, 0.3 + 0.7 * I);
    REQUIRE(std::abs(c2.qs[0] - p.q1) <= 1e-16);
    REQUIRE(std::abs(c2.qs[1] - p.q2) <= 1e-16);
    REQUIRE(std::abs(c2.q - p.q) <= 1e-17);
    REQUIRE(c2.meta.denom == 16);
    REQUIRE_FALSE(c2.degenerate);

    const auto c3 = make_cycle(halves(3));
    REQUIRE_THAT(c3.q.real(), WithinAbs(8.0700e-5, 1e-8));
    REQUIRE(std::abs(c3.q - std::exp(-3 * pi)) / std::exp(-3 * pi) < 1e-14);
    REQUIRE(make_cycle(halves(1)).degenerate);
    REQUIRE_THROWS_AS(make_cycle({}), domain_error);
    REQUIRE_THROWS_AS(make_cycle({0.5 * I, 0.5}), domain_error);
}

TEST_CASE("cycle_product", "[cycle]") {
    SECTION("n = 2 reproduces W'_1 and W'_2 term for term") {
        const RingMeta R = RingMeta::for_cycle(2);
        for (int k : {1, 2}) REQUIRE(cycle_product(R, k, 12) == convert_ring(wprime_series(k, 12), R));
    }
    SECTION("n = 3, k = 2 closed form") {
        const RingMeta R = RingMeta::for_cycle(3);
        const Monomial y = Monomial::q_total(R) * (Monomial::z(R) / Monomial::q(R, 1)).pow(2) / Monomial::q(R, 2);
        REQUIRE(cycle_jtp_variable(R, 2) == y);
        const auto lhs = cycle_product(R, 2, 12);
        const auto rhs = series_invert_unit(eta_product(R, 2, 12)) * jtp_sum(y, 12);
        REQUIRE(compare_series(lhs, rhs).passed);
    }
    SECTION("closed form for n <= 5") {
        for (int n = 1; n <= 5; ++n) {
            const RingMeta R = RingMeta::for_cycle(n);
            for (int k = 1; k <= n; ++k) {
                INFO("n=" << n << " k=" << k);
                REQUIRE(cycle_closed_form_check(R, k, 12).passed);
            }
        }
    }
    SECTION("errors") {
        const RingMeta R = RingMeta::for_cycle(3);
        REQUIRE_THROWS_AS(cycle_product(R, 4, 12), domain_error);
        REQUIRE_THROWS_AS(cycle_product(R, 0, 12), domain_error);
        REQUIRE_THROWS_AS(cycle_product(R, 1, 1), domain_error);
    }
}

TEST_CASE("cycle_automorphy", "[cycle]") {
    SECTION("n = 3 in global variables") {
        const RingMeta R = RingMeta::for_cycle(3);
        const Monomial q = Monomial::q_total(R);
        for (int k = 1; k <= 3; ++k) {
            const Monomial zk = cycle_chart(R, k);
            REQUIRE(cycle_automorphy(R, k, 12) == Monomial::q(R, k) * q.pow(-2) * zk.pow(-2));
        }
    }
    SECTION("z-degree -2 for all n <= 5") {
        for (int n = 1; n <= 5; ++n) {
            const RingMeta R = RingMeta::for_cycle(n);
            std::vector<Monomial> autos;
            for (int k = 1; k <= n; ++k) {
                autos.push_back(cycle_automorphy(R, k, 12));
                REQUIRE(autos.back().z_exponent() == -2);
            }
            const auto p = translation_points(autos);
            REQUIRE(p.front().is_one());
            for (int k = 1; k < n; ++k) REQUIRE(p[k] / p[k - 1] == Monomial::q(R, k));
        }
    }
    SECTION("translation points for n = 3") {
        const RingMeta R = RingMeta::for_cycle(3);
        std::vector<Monomial> autos;
        for (int k = 1; k <= 3; ++k) autos.push_back(cycle_automorphy(R, k, 12));
        const auto p = translation_points(autos);
        REQUIRE(p[1] == Monomial::q(R, 1));
        REQUIRE(p[2] == Monomial::q(R, 1) * Monomial::q(R, 2));
    }
    SECTION("n = 2 agrees with the glue sections") {
        const RingMeta R = RingMeta::for_cycle(2);
        for (int k : {1, 2}) {
            const Monomial g = corrected_automorphy(k, Monomial::one(glue_ring()), 12);
            const auto back = convert_ring(TruncatedSeries::from_monomial(g, 40), R);
            REQUIRE(cycle_automorphy(R, k, 12) == back.monomials().front());
        }
    }
}

TEST_CASE("cycle numerics", "[cycle]") {
    const auto c = make_cycle({0.1 + 0.5 * I, 0.3 + 0.7 * I});
    const auto p = make_params(0.1 + 0.5 * I, 0.3 + 0.7 * I);
    for (complex z : {complex(0.5, 0.2), complex(-0.03, 0.1)})
        for (int k : {1, 2}) {
            const complex a = cycle_wprime_num(c, k, z).value, b = wprime_num(k, z, p).value;
            REQUIRE(std::abs(a - b) / std::abs(b) < 1e-13);
        }
    const auto c3 = make_cycle(halves(3));
    const RingMeta R = c3.meta;
    const auto exact = cycle_product(R, 2, 24);
    for (complex z : {complex(0.4, 0.3), complex(-0.6, 0.1)}) {
        const complex num = cycle_wprime_num(c3, 2, z).value;
        REQUIRE(std::abs(series_value(exact, c3.taus, z) - num) / std::abs(num) < 1e-10);
    }
}

TEST_CASE("cycle_report", "[cycle]") {
    SECTION("n = 2 asserts the basis claim") {
        const auto rep = cycle_report(make_cycle(halves(2)));
        REQUIRE(rep.rank == 2);
        REQUIRE(rep.sections[0].theta->a == rational(1, 2));
        REQUIRE(rep.sections[1].theta->a == 0);
        REQUIRE_FALSE(rep.sections[0].theta->local_shift);
        REQUIRE(rep.shared_corrected_automorphy);
        REQUIRE(rep.basis_claim == true);
        REQUIRE(rep.passed);
        const RingMeta R = RingMeta::for_cycle(2);
        const Monomial u = Monomial::q_total(R, rational(1, 4)) * Monomial::q(R, 1, rational(-1, 2)) * Monomial::z(R);
        REQUIRE(rep.sections[0].theta->unit == u);
        REQUIRE(rep.sections[1].theta->unit.is_one());
    }
    SECTION("n = 3 is informational") {
        const auto rep = cycle_report(make_cycle(halves(3)));
        REQUIRE_FALSE(rep.basis_claim.has_value());
        REQUIRE(rep.passed);
        const RingMeta R = RingMeta::for_cycle(3);
        for (const auto& d : rep.sections) {
            REQUIRE(d.automorphy.z_exponent() == -2);
            REQUIRE(d.closed_form.passed);
            REQUIRE(d.theta.has_value());
        }
        REQUIRE(rep.sections[1].translation_point == Monomial::q(R, 1));
        REQUIRE(rep.sections[2].translation_point == Monomial::q(R, 1) * Monomial::q(R, 2));
        REQUIRE(rep.sections[0].theta->a == rational(1, 2));
        REQUIRE(rep.sections[1].theta->local_shift);
        REQUIRE_FALSE(rep.notes.empty());
    }
    SECTION("n = 1") {
        const auto rep = cycle_report(make_cycle(halves(1)));
        REQUIRE(rep.degenerate);
        REQUIRE(rep.sections.size() == 1);
        REQUIRE(rep.rank == 1);
    }
    SECTION("coinciding samples") {
        const auto c = make_cycle(halves(2));
        REQUIRE_THROWS_AS(cycle_report(c, 12, {0.5, 0.5 * c.q}), domain_error);
        REQUIRE_THROWS_AS(cycle_report(c, 12, {0.5}), domain_error);
    }
}
