#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "thetaglue/qseries.hpp"

using namespace thetaglue;

namespace {

const RingMeta R{2, 4, -8};

Monomial q1(const rational& e = 1) { return Monomial::q(R, 1, e); }
Monomial q2(const rational& e = 1) { return Monomial::q(R, 2, e); }
Monomial qq(const rational& e = 1) { return Monomial::q_total(R, e); }
Monomial z(std::int64_t e = 1) { return Monomial::z(R, e); }
Monomial neg(const Monomial& m) { return Monomial(m.meta(), -m.coeff(), m.key()); }

TruncatedSeries S(std::initializer_list<Monomial> ms, std::int64_t order) {
    std::vector<Monomial> v(ms);
    return TruncatedSeries::from_monomials(R, order, v);
}
TruncatedSeries one(std::int64_t order) { return TruncatedSeries::one(R, order); }

// Factors of W'_2 in the q-form: q^{2i-1} q1 / z^2 and q^{2i-1} z^2 / q1.
FactorStream wprime2_stream() {
    std::vector<FactorStream> fam;
    fam.push_back(geometric_stream(qq() * q1() * z(-2), qq(2)));
    fam.push_back(geometric_stream(qq() * q1(-1) * z(2), qq(2)));
    return merge_streams(std::move(fam));
}
FactorStream wprime1_stream() {
    std::vector<FactorStream> fam;
    fam.push_back(geometric_stream(qq() * q2(-1) * z(-2), qq(2)));
    fam.push_back(geometric_stream(qq() * q2() * z(2), qq(2)));
    return merge_streams(std::move(fam));
}

// Random series with non-negative q-exponents on the quarter lattice.
TruncatedSeries random_series(std::mt19937_64& rng, std::int64_t order, int max_terms = 6) {
    std::uniform_int_distribution<int> nterms(0, max_terms), qe(0, 12), ze(-3, 3), cn(-5, 5), cd(1, 3);
    TruncatedSeries s(R, order);
    int n = nterms(rng);
    for (int i = 0; i < n; ++i) {
        ExponentKey k{{qe(rng), qe(rng)}, ze(rng)};
        int c = cn(rng);
        if (c == 0) c = 1;
        s.add_term(k, rational(c, cd(rng)));
    }
    return s;
}

} // namespace

TEST_CASE("series_combine", "[qseries]") {
    SECTION("difference of squares") {
        auto f = S({Monomial::one(R), q1() * z(-2)}, 4);
        auto g = S({Monomial::one(R), neg(q1() * z(-2))}, 4);
        REQUIRE(series_combine(f, g, CombineOp::mul) == S({Monomial::one(R), neg(q1(2) * z(-4))}, 4));
    }
    SECTION("additive identity") {
        auto f = S({q1(), q2(rational(1, 4)) * z(3)}, 6);
        REQUIRE(series_combine(f, TruncatedSeries::zero(R, 6), CombineOp::add) == f);
    }
    SECTION("two eta factors truncate q^6") {
        // (1 - q^2)(1 - q^4) = 1 - q^2 - q^4 + q^6; weight(q^6) = 12 > 8.
        auto f = S({Monomial::one(R), neg(qq(2))}, 8);
        auto g = S({Monomial::one(R), neg(qq(4))}, 8);
        REQUIRE(f * g == S({Monomial::one(R), neg(qq(2)), neg(qq(4))}, 8));
    }
    SECTION("ring mismatch") {
        TruncatedSeries other(RingMeta{2, 8, -8}, 4);
        REQUIRE_THROWS_AS(one(4) + other, ring_mismatch);
        REQUIRE_THROWS_AS(one(4) * other, ring_mismatch);
    }
}

TEST_CASE("series_invert_unit", "[qseries]") {
    SECTION("geometric series") {
        auto inv = series_invert_unit(S({Monomial::one(R), neg(qq())}, 9));
        REQUIRE(inv == S({Monomial::one(R), qq(), qq(2), qq(3), qq(4)}, 9));
    }
    SECTION("monomial inverse") {
        REQUIRE(series_invert_unit(S({q1() * z(2)}, 8)) == S({q1(-1) * z(-2)}, 8));
    }
    SECTION("partitions into parts 2 and 4") {
        const std::int64_t N = 8;
        auto f = S({Monomial::one(R), neg(qq(2))}, N) * S({Monomial::one(R), neg(qq(4))}, N);
        auto inv = series_invert_unit(f);
        // oracle: coefficient of q^j = number of ways j = 2a + 4b
        for (std::int64_t j = 0; 2 * j <= N; ++j) {
            int count = 0;
            for (int a = 0; 2 * a <= j; ++a)
                for (int b = 0; 2 * a + 4 * b <= j; ++b)
                    if (2 * a + 4 * b == j) ++count;
            CHECK(inv.coefficient(qq(j).key()) == count);
        }
        REQUIRE(inv == S({Monomial::one(R), qq(2), Monomial(R, 2, qq(4).key())}, N));
        REQUIRE((f * inv) == one(N));
    }
    SECTION("lowest-weight part must be a single monomial") {
        REQUIRE_THROWS_AS(series_invert_unit(S({Monomial::one(R), z(1)}, 4)), not_invertible);
        REQUIRE_THROWS_AS(series_invert_unit(TruncatedSeries::zero(R, 4)), not_invertible);
    }
    SECTION("random units invert exactly") {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 30; ++trial) {
            auto f = one(16) + random_series(rng, 16) * q1();
            auto inv = series_invert_unit(f);
            REQUIRE(f * inv == one(16));
        }
    }
}

TEST_CASE("substitute_monomial", "[qseries]") {
    const Monomial qz = qq() * z();
    SECTION("z^-2 under z -> qz") {
        // z^-2 -> q^-2 z^-2; its weight -4 is below the lowered order, so check via the key
        auto s = substitute_monomial(S({z(-2)}, 8), qz);
        REQUIRE(s.size() == 1);
        REQUIRE(s.coefficient((q1(-2) * q2(-2) * z(-2)).key()) == 1);
    }
    SECTION("1 + q2 z^2 under z -> qz") {
        auto s = substitute_monomial(S({Monomial::one(R), q2() * z(2)}, 8), qz);
        REQUIRE(s == S({Monomial::one(R), q1(2) * q2(3) * z(2)}, 8));
    }
    SECTION("homomorphism on random polynomials") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 40; ++trial) {
            // low-weight polynomials at a high order, so nothing is truncated before substituting
            auto f = random_series(rng, 40, 5), g = random_series(rng, 40, 5);
            auto lhs = substitute_monomial(f * g, qz);
            auto rhs = substitute_monomial(f, qz) * substitute_monomial(g, qz);
            REQUIRE(compare_series(lhs, rhs).passed);
        }
    }
    SECTION("floor violation") {
        RingMeta tight{2, 4, -1};
        auto f = TruncatedSeries::from_monomial(Monomial::z(tight, -3), 8);
        REQUIRE_THROWS_AS(substitute_monomial(f, Monomial::q_total(tight) * Monomial::z(tight)), floor_violation);
    }
}

TEST_CASE("truncated_product", "[qseries]") {
    SECTION("W'_2 stream to weight 4") {
        auto p = truncated_product(wprime2_stream(), R, 4);
        REQUIRE(p == S({Monomial::one(R), q2() * z(2), q1(2) * q2() * z(-2), q1(2) * q2(2)}, 4));
    }
    SECTION("empty stream") { REQUIRE(truncated_product(stream_of({}), R, 6) == one(6)); }
    SECTION("single factor") {
        REQUIRE(truncated_product(stream_of({q1() * z()}), R, 6) == S({Monomial::one(R), q1() * z()}, 6));
    }
    SECTION("negative-weight factors are applied at a raised working order") {
        // (1 + q1^-1)(1 + q1^2)(1 + q1^3): expand by hand, truncate at weight 2
        auto p = truncated_product(stream_of({q1(-1), q1(2), q1(3)}), R, 2);
        REQUIRE(p == S({q1(-1), Monomial::one(R), q1(1), q1(2), Monomial(R, 1, q1(2).key())}, 2).truncated(2));
        REQUIRE(p.coefficient(q1(2).key()) == 2);  // from q1^-1 q1^3 and q1^2
    }
    SECTION("non-terminating stream") {
        REQUIRE_THROWS_AS(truncated_product(geometric_stream(z(), Monomial::one(R)), R, 4), non_terminating);
    }
}

TEST_CASE("theta_series", "[qseries]") {
    SECTION("a=0 reproduces sum q^{l^2} (z^2/q1)^l") {
        auto t = theta_series(0, 2, q1(-1), 2, 6);
        REQUIRE(t == S({Monomial::one(R), q2() * z(2), q1(2) * q2() * z(-2), q1(2) * q2(4) * z(4)}, 6));
    }
    SECTION("a=1/2 to weight 2") {
        auto t = theta_series(rational(1, 2), 2, q1(-1), 2, 2);
        REQUIRE(t == S({q1(rational(-1, 4)) * q2(rational(1, 4)) * z(1), q1(rational(3, 4)) * q2(rational(1, 4)) * z(-1)}, 2));
    }
    SECTION("constant term") {
        auto t = theta_series(0, 2, Monomial::one(R), 2, 10);
        REQUIRE(t.coefficient(Monomial::one(R).key()) == 1);
    }
    SECTION("lattice violation") {
        REQUIRE_THROWS_AS(theta_series(rational(1, 3), 3, q1(-1), 2, 4), lattice_violation);
        REQUIRE_THROWS_AS(theta_series(rational(1, 2), 1, q1(-1), 2, 4), lattice_violation);
    }
}

TEST_CASE("jtp_check", "[qseries]") {
    SECTION("W'_1 instance") { REQUIRE(jtp_check(q2() * z(2), 12).passed); }
    SECTION("W'_2 instance") { REQUIRE(jtp_check(q1(-1) * z(2), 12).passed); }
    SECTION("negative control: drop the l=1 term") {
        const Monomial y = q2() * z(2);
        auto rhs = jtp_sum(y, 12);
        const Monomial l1 = qq() * y;
        rhs.add_term(l1.key(), -1);
        auto r = compare_series(jtp_product(y, 12), rhs);
        REQUIRE_FALSE(r.passed);
        REQUIRE(r.first_discrepancy.has_value());
        REQUIRE(r.first_discrepancy->key == l1.key());
        REQUIRE(r.first_discrepancy->lhs == "1");
        REQUIRE(r.first_discrepancy->rhs == "0");
    }
    SECTION("order 40 instances") {
        for (const auto& y : {q2() * z(2), q1(-1) * z(2), qq() * z(2) * q1(-1), qq() * z(2) * q2(-1)}) {
            INFO(y.to_string());
            REQUIRE(jtp_check(y, 40).passed);
        }
    }
}

TEST_CASE("extract_unit", "[qseries]") {
    SECTION("monomial multiple") {
        auto g = S({Monomial::one(R), q2() * z(2), q1(3)}, 10);
        REQUIRE(extract_unit(g * (q1() * z()), g) == q1() * z());
    }
    SECTION("half-characteristic theta against the JTP sum") {
        auto f = theta_series(rational(1, 2), 2, q1(-1), 2, 12);
        auto g = jtp_sum(q2() * z(2), 12);
        REQUIRE(extract_unit(f, g) == qq(rational(1, 4)) * q1(rational(-1, 2)) * z());
        REQUIRE(extract_unit(f, g) == q1(rational(-1, 4)) * q2(rational(1, 4)) * z());
    }
    SECTION("not proportional") {
        REQUIRE_THROWS_AS(extract_unit(S({Monomial::one(R), qq(2)}, 8), S({Monomial::one(R), q1() * z(2)}, 8)),
                          not_proportional);
        REQUIRE_THROWS_AS(extract_unit(one(4), TruncatedSeries::zero(R, 4)), not_proportional);
    }
}

TEST_CASE("automorphy_of", "[qseries]") {
    SECTION("W'_2") {
        auto w2 = truncated_product(wprime2_stream(), R, 16);
        REQUIRE(automorphy_of(w2) == q1() * qq(-1) * z(-2));
    }
    SECTION("W'_1") {
        auto w1 = truncated_product(wprime1_stream(), R, 16);
        REQUIRE(automorphy_of(w1) == q1() * qq(-2) * z(-2));
    }
    SECTION("z^k") {
        for (std::int64_t k : {-2, 1, 3}) REQUIRE(automorphy_of(S({z(k)}, 12)) == qq(k));
    }
    SECTION("multiplicative") {
        auto w1 = truncated_product(wprime1_stream(), R, 16);
        auto w2 = truncated_product(wprime2_stream(), R, 16);
        REQUIRE(automorphy_of(w1 * w2) == automorphy_of(w1) * automorphy_of(w2));
    }
    SECTION("not quasi-periodic") {
        REQUIRE_THROWS_AS(automorphy_of(S({Monomial::one(R), z()}, 8)), not_quasi_periodic);
    }
}

TEST_CASE("ring axioms on random series", "[qseries][property]") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const std::int64_t N = 4 + trial % 17;
        auto f = random_series(rng, N), g = random_series(rng, N), h = random_series(rng, N);
        REQUIRE((f + g) + h == f + (g + h));
        REQUIRE(f * (g * h) == (f * g) * h);
        REQUIRE(f * (g + h) == f * g + f * h);
    }
}

TEST_CASE("truncation coherence", "[qseries][property]") {
    std::mt19937_64 rng(99);
    const std::int64_t N = 20, M = 9;
    for (int trial = 0; trial < 30; ++trial) {
        auto f = random_series(rng, N), g = random_series(rng, N);
        REQUIRE((f * g).truncated(M) == f.truncated(M) * g.truncated(M));
        REQUIRE((f + g).truncated(M) == f.truncated(M) + g.truncated(M));
        auto u = one(N) + f * q2();
        REQUIRE(series_invert_unit(u).truncated(M) == series_invert_unit(u.truncated(M)));
    }
    REQUIRE(truncated_product(wprime1_stream(), R, 16).truncated(M) == truncated_product(wprime1_stream(), R, M));
    REQUIRE(theta_series(rational(1, 2), 2, q1(-1), 2, 16).truncated(M) == theta_series(rational(1, 2), 2, q1(-1), 2, M));
    REQUIRE(jtp_product(q2() * z(2), 16).truncated(M) == jtp_product(q2() * z(2), M));
    REQUIRE(jtp_sum(q2() * z(2), 16).truncated(M) == jtp_sum(q2() * z(2), M));
}

TEST_CASE("monomial formatting and algebra", "[qseries]") {
    REQUIRE((q1(rational(-1, 4)) * q2(rational(1, 4)) * z()).to_string() == "q1^-1/4 q2^1/4 z^1");
    REQUIRE(Monomial::one(R).to_string() == "1");
    REQUIRE(Monomial(R, -2, q1().key()).to_string() == "-2 q1^1");
    REQUIRE((q1(2) * z(-2)).sqrt() == q1() * z(-1));
    REQUIRE_THROWS_AS(z().sqrt(), lattice_violation);
    REQUIRE_THROWS_AS(Monomial::q(R, 1, rational(1, 3)), lattice_violation);
    REQUIRE(qq(3).pow(-2) == qq(-6));
}
