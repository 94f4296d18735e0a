#include "oracles.hpp"

#include "fhr/numerics.hpp"

#include <doctest.h>

#include <cmath>

using namespace fhr;

TEST_CASE("log_gamma matches std::lgamma") {
    for (double x : oracle::log_gamma_args()) CHECK(oracle::rel_err(log_gamma(x), std::lgamma(x)) <= 1e-12);
    CHECK_THROWS_AS(log_gamma(0.0), DomainError);
    CHECK_THROWS_AS(log_gamma(-1.5), DomainError);
}

TEST_CASE("hyp2f1 matches frozen high-precision values") {
    for (const auto& c : oracle::hyp2f1_cases()) {
        CAPTURE(c.a);
        CAPTURE(c.b);
        CAPTURE(c.z);
        CHECK(oracle::rel_err(hyp2f1(c.a, c.b, c.c, c.z), c.value) <= 1e-10);
    }
}

TEST_CASE("hyp2f1 series and integral routes agree") {
    for (const auto& c : oracle::hyp2f1_cases())
        CHECK(oracle::rel_err(hyp2f1_integral(c.a, c.b, c.c, c.z), hyp2f1(c.a, c.b, c.c, c.z)) <= 1e-10);
}

TEST_CASE("hyp2f1 special cases and domain") {
    CHECK(hyp2f1(3.0, 0.5, 1.5, 0.0) == 1.0);
    // 2F1(1, 1; 2; z) = -log(1 - z) / z
    CHECK(hyp2f1(1.0, 1.0, 2.0, -2.0) == doctest::Approx(std::log(3.0) / 2.0).epsilon(1e-13));
    CHECK_THROWS_AS(hyp2f1(1.0, 1.0, 0.5, -1.0), DomainError);
    CHECK_THROWS_AS(hyp2f1(1.0, 1.0, 2.0, 0.5), DomainError);
}

TEST_CASE("RngStream is reproducible and streams differ") {
    RngStream a(7, 3), b(7, 3), c(7, 4);
    for (int i = 0; i < 100; ++i) {
        const auto u = a.next_u64();
        CHECK(u == b.next_u64());
        CHECK(u != c.next_u64());
    }
    RngStream d(1, 0);
    for (int i = 0; i < 10000; ++i) {
        const double u = d.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("sampler moments") {
    RngStream rng(11, 0);
    const int n = 200000;
    double sg = 0, sg2 = 0, se = 0, sb = 0, sn = 0, sn2 = 0, sbern = 0;
    for (int i = 0; i < n; ++i) {
        const double g = sample_gamma(5.0, 5.0, rng);
        sg += g;
        sg2 += g * g;
        se += sample_exponential(1.5, rng);
        sb += sample_beta(1.0, 3.0, rng);
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
        sbern += sample_bernoulli(0.3, rng);
    }
    CHECK(std::abs(sg / n - 1.0) < 4 * std::sqrt(0.2 / n));
    CHECK(std::abs(sg2 / n - sg / n * sg / n - 0.2) < 0.005);
    CHECK(std::abs(se / n - 2.0 / 3.0) < 4 * (2.0 / 3.0) / std::sqrt(n));
    CHECK(std::abs(sb / n - 0.25) < 4 * std::sqrt(3.0 / 80.0 / n));
    CHECK(std::abs(sn / n) < 4 / std::sqrt(n));
    CHECK(std::abs(sn2 / n - 1.0) < 4 * std::sqrt(2.0 / n));
    CHECK(std::abs(sbern / n - 0.3) < 4 * std::sqrt(0.21 / n));
    CHECK_THROWS_AS(sample_gamma(-1.0, 1.0, rng), DomainError);
    CHECK_THROWS_AS(sample_bernoulli(1.5, rng), DomainError);
}

TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
    const auto rule = QuadratureRule::gauss_legendre(10, -1.0, 2.0);
    for (int k = 0; k <= 19; ++k) {
        const double exact = (std::pow(2.0, k + 1) - std::pow(-1.0, k + 1)) / (k + 1);
        CHECK(integrate([k](double x) { return std::pow(x, k); }, rule) == doctest::Approx(exact).epsilon(1e-13));
    }
    const auto comp = QuadratureRule::composite(8, 8, 0.0, std::acos(-1.0));
    CHECK(integrate([](double x) { return std::sin(x); }, comp) == doctest::Approx(2.0).epsilon(1e-14));
    const auto half = QuadratureRule::half_line(80, 60.0);
    CHECK(integrate([](double p) { return std::exp(-p); }, half) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(integrate_adaptive([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-13) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
}

TEST_CASE("invert matches the cofactor inverse") {
    Mat A(3, 3);
    A << 4, 1, 0.5, 1, 3, -0.2, 0.5, -0.2, 2;
    CHECK((invert(A) - oracle::cofactor_inverse(A)).norm() < 1e-13);
    Vec b(3);
    b << 1, 2, 3;
    CHECK((A * solve_linear(A, b) - b).norm() < 1e-13);
    Mat S = Mat::Ones(2, 2);
    CHECK_THROWS_AS(invert(S), IllConditionedError);
}

TEST_CASE("null_space of a rank-deficient matrix") {
    Mat A(3, 4);
    A << 1, 2, 3, 4, 2, 4, 6, 8, 0, 1, 0, 1;
    const auto ns = null_space(A, 1e-12);
    CHECK(ns.basis.cols() == 2);
    CHECK((A * ns.basis).norm() < 1e-12);
    CHECK((ns.basis.transpose() * ns.basis - Mat::Identity(2, 2)).norm() < 1e-12);
    CHECK(condition_number(Mat::Identity(3, 3)) == doctest::Approx(1.0));
}
