#include "fhr/altmodels.hpp"
#include "fhr/batch.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fhr;

namespace {

PoissonFeedback binary_feedback() {
    PoissonFeedback fb;
    fb.x2_values = {{0.0}, {1.0}};
    fb.probs = [](int y0, int y1, std::span<const double> x1, double a) {
        const double p = 1.0 / (1.0 + std::exp(-(0.3 * y1 - 0.2 * y0 + 0.5 * x1[0] - a)));
        return std::vector<double>{1.0 - p, p};
    };
    return fb;
}

}  // namespace

TEST_CASE("Poisson moments are exactly mean zero under feedback") {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> ub(-0.5, 0.5), ug(0.0, 0.3), ua(-1.0, 0.5);
    const PoissonFeedback fb = binary_feedback();
    for (int rep = 0; rep < 5; ++rep) {
        const PoissonTheta th{{ub(gen)}, ug(gen)};
        const double a = ua(gen);
        const int y0 = rep % 3;
        const double x1[1] = {static_cast<double>(rep % 2)};
        const Vec cw = poisson_exact_mean(
            th, [&](int a0, int a1, int a2, auto u, auto w) { return poisson_cw_moment(th, a0, a1, a2, u, w); }, a, y0,
            x1, fb);
        const Vec sm = poisson_exact_mean(
            th, [&](int a0, int a1, int a2, auto u, auto w) { return poisson_second_moment(th, a0, a1, a2, u, w, {}); },
            a, y0, x1, fb);
        CHECK(cw.cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(sm.cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("Poisson Taylor constructor reproduces both families") {
    const PoissonTheta th{{0.4}, 0.15};
    PoissonPsi psi_cw = [](const PoissonTheta& t, int y0, int y1, std::span<const double> x1) {
        return std::vector<double>{x1[0] * y1, -x1[0] * std::exp(poisson_index(t, y0, x1))};
    };
    PoissonPsi psi_sm = [](const PoissonTheta& t, int y0, int y1, std::span<const double> x1) {
        return std::vector<double>{y1 * (y1 - 1.0), 0.0, -std::exp(2.0 * poisson_index(t, y0, x1))};
    };
    for (int y0 = 0; y0 < 3; ++y0)
        for (int y1 = 0; y1 < 5; ++y1)
            for (int y2 = 0; y2 < 6; ++y2) {
                const double x1[1] = {1.0}, x2[1] = {0.0};
                const double want_cw = poisson_cw_moment(th, y0, y1, y2, x1, x2)(0);
                const double want_sm = poisson_second_moment(th, y0, y1, y2, x1, x2, {})(0);
                CHECK(std::abs(poisson_taylor_moment(th, psi_cw, y0, y1, y2, x1, x2) - want_cw) <= 1e-12);
                CHECK(std::abs(poisson_taylor_moment(th, psi_sm, y0, y1, y2, x1, x2) - want_sm) <= 1e-12);
            }
}

TEST_CASE("Poisson truncation and pmf") {
    CHECK(poisson_pmf(3, 2.0) == doctest::Approx(std::exp(-2.0) * 8.0 / 6.0).epsilon(1e-14));
    const int k = poisson_truncation(4.0, 1e-12, 0);
    double tail = 0.0;
    for (int j = k + 1; j < 200; ++j) tail += poisson_pmf(j, 4.0);
    CHECK(tail <= 1e-12);
}

TEST_CASE("MIH moment reduces to p1 - p2 at delta = 0") {
    const MihTheta th{theta0(), {0.0}};
    PanelPath p;
    p.y0 = 0.7;
    p.y = {0.4, 1.3};
    p.x = {1.0, 0.0};
    const double p1 = rho(th.base, 0.4, 0.7, 1.0), p2 = rho(th.base, 1.3, 0.4, 0.0);
    CHECK(mih_moment(th, p.view(), 1.0, nullptr) == doctest::Approx(p1 - p2).epsilon(1e-14));
}

TEST_CASE("MIH spell moment matches quadrature") {
    const MihTheta th{theta0(), {0.25}};
    const double x[1] = {1.0};
    const double a = 0.3, b = 0.5;
    const double rate = std::exp(th.scale(x) * a);
    const double q = integrate_adaptive([&](double p) { return p <= 0 ? 0.0 : std::pow(p, b) * rate * std::exp(-rate * p); },
                                        0.0, 60.0, 1e-12);
    CHECK(mih_spell_moment(th, x, a, b) == doctest::Approx(q).epsilon(1e-9));
}

TEST_CASE("MIH moment mean zero on a modest panel") {
    MihDgp dgp;
    const Panel p = simulate_mih_panel(dgp, 100000, 3);
    for (double b : {0.5, 1.0}) {
        MomentFn m;
        m.dim = 1;
        m.eval = [&, b](const Theta&, const PathView& v, double* out) { out[0] = mih_moment(dgp.theta, v, b, nullptr); };
        const MomentStats st = moment_stats(m, p, dgp.theta.base);
        CHECK(std::abs(st.mean(0)) <= 4 * st.mc_se()(0));
    }
}

TEST_CASE("deconvolution kernel table matches direct evaluation") {
    const DeconvKernelTable tab(0.25, 0.04, 100.0);
    for (double z : {0.0, 0.37, 3.3, 17.9, 99.0, 150.0})
        CHECK(std::abs(tab(z) - deconv_kernel(z, 0.25, 0.04)) <= 1e-9);
    CHECK(tab(-2.0) == doctest::Approx(tab(2.0)).epsilon(1e-14));
    const double h = 1e-5;
    CHECK(deconv_kernel_deriv(1.3, 0.5, 0.04) ==
          doctest::Approx((deconv_kernel(1.3 + h, 0.5, 0.04) - deconv_kernel(1.3 - h, 0.5, 0.04)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("quadrature route recovers a Gaussian psi") {
    // psi(a) = exp(-a^2 / (2 v)) has exact inverse sqrt(v / (v - s2)) exp(-(y2 - mu)^2 / (2 (v - s2)))
    const double v = 1.0, s2 = 0.04, gamma = 0.5, beta = 0.3;
    NonlinRegTheta th{linear_index_regression(gamma, {beta}), s2, 0.125};
    RegPsi psi = [v](double, double, std::span<const double>, double a) { return std::exp(-a * a / (2 * v)); };
    const QuadratureRule grid = QuadratureRule::composite(48, 16, -12.0, 12.0);
    PanelPath p;
    p.y0 = 0.1;
    p.y = {0.4, 0.9};
    p.x = {0.0, 1.0};
    const double mu = gamma * 0.4 + beta;
    const double want = std::sqrt(v / (v - s2)) * std::exp(-(0.9 - mu) * (0.9 - mu) / (2 * (v - s2)));
    const RegularizedValue got = nonlin_reg_moment(th, psi, p.view(), grid);
    CHECK(std::abs(got.value - want) <= 1e-10);
    CHECK_FALSE(got.warning);
    const DeconvKernelTable tab(0.125, s2, 400.0);
    CHECK(std::abs(nonlin_reg_moment(th, psi, p.view(), grid, &tab).value - want) <= 1e-8);
}

TEST_CASE("polynomial route: linear psi gives the differenced residual, quadratic psi subtracts the noise variance") {
    const double gamma = 0.5, beta = 0.3, s2 = 0.04;
    const double y0 = 0.2, x1 = 1.0, y1 = 0.9, x2 = 0.0, y2 = 1.4;
    const double mu2 = gamma * y1 + beta * x2;
    const double c[2] = {y1 - gamma * y0 - beta * x1, -1.0};
    const double ab = (y1 - gamma * y0 - beta * x1) - (y2 - gamma * y1 - beta * x2);
    CHECK(std::abs(nonlin_reg_moment_polynomial(c, mu2, y2, s2) - ab) <= 1e-14);
    const double q[3] = {0.0, 0.0, 1.0};
    CHECK(nonlin_reg_moment_polynomial(q, mu2, y2, s2) == doctest::Approx((y2 - mu2) * (y2 - mu2) - s2).epsilon(1e-14));
}

TEST_CASE("regularization bias of the nonlinear design follows the analytic curve") {
    // E[phi^lambda] = 2 xi / (pi (1 + xi^2)^2), xi = 1 / lambda, for psi = (y1 - m) e^{-|a|} and A ~ Exp(1)
    NonlinRegDgp dgp;
    const std::size_t n = 20000;
    const Panel p = simulate_nonlin_reg_panel(dgp, n, 5);
    const QuadratureRule grid = dgp.a_grid();
    for (double lam : {1.0, 0.5}) {
        const DeconvKernelTable tab(lam, dgp.sigma2, 50.0 / lam);
        const NonlinRegTheta th{dgp.regression(), dgp.sigma2, lam};
        double s = 0, ss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = nonlin_reg_moment(th, dgp.psi(), p.view(i), grid, &tab).value;
            s += v;
            ss += v * v;
        }
        const double m = s / n, se = std::sqrt((ss / n - m * m) / n);
        const double xi = 1.0 / lam;
        const double want = 2 * xi / (std::acos(-1.0) * (1 + xi * xi) * (1 + xi * xi));
        CHECK(std::abs(m - want) <= 4 * se);
    }
}
