#include "oracles.hpp"

#include "fhr/batch.hpp"
#include "fhr/moments.hpp"

#include <doctest.h>

using namespace fhr;

namespace {

PanelPath make_path(double y0, double x1, double y1, double x2, double y2) {
    PanelPath p;
    p.y0 = y0;
    p.y = {y1, y2};
    p.x = {x1, x2};
    return p;
}

}  // namespace

TEST_CASE("moment identifiers and dimensions") {
    for (const auto& id : mph_moment_ids()) {
        const MomentFn m = make_moment(id);
        CHECK(m.id == id);
        CHECK(m.dim == ((id == "ash" || id == "asf") ? 1 : 3));
    }
    CHECK(make_moment("eff-se").regime == Regime::StrictExogeneityOnly);
    CHECK(make_moment("loceff").requires_model.has_value());
    CHECK_THROWS_AS(make_moment("nope"), std::invalid_argument);
}

TEST_CASE("AB moment is the instrumented first difference of integrated spells") {
    const Theta th = theta0();
    const PanelPath p = make_path(0.8, 1.0, 0.4, 0.0, 1.7);
    const auto ab = ab_moment(th, p.view(), default_ab_instrument());
    REQUIRE(ab.size() == 3);
    const double d = rho(th, 1.7, 0.4, 0.0) - rho(th, 0.4, 0.8, 1.0);
    CHECK(ab[0] == doctest::Approx(d));
    CHECK(ab[1] == doctest::Approx(0.8 * d));
    CHECK(ab[2] == doctest::Approx(1.0 * d));
}

TEST_CASE("posterior mean of V under the Gamma design") {
    ExperimentPosterior post;
    CHECK(posterior_mean_v(post, 1.5) == doctest::Approx(7.0 / 6.5));
    // E[V | x2 = 0] = n / (r + tau)
    CHECK(posterior_mean_v_given_x2(post, 0.5, 1.0, 0.0, 1.5) == doctest::Approx(7.0 / 8.0));
}

TEST_CASE("Experiment A conditional expectation against quadrature over V") {
    ExperimentPosterior post;
    const double y0 = 0.6, x1 = 1.0, pbar = 2.0;
    const CondExpectations ce = conditional_expectations_A(y0, x1, pbar, post);
    const double n = 7.0, r = 7.0;
    auto dens = [&](double v) { return std::exp(n * std::log(r) + (n - 1) * std::log(v) - r * v - std::lgamma(n)); };
    const double ex2 = integrate_adaptive([&](double v) { return v <= 0 ? 0.0 : dens(v) * -std::expm1(-(y0 + x1) * v); }, 0, 30, 1e-12);
    const double ex2v =
        integrate_adaptive([&](double v) { return v <= 0 ? 0.0 : v * dens(v) * -std::expm1(-(y0 + x1) * v); }, 0, 30, 1e-12);
    CHECK(ce.ex2 == doctest::Approx(ex2).epsilon(1e-9));
    CHECK(ce.ex2v_pt == doctest::Approx(ex2v).epsilon(1e-9));
}

TEST_CASE("Experiment B conditional expectations against conditional simulation") {
    const Theta th = theta0();
    ExperimentPosterior post;
    post.regime = Feedback::ExperimentB;
    const double states[3][4] = {{0.3, 0.0, 0.2, 0.8}, {1.2, 1.0, 0.7, 2.5}, {0.05, 1.0, 0.5, 0.1}};
    for (const auto& s : states) {
        const CondExpectations ce = conditional_expectations_B(th, s[0], s[1], s[2], s[3], post);
        const oracle::CondMc mc = oracle::cond_expectations_mc(th, s[0], s[1], s[2], s[3], post, 200000, 99);
        CHECK(std::abs(ce.ex2_pt - mc.ex2_pt) <= 4 * mc.se_ex2_pt);
        CHECK(std::abs(ce.ex2 - mc.ex2) <= 4 * mc.se_ex2);
        CHECK(std::abs(ce.ex2v_pt - mc.ex2v_pt) <= 4 * mc.se_ex2v_pt);
        CHECK(std::abs(ce.ex2_1mpt_v - mc.ex2_1mpt_v) <= 4 * mc.se_ex2_1mpt_v);
    }
}

TEST_CASE("Experiment B expectations reduce to the no-feedback form when C2 is negligible") {
    // huge negative gamma makes y1 tiny, so tau is (almost) y0 + x1
    Theta th = theta0();
    th.beta = {30.0};
    ExperimentPosterior post;
    const CondExpectations b = conditional_expectations_B(th, 0.7, 1.0, 0.4, 1.1, post);
    const CondExpectations a = conditional_expectations_A(0.7, 1.0, 1.1, post);
    CHECK(b.ex2 == doctest::Approx(a.ex2).epsilon(1e-9));
    CHECK(b.ex2v_pt == doctest::Approx(a.ex2v_pt).epsilon(1e-9));
}

TEST_CASE("simple moment mean zero on a modest panel") {
    const DgpConfig cfg = DgpConfig::experiment('B');
    const Panel p = simulate_panel(cfg, 100000, 3);
    const MomentStats st = moment_stats(make_moment("simple"), p, cfg.theta0);
    const Vec se = st.mc_se();
    for (int k = 0; k < 3; ++k) CHECK(std::abs(st.mean(k)) <= 4 * se(k));
}

TEST_CASE("loceff validates the working model") {
    WorkingModel wm;
    wm.p = 1.2;
    CHECK_THROWS_AS(wm.validate(), DomainError);
    MomentOptions mo;
    mo.wm.p = 1.5;
    CHECK_THROWS_AS(make_moment("loceff", mo), DomainError);
}

TEST_CASE("ASH and ASF conditional means given a") {
    const Theta th = theta0();
    const EvalPoint e;
    // Pbar ~ Gamma(2, e^a): E[1 / Pbar] = e^a, E[Pbar^{1/alpha}] = Gamma(2 + 1/alpha) / Gamma(2) e^{-a/alpha}
    const double a = 0.4;
    const double rate = std::exp(a);
    auto gamma2 = [&](double p) { return rate * rate * p * std::exp(-rate * p); };
    const double e_inv = integrate_adaptive([&](double p) { return p <= 0 ? 0.0 : gamma2(p) / p; }, 0, 80, 1e-12);
    CHECK(ash_scale(th, e) * e_inv == doctest::Approx(ash_scale(th, e) * std::exp(a)).epsilon(1e-9));
    const double lead = std::exp(-(th.beta[0] + th.gamma) / th.alpha + std::lgamma(1.0 + 1.0 / th.alpha));
    PanelPath path = make_path(1.0, 1.0, 1.0, 1.0, 1.0);
    const double eq = integrate_adaptive(
        [&](double p) {
            if (p <= 0) return 0.0;
            const double ps = std::pow(p, 1.0 / th.alpha);
            const double g = std::exp(std::lgamma(1.0 + 1.0 / th.alpha) + std::lgamma(2.0) - std::lgamma(2.0 + 1.0 / th.alpha));
            return gamma2(p) * std::exp(-(th.beta[0] + th.gamma) / th.alpha) * g * ps;
        },
        0, 80, 1e-12);
    CHECK(eq == doctest::Approx(lead * std::exp(-a / th.alpha)).epsilon(1e-9));
    CHECK(std::isfinite(asf_moment(th, path.view(), e)));
}
