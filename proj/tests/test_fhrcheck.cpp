#include "fhr/fhrcheck.hpp"

#include <doctest.h>

using namespace fhr;

TEST_CASE("standard models normalize") {
    CHECK_NOTHROW(mph_model(2).validate(theta0().pack()));
    Vec lt(2);
    lt << 0.7, 0.3;
    CHECK_NOTHROW(logit_model(2).validate(lt));
    Vec pt(2);
    pt << 0.5, 0.2;
    CHECK_NOTHROW(poisson_model(20).validate(pt));
}

TEST_CASE("checker accepts the AB moment") {
    const Theta th = theta0();
    const CheckerReport r = check_fhr(mph_model(2), mph_candidate("ab", th), th.pack());
    CHECK(r.cond1_residual <= 1e-6);
    CHECK(r.cond2_variation[0] <= 1e-6);
    CHECK(r.pass());
}

TEST_CASE("checker rejects the broken moment") {
    const Theta th = theta0();
    ParametricModel m = mph_model(2);
    m.a_grid = {0.0};
    const CheckerReport r = check_fhr(m, broken_mph_candidate(th), th.pack());
    CHECK(r.cond1_residual >= 1e-2);
    CHECK_FALSE(r.pass());
}

TEST_CASE("checker flags the strict-exogeneity score under feedback") {
    const Theta th = theta0();
    CheckerOptions opt;
    opt.panels = 8;
    const CheckerReport r = check_fhr(mph_model(2), mph_candidate("eff-se", th), th.pack(), opt);
    CHECK(r.cond2_variation[0] > 1e-2);
}

TEST_CASE("discrete null spaces") {
    Vec lt(2);
    lt << 0.7, 0.3;
    CHECK(discrete_null_space(logit_model(2), lt, 1e-10).dimension() == 0);
    ParametricModel toy = logit_model(2);
    toy.a_grid = {0.2};
    toy.covariate_grid = {0.0};
    const DiscreteNullSpace ns = discrete_null_space(toy, lt, 1e-10);
    CHECK(ns.min_block_dimension() == 3);
    CHECK_FALSE(ns.warning.empty());
}
