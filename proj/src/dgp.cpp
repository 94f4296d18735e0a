#include "fhr/dgp.hpp"

#include <cmath>

namespace fhr {

void HeterogeneitySpec::validate() const {
    if (!(kappa0 > 0.0) || !(lambda0 > 0.0)) throw DomainError("HeterogeneitySpec: kappa0 and lambda0 must be positive");
}

void DgpConfig::validate() const {
    if (T < 2) throw DomainError("DgpConfig: T must be at least 2");
    theta0.validate();
    if (theta0.beta.size() != 1) throw DomainError("DgpConfig: the simulation designs use a scalar covariate");
    if (!(y0_rate > 0.0)) throw DomainError("DgpConfig: y0_rate must be positive");
    if (!(x1_prob >= 0.0 && x1_prob <= 1.0)) throw DomainError("DgpConfig: x1_prob must lie in [0, 1]");
    het.validate();
    if (feedback != Feedback::Custom && T != 2) throw DomainError("DgpConfig: experiments A and B are defined for T = 2");
    if (feedback == Feedback::Custom && !custom_tau) throw DomainError("DgpConfig: custom feedback needs a tau function");
}

DgpConfig DgpConfig::experiment(char which) {
    DgpConfig cfg;
    if (which == 'A' || which == 'a') {
        cfg.feedback = Feedback::ExperimentA;
    } else if (which == 'B' || which == 'b') {
        cfg.feedback = Feedback::ExperimentB;
    } else {
        throw DomainError("unknown experiment (expected A or B)");
    }
    return cfg;
}

std::string feedback_name(Feedback f) {
    switch (f) {
        case Feedback::ExperimentA: return "A";
        case Feedback::ExperimentB: return "B";
        case Feedback::Custom: return "custom";
    }
    return "?";
}

double feedback_tau(const DgpConfig& cfg, double y0, double x1, double y1) {
    switch (cfg.feedback) {
        case Feedback::ExperimentA: return y0 + x1;
        case Feedback::ExperimentB: return y0 + x1 + y1;
        case Feedback::Custom: return cfg.custom_tau(y0, std::span<const double>(&y1, 1), std::span<const double>(&x1, 1));
    }
    return 0.0;
}

namespace {
double prob_from_tau(double tau, double v) {
    const double s = tau * v;
    if (s > 700.0) return 1.0;
    return -std::expm1(-s);
}
}  // namespace

double feedback_prob(const DgpConfig& cfg, double y0, double x1, double y1, double v) {
    return prob_from_tau(feedback_tau(cfg, y0, x1, y1), v);
}

PanelPath simulate_unit(const DgpConfig& cfg, std::uint64_t seed, std::uint64_t unit) {
    RngStream rng(seed, unit);
    const Theta& th = cfg.theta0;
    PanelPath p;
    p.dx = 1;
    p.v = sample_gamma(cfg.het.kappa0, cfg.het.lambda0, rng);
    p.y0 = sample_exponential(cfg.y0_rate, rng);
    p.y.resize(cfg.T);
    p.x.resize(cfg.T);
    p.x[0] = sample_bernoulli(cfg.x1_prob, rng);
    double prev = p.y0;
    for (int t = 1; t <= cfg.T; ++t) {
        if (t >= 2) {
            double tau;
            if (cfg.feedback == Feedback::Custom) {
                tau = cfg.custom_tau(p.y0, std::span<const double>(p.y.data(), t - 1),
                                     std::span<const double>(p.x.data(), t - 1));
            } else {
                tau = feedback_tau(cfg, p.y0, p.x[0], p.y[0]);
            }
            p.x[t - 1] = sample_bernoulli(prob_from_tau(tau, p.v), rng);
        }
        const double pt = sample_exponential(p.v, rng);
        p.y[t - 1] = invert_rho(th, pt, prev, p.x[t - 1]);
        prev = p.y[t - 1];
    }
    return p;
}

Panel simulate_panel(const DgpConfig& cfg, std::size_t n, std::uint64_t seed, Exec exec) {
    cfg.validate();
    if (n < 1) throw DomainError("simulate_panel: need n >= 1");
    Panel panel(cfg.T, 1);
    panel.y0.resize(n);
    panel.y.resize(n * cfg.T);
    panel.x.resize(n * cfg.T);
    panel.v.resize(n);
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (long long i = 0; i < nn; ++i) {
        const PanelPath p = simulate_unit(cfg, seed, static_cast<std::uint64_t>(i));
        panel.y0[i] = p.y0;
        panel.v[i] = p.v;
        for (int t = 0; t < cfg.T; ++t) {
            panel.y[i * cfg.T + t] = p.y[t];
            panel.x[i * cfg.T + t] = p.x[t];
        }
    }
    return panel;
}

}  // namespace fhr
