#pragma once

#include "fhr/numerics.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace fhr {

// Common parameter of the parametric hazard: Weibull shape alpha, covariate
// coefficients beta and lagged-duration coefficient gamma.
struct Theta {
    double alpha = 1.0;
    std::vector<double> beta;
    double gamma = 0.0;

    int dim() const { return static_cast<int>(beta.size()) + 2; }
    // Packed as (alpha, beta..., gamma).
    Vec pack() const;
    static Theta unpack(const Vec& v);
    void validate() const;
};

// Parameter of the simulation designs: alpha = 3/4, beta = -1/10, gamma = (3/4) ln 2.
Theta theta0();

// Non-owning view of one unit's history.
struct PathView {
    double y0 = 0.0;
    const double* y = nullptr;  // y_1..y_T
    const double* x = nullptr;  // row-major T x dx
    int T = 0;
    int dx = 0;
    double v = std::numeric_limits<double>::quiet_NaN();

    double yt(int t) const { return t == 0 ? y0 : y[t - 1]; }  // t in 0..T
    std::span<const double> xt(int t) const { return {x + (t - 1) * dx, static_cast<std::size_t>(dx)}; }  // t in 1..T
    double x_scalar(int t) const { return x[(t - 1) * dx]; }
    bool has_latent() const { return !std::isnan(v); }
};

// Owning single path. Covariates are stored row-major, x_t occupying
// entries [(t-1)*dx, t*dx).
struct PanelPath {
    double y0 = 0.0;
    std::vector<double> y;
    std::vector<double> x;
    int dx = 1;
    double v = std::numeric_limits<double>::quiet_NaN();

    int T() const { return static_cast<int>(y.size()); }
    void validate() const;
    PathView view() const { return PathView{y0, y.data(), x.data(), T(), dx, v}; }
};

// Structure-of-arrays collection of paths with a common (T, dx).
struct Panel {
    int T = 2;
    int dx = 1;
    std::vector<double> y0;
    std::vector<double> y;  // n x T
    std::vector<double> x;  // n x T x dx
    std::vector<double> v;  // n (NaN when not recorded)

    Panel() = default;
    Panel(int T_, int dx_) : T(T_), dx(dx_) {}

    std::size_t size() const { return y0.size(); }
    void reserve(std::size_t n);
    void push_back(const PanelPath& p);
    PathView view(std::size_t i) const {
        return PathView{y0[i], y.data() + i * T, x.data() + i * T * dx, T, dx, v[i]};
    }
    Panel subset(std::size_t begin, std::size_t end) const;
};

// Pluggable baseline hazard (integrated hazard, hazard, inverse integrated hazard).
struct Hazard {
    std::function<double(double)> Lambda;
    std::function<double(double)> lambda;
    std::function<double(double)> Lambda_inv;
    static Hazard weibull(double alpha);
};

double weibull_Lambda(double alpha, double y);
double weibull_lambda(double alpha, double y);
double weibull_Lambda_inv(double alpha, double p);

double index_xb(const Theta& th, std::span<const double> x);

double rho(const Theta& th, double y_t, double y_prev, std::span<const double> x_t);
double rho(const Theta& th, double y_t, double y_prev, double x_t);
double invert_rho(const Theta& th, double p_t, double y_prev, std::span<const double> x_t);
double invert_rho(const Theta& th, double p_t, double y_prev, double x_t);

// Conditional density of Y_t given (y_prev, x_t, a) under the Weibull MPH model.
double mph_density(const Theta& th, double y_t, double y_prev, std::span<const double> x_t, double a);
double mph_density(const Theta& th, double y_t, double y_prev, double x_t, double a);
double mph_density(const Hazard& hz, const Theta& th, double y_t, double y_prev, std::span<const double> x_t,
                   double a);

struct IntegratedSpells {
    std::vector<double> p;       // P_1..P_T
    std::vector<double> ptilde;  // P~_1..P~_{T-1}
    double pbar = 0.0;

    // 1 - P~_t computed without cancellation: sum_{s>t} P_s / sum_{s>=t} P_s.
    std::vector<double> ptilde_complement;
};

IntegratedSpells integrated_spells(const Theta& th, const PathView& path);

struct HelmertParts {
    std::vector<double> ptilde;
    double pbar = 0.0;
};

HelmertParts helmert_forward(std::span<const double> p);
std::vector<double> helmert_inverse(std::span<const double> ptilde, double pbar);
double helmert_jacobian_det(std::span<const double> ptilde, double pbar, int T);

// E[Pbar^delta | A = a] for Pbar ~ Gamma(T, e^a).
double gamma_moment_pbar(double delta, int T, double a);

// Fast two-period spells used by the score evaluators.
struct Spells2 {
    double p1, p2, pbar, pt, pt_c;  // pt = P~_1, pt_c = 1 - P~_1
};

Spells2 spells2(const Theta& th, const PathView& path);

}  // namespace fhr
