#pragma once

#include "fhr/dgp.hpp"
#include "fhr/mph.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace fhr {

// ---------------------------------------------------------------------------
// Poisson counts with lagged dependence: Y_t ~ Poisson(exp(z_t' theta + a)),
// z_t = (x_t', y_{t-1})'.

struct PoissonTheta {
    std::vector<double> beta;
    double gamma = 0.0;
    int dz() const { return static_cast<int>(beta.size()) + 1; }
    void validate() const;
};

std::vector<double> poisson_z(double y_prev, std::span<const double> x_t);
double poisson_index(const PoissonTheta& th, double y_prev, std::span<const double> x_t);
double poisson_pmf(int k, double mean);
// Smallest K with P(Y <= K) >= 1 - tail, plus pad.
int poisson_truncation(double mean, double tail = 1e-12, int pad = 10);

Vec poisson_cw_moment(const PoissonTheta& th, int y0, int y1, int y2, std::span<const double> x1,
                      std::span<const double> x2);

using PoissonInstrument = std::function<Vec(std::span<const double> z1)>;
Vec poisson_second_moment(const PoissonTheta& th, int y0, int y1, int y2, std::span<const double> x1,
                          std::span<const double> x2, const PoissonInstrument& m);

// Coefficients c_0..c_K of psi(v) = sum_k c_k v^k, given (y0, y1, x1).
using PoissonPsi =
    std::function<std::vector<double>(const PoissonTheta& th, int y0, int y1, std::span<const double> x1)>;
double poisson_taylor_moment(const PoissonTheta& th, const PoissonPsi& psi, int y0, int y1, int y2,
                             std::span<const double> x1, std::span<const double> x2);

using PoissonMomentFn =
    std::function<Vec(int y0, int y1, int y2, std::span<const double> x1, std::span<const double> x2)>;

// Distribution of X_2 over a finite set of values given (y0, y1, x1, a).
struct PoissonFeedback {
    std::vector<std::vector<double>> x2_values;
    std::function<std::vector<double>(int y0, int y1, std::span<const double> x1, double a)> probs;
};

// E[phi | y0, x1, a] by exact summation over (y1, y2), truncated per poisson_truncation.
Vec poisson_exact_mean(const PoissonTheta& th, const PoissonMomentFn& phi, double a, int y0,
                       std::span<const double> x1, const PoissonFeedback& fb);

// ---------------------------------------------------------------------------
// Mixed interactive hazards: P_t | a ~ Exponential(exp((1 + x_t' delta) a)).

struct MihTheta {
    Theta base;
    std::vector<double> delta;
    void validate() const;
    double scale(std::span<const double> x) const;  // 1 + x' delta
};

using MihInstrument = std::function<double(double y0, std::span<const double> x1)>;

double mih_moment(const MihTheta& th, const PathView& path, double b, const MihInstrument& m);
// E[p_t^b | a] = exp(-b (1 + x' delta) a) Gamma(1 + b).
double mih_spell_moment(const MihTheta& th, std::span<const double> x, double a, double b);
double mih_density(const MihTheta& th, double y_t, double y_prev, std::span<const double> x_t, double a);

struct MihDgp {
    MihTheta theta{theta0(), {0.25}};
    HeterogeneitySpec het;
    double y0_rate = 1.5;
    double x1_prob = 0.5;
    void validate() const;
};

// X_2 ~ Bernoulli(1 - exp(-(Y0 + X1 + Y1) V)); T = 2.
Panel simulate_mih_panel(const MihDgp& dgp, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Nonlinear regression Y_t = m(Y_{t-1}, X_t, A) + eps_t, eps_t ~ N(0, sigma2).

// K(z) = (1/pi) int_0^1 cos(s z) exp(sigma2 s^2 / (2 lambda^2)) ds.
double deconv_kernel(double z, double lambda, double sigma2);
double deconv_kernel_deriv(double z, double lambda, double sigma2);

// Cubic Hermite table of deconv_kernel on [0, z_max]; direct evaluation beyond.
class DeconvKernelTable {
public:
    DeconvKernelTable(double lambda, double sigma2, double z_max = 400.0, double step = 0.02);
    double operator()(double z) const;
    double lambda() const { return lambda_; }
    double sigma2() const { return sigma2_; }

private:
    double lambda_, sigma2_, z_max_, step_;
    std::vector<double> k_, dk_;
};

struct RegressionFunction {
    std::function<double(double y_prev, std::span<const double> x, double a)> m;
    std::function<double(double y_prev, std::span<const double> x, double a)> dm_da;
};

// m(y, x, a) = gamma y + x' beta + a.
RegressionFunction linear_index_regression(double gamma, std::vector<double> beta);

struct NonlinRegTheta {
    RegressionFunction m_beta;
    double sigma2 = 1.0;
    double lambda = 1.0;
    void validate() const;
};

using RegPsi = std::function<double(double y0, double y1, std::span<const double> x1, double a)>;

struct RegularizedValue {
    double value = 0.0;
    double boundary_mass = 0.0;  // integrand magnitude at the grid ends relative to its peak
    bool warning = false;        // boundary_mass > 1e-6
};

// Quadrature evaluation over a_grid of the regularized moment
// (1/lambda) int psi(a) dm/da K((m(y1, x2, a) - y2) / lambda) da.
RegularizedValue nonlin_reg_moment(const NonlinRegTheta& th, const RegPsi& psi, const PathView& path,
                                   const QuadratureRule& a_grid, const DeconvKernelTable* table = nullptr);

// Exact value when m = mu(y1, x2) + a and psi = sum_j c_j a^j: the regularized
// inverse reduces to sum_k (-sigma2/2)^k / k! g^{(2k)}(y2), g(tau) = psi(tau - mu).
double nonlin_reg_moment_polynomial(std::span<const double> coeffs, double mu2, double y2, double sigma2);

// Monte Carlo design for the regularization bias.
struct NonlinRegDgp {
    double gamma = 0.5;
    double beta = 0.3;
    double sigma2 = 0.04;
    double a_rate = 1.0;  // A ~ Exponential(a_rate)
    double x1_prob = 0.5;
    RegressionFunction regression() const;  // gamma tanh(y) + beta x + a
    RegPsi psi() const;                     // (y1 - m(y0, x1, a)) exp(-|a|)
    QuadratureRule a_grid() const;
};

// Panel.v stores e^A.
Panel simulate_nonlin_reg_panel(const NonlinRegDgp& dgp, std::size_t n, std::uint64_t seed);

}  // namespace fhr
