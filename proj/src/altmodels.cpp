#include "fhr/altmodels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fhr {

// ---------------------------------------------------------------------------
// Poisson

void PoissonTheta::validate() const {
    for (double b : beta)
        if (!std::isfinite(b)) throw DomainError("PoissonTheta: beta must be finite");
    if (!std::isfinite(gamma)) throw DomainError("PoissonTheta: gamma must be finite");
}

std::vector<double> poisson_z(double y_prev, std::span<const double> x_t) {
    std::vector<double> z(x_t.begin(), x_t.end());
    z.push_back(y_prev);
    return z;
}

double poisson_index(const PoissonTheta& th, double y_prev, std::span<const double> x_t) {
    if (x_t.size() != th.beta.size()) throw DomainError("poisson_index: covariate dimension does not match beta");
    double s = th.gamma * y_prev;
    for (std::size_t k = 0; k < x_t.size(); ++k) s += x_t[k] * th.beta[k];
    return s;
}

double poisson_pmf(int k, double mean) {
    if (k < 0) return 0.0;
    if (!(mean > 0.0)) return k == 0 ? 1.0 : 0.0;
    return std::exp(k * std::log(mean) - mean - log_gamma(k + 1.0));
}

int poisson_truncation(double mean, double tail, int pad) {
    double cdf = 0.0;
    int k = 0;
    for (;; ++k) {
        cdf += poisson_pmf(k, mean);
        if (cdf >= 1.0 - tail) break;
        if (k > 100000) throw EvaluationError("poisson_truncation: mean too large");
    }
    return k + pad;
}

namespace {
void require_counts(int y0, int y1, int y2) {
    if (y0 < 0 || y1 < 0 || y2 < 0) throw DomainError("Poisson moments: counts must be nonnegative");
}
}  // namespace

Vec poisson_cw_moment(const PoissonTheta& th, int y0, int y1, int y2, std::span<const double> x1,
                      std::span<const double> x2) {
    require_counts(y0, y1, y2);
    const std::vector<double> z1 = poisson_z(y0, x1);
    const double e = std::exp(poisson_index(th, y0, x1) - poisson_index(th, y1, x2));
    Vec out(z1.size());
    for (std::size_t k = 0; k < z1.size(); ++k) out(k) = z1[k] * (y1 - y2 * e);
    return out;
}

Vec poisson_second_moment(const PoissonTheta& th, int y0, int y1, int y2, std::span<const double> x1,
                          std::span<const double> x2, const PoissonInstrument& m) {
    require_counts(y0, y1, y2);
    const std::vector<double> z1 = poisson_z(y0, x1);
    const double e = std::exp(2.0 * (poisson_index(th, y0, x1) - poisson_index(th, y1, x2)));
    const double bracket = y1 * (y1 - 1.0) - y2 * (y2 - 1.0) * e;
    const Vec mv = m ? m(z1) : Vec::Ones(1);
    return bracket * mv;
}

double poisson_taylor_moment(const PoissonTheta& th, const PoissonPsi& psi, int y0, int y1, int y2,
                             std::span<const double> x1, std::span<const double> x2) {
    require_counts(y0, y1, y2);
    const std::vector<double> c = psi(th, y0, y1, x1);
    if (c.empty()) throw DomainError("poisson_taylor_moment: psi must be a finite polynomial in v");
    for (double ck : c)
        if (!std::isfinite(ck)) throw DomainError("poisson_taylor_moment: psi must be a finite polynomial in v");
    const double decay = std::exp(-poisson_index(th, y1, x2));
    double falling = 1.0;  // y2! / (y2 - k)!
    double power = 1.0;    // exp(-k z2' theta)
    double out = 0.0;
    for (std::size_t k = 0; k < c.size() && static_cast<int>(k) <= y2; ++k) {
        out += c[k] * falling * power;
        falling *= y2 - static_cast<double>(k);
        power *= decay;
    }
    return out;
}

Vec poisson_exact_mean(const PoissonTheta& th, const PoissonMomentFn& phi, double a, int y0,
                       std::span<const double> x1, const PoissonFeedback& fb) {
    const double mean1 = std::exp(poisson_index(th, y0, x1) + a);
    const int k1 = poisson_truncation(mean1);
    Vec total;
    for (int y1 = 0; y1 <= k1; ++y1) {
        const double f1 = poisson_pmf(y1, mean1);
        const std::vector<double> pr = fb.probs(y0, y1, x1, a);
        if (pr.size() != fb.x2_values.size()) throw DomainError("poisson_exact_mean: one probability per x2 value");
        for (std::size_t j = 0; j < fb.x2_values.size(); ++j) {
            if (pr[j] == 0.0) continue;
            const std::vector<double>& x2 = fb.x2_values[j];
            const double mean2 = std::exp(poisson_index(th, y1, x2) + a);
            const int k2 = poisson_truncation(mean2);
            for (int y2 = 0; y2 <= k2; ++y2) {
                const Vec v = phi(y0, y1, y2, x1, x2) * (f1 * pr[j] * poisson_pmf(y2, mean2));
                if (total.size() == 0) total = Vec::Zero(v.size());
                total += v;
            }
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Mixed interactive hazards

void MihTheta::validate() const {
    base.validate();
    if (delta.size() != base.beta.size()) throw DomainError("MihTheta: delta must match the covariate dimension");
}

double MihTheta::scale(std::span<const double> x) const {
    if (x.size() != delta.size()) throw DomainError("MihTheta: covariate dimension does not match delta");
    double s = 1.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * delta[k];
    if (!(s > 0.0)) throw DomainError("MihTheta: 1 + x'delta must be positive");
    return s;
}

double mih_moment(const MihTheta& th, const PathView& path, double b, const MihInstrument& m) {
    if (path.T != 2) throw DomainError("mih_moment: defined for T = 2");
    if (!(b > 0.0)) throw DomainError("mih_moment: b must be positive");
    const double r = th.scale(path.xt(1)) / th.scale(path.xt(2));
    const double br = b * r;
    if (!(1.0 + br > 0.0)) throw DomainError("mih_moment: Gamma pole at 1 + b r <= 0");
    const double p1 = rho(th.base, path.yt(1), path.yt(0), path.xt(1));
    const double p2 = rho(th.base, path.yt(2), path.yt(1), path.xt(2));
    const double g = std::exp(log_gamma(1.0 + b) - log_gamma(1.0 + br));
    const double inst = m ? m(path.y0, path.xt(1)) : 1.0;
    return (std::pow(p1, b) - g * std::pow(p2, br)) * inst;
}

double mih_spell_moment(const MihTheta& th, std::span<const double> x, double a, double b) {
    return std::exp(-b * th.scale(x) * a + log_gamma(1.0 + b));
}

double mih_density(const MihTheta& th, double y_t, double y_prev, std::span<const double> x_t, double a) {
    if (!(y_t > 0.0)) throw DomainError("mih_density: duration must be positive");
    const double lin = th.base.gamma * y_prev + index_xb(th.base, x_t) + th.scale(x_t) * a;
    return weibull_lambda(th.base.alpha, y_t) * std::exp(lin - std::exp(lin) * weibull_Lambda(th.base.alpha, y_t));
}

void MihDgp::validate() const {
    theta.validate();
    if (theta.delta.size() != 1) throw DomainError("MihDgp: the design uses a scalar covariate");
    theta.scale(std::vector<double>{0.0});
    theta.scale(std::vector<double>{1.0});
    het.validate();
    if (!(y0_rate > 0.0)) throw DomainError("MihDgp: y0_rate must be positive");
    if (!(x1_prob >= 0.0 && x1_prob <= 1.0)) throw DomainError("MihDgp: x1_prob must lie in [0, 1]");
}

Panel simulate_mih_panel(const MihDgp& dgp, std::size_t n, std::uint64_t seed) {
    dgp.validate();
    Panel panel(2, 1);
    panel.y0.resize(n);
    panel.y.resize(2 * n);
    panel.x.resize(2 * n);
    panel.v.resize(n);
    const Theta& base = dgp.theta.base;
    const double d = dgp.theta.delta[0];
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < nn; ++i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        const double v = sample_gamma(dgp.het.kappa0, dgp.het.lambda0, rng);
        const double y0 = sample_exponential(dgp.y0_rate, rng);
        const double x1 = sample_bernoulli(dgp.x1_prob, rng);
        const double p1 = sample_exponential(std::pow(v, 1.0 + d * x1), rng);
        const double y1 = invert_rho(base, p1, y0, x1);
        const double s = (y0 + x1 + y1) * v;
        const double x2 = sample_bernoulli(s > 700.0 ? 1.0 : -std::expm1(-s), rng);
        const double p2 = sample_exponential(std::pow(v, 1.0 + d * x2), rng);
        const double y2 = invert_rho(base, p2, y1, x2);
        panel.y0[i] = y0;
        panel.v[i] = v;
        panel.y[2 * i] = y1;
        panel.y[2 * i + 1] = y2;
        panel.x[2 * i] = x1;
        panel.x[2 * i + 1] = x2;
    }
    return panel;
}

// ---------------------------------------------------------------------------
// Deconvolution kernel

namespace {

// Composite Gauss-Legendre on s in [0, 1], enough panels to resolve cos(s z).
template <class F>
double kernel_integral(double z, const F& f) {
    const auto& ref = gauss_legendre_ref(16);
    const int panels = std::max(4, static_cast<int>(std::ceil(std::abs(z) / 2.0)));
    const double h = 1.0 / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * h;
        for (std::size_t k = 0; k < ref.first.size(); ++k) {
            const double s = mid + 0.5 * h * ref.first[k];
            sum += 0.5 * h * ref.second[k] * f(s);
        }
    }
    return sum;
}

void require_kernel_args(double lambda, double sigma2) {
    if (!(lambda > 0.0)) throw DomainError("deconv_kernel: lambda must be positive");
    if (!(sigma2 >= 0.0)) throw DomainError("deconv_kernel: sigma2 must be nonnegative");
}

}  // namespace

double deconv_kernel(double z, double lambda, double sigma2) {
    require_kernel_args(lambda, sigma2);
    const double c = 0.5 * sigma2 / (lambda * lambda);
    return kernel_integral(z, [&](double s) { return std::cos(s * z) * std::exp(c * s * s); }) / std::numbers::pi;
}

double deconv_kernel_deriv(double z, double lambda, double sigma2) {
    require_kernel_args(lambda, sigma2);
    const double c = 0.5 * sigma2 / (lambda * lambda);
    return -kernel_integral(z, [&](double s) { return s * std::sin(s * z) * std::exp(c * s * s); }) /
           std::numbers::pi;
}

DeconvKernelTable::DeconvKernelTable(double lambda, double sigma2, double z_max, double step)
    : lambda_(lambda), sigma2_(sigma2), z_max_(z_max), step_(step) {
    require_kernel_args(lambda, sigma2);
    if (!(z_max > 0.0) || !(step > 0.0)) throw DomainError("DeconvKernelTable: z_max and step must be positive");
    const std::size_t n = static_cast<std::size_t>(std::ceil(z_max / step)) + 2;
    k_.resize(n);
    dk_.resize(n);
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 64)
    for (long long i = 0; i < nn; ++i) {
        const double z = static_cast<double>(i) * step;
        k_[i] = deconv_kernel(z, lambda, sigma2);
        dk_[i] = deconv_kernel_deriv(z, lambda, sigma2);
    }
    z_max_ = static_cast<double>(n - 2) * step;
}

double DeconvKernelTable::operator()(double z) const {
    const double az = std::abs(z);
    if (az >= z_max_) return deconv_kernel(az, lambda_, sigma2_);
    const double u = az / step_;
    const std::size_t i = static_cast<std::size_t>(u);
    const double t = u - static_cast<double>(i);
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * k_[i] + h10 * step_ * dk_[i] + h01 * k_[i + 1] + h11 * step_ * dk_[i + 1];
}

// ---------------------------------------------------------------------------
// Nonlinear regression moments

RegressionFunction linear_index_regression(double gamma, std::vector<double> beta) {
    auto mu = [gamma, beta](double y_prev, std::span<const double> x) {
        if (x.size() != beta.size()) throw DomainError("linear_index_regression: covariate dimension mismatch");
        double s = gamma * y_prev;
        for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * beta[k];
        return s;
    };
    return RegressionFunction{[mu](double y, std::span<const double> x, double a) { return mu(y, x) + a; },
                              [](double, std::span<const double>, double) { return 1.0; }};
}

void NonlinRegTheta::validate() const {
    if (!m_beta.m || !m_beta.dm_da) throw DomainError("NonlinRegTheta: regression function and derivative required");
    if (!(sigma2 > 0.0)) throw DomainError("NonlinRegTheta: sigma2 must be positive");
    if (!(lambda > 0.0)) throw DomainError("NonlinRegTheta: lambda must be positive");
}

RegularizedValue nonlin_reg_moment(const NonlinRegTheta& th, const RegPsi& psi, const PathView& path,
                                   const QuadratureRule& a_grid, const DeconvKernelTable* table) {
    th.validate();
    if (path.T != 2) throw DomainError("nonlin_reg_moment: defined for T = 2");
    if (a_grid.size() == 0) throw DomainError("nonlin_reg_moment: empty a grid");
    if (table && (table->lambda() != th.lambda || table->sigma2() != th.sigma2))
        throw DomainError("nonlin_reg_moment: kernel table built for different (lambda, sigma2)");
    const double y0 = path.y0, y1 = path.yt(1), y2 = path.yt(2);
    const auto x1 = path.xt(1), x2 = path.xt(2);
    const double inv_l = 1.0 / th.lambda;
    double sum = 0.0, peak = 0.0, first = 0.0, last = 0.0;
    for (std::size_t k = 0; k < a_grid.size(); ++k) {
        const double a = a_grid.nodes[k];
        const double z = (th.m_beta.m(y1, x2, a) - y2) * inv_l;
        const double kz = table ? (*table)(z) : deconv_kernel(z, th.lambda, th.sigma2);
        const double g = psi(y0, y1, x1, a) * th.m_beta.dm_da(y1, x2, a) * kz * inv_l;
        sum += a_grid.weights[k] * g;
        peak = std::max(peak, std::abs(g));
        if (k == 0) first = std::abs(g);
        last = std::abs(g);
    }
    RegularizedValue out;
    out.value = sum;
    out.boundary_mass = peak > 0.0 ? std::max(first, last) / peak : 0.0;
    out.warning = out.boundary_mass > 1e-6;
    return out;
}

double nonlin_reg_moment_polynomial(std::span<const double> coeffs, double mu2, double y2, double sigma2) {
    const int deg = static_cast<int>(coeffs.size()) - 1;
    const double d = y2 - mu2;
    // n-th derivative of g(tau) = sum_j c_j (tau - mu2)^j at tau = y2
    auto deriv = [&](int n) {
        double s = 0.0;
        for (int j = n; j <= deg; ++j) {
            double ff = 1.0;
            for (int i = 0; i < n; ++i) ff *= j - i;
            s += coeffs[j] * ff * std::pow(d, j - n);
        }
        return s;
    };
    double out = 0.0, fac = 1.0;
    for (int k = 0; 2 * k <= deg; ++k) {
        if (k > 0) fac *= -0.5 * sigma2 / k;
        out += fac * deriv(2 * k);
    }
    return out;
}

RegressionFunction NonlinRegDgp::regression() const {
    const double g = gamma, b = beta;
    return RegressionFunction{
        [g, b](double y, std::span<const double> x, double a) { return g * std::tanh(y) + b * x[0] + a; },
        [](double, std::span<const double>, double) { return 1.0; }};
}

RegPsi NonlinRegDgp::psi() const {
    const RegressionFunction reg = regression();
    return [reg](double y0, double y1, std::span<const double> x1, double a) {
        return (y1 - reg.m(y0, x1, a)) * std::exp(-std::abs(a));
    };
}

QuadratureRule NonlinRegDgp::a_grid() const {
    // psi has a kink at a = 0; split there and cover the exp(-|a|) envelope to below 1e-8
    const QuadratureRule lo = QuadratureRule::composite(24, 12, -24.0, 0.0);
    const QuadratureRule hi = QuadratureRule::composite(24, 12, 0.0, 24.0);
    QuadratureRule r;
    r.nodes = lo.nodes;
    r.weights = lo.weights;
    r.nodes.insert(r.nodes.end(), hi.nodes.begin(), hi.nodes.end());
    r.weights.insert(r.weights.end(), hi.weights.begin(), hi.weights.end());
    r.lo = -24.0;
    r.hi = 24.0;
    return r;
}

Panel simulate_nonlin_reg_panel(const NonlinRegDgp& dgp, std::size_t n, std::uint64_t seed) {
    if (!(dgp.sigma2 > 0.0) || !(dgp.a_rate > 0.0)) throw DomainError("NonlinRegDgp: invalid parameters");
    Panel panel(2, 1);
    panel.y0.resize(n);
    panel.y.resize(2 * n);
    panel.x.resize(2 * n);
    panel.v.resize(n);
    const double sd = std::sqrt(dgp.sigma2);
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < nn; ++i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        const double a = sample_exponential(dgp.a_rate, rng);
        const double y0 = rng.normal();
        const double x1 = sample_bernoulli(dgp.x1_prob, rng);
        const double y1 = dgp.gamma * std::tanh(y0) + dgp.beta * x1 + a + sd * rng.normal();
        const double x2 = sample_bernoulli(1.0 / (1.0 + std::exp(-(y1 - a))), rng);
        const double y2 = dgp.gamma * std::tanh(y1) + dgp.beta * x2 + a + sd * rng.normal();
        panel.y0[i] = y0;
        panel.v[i] = std::exp(a);
        panel.y[2 * i] = y1;
        panel.y[2 * i + 1] = y2;
        panel.x[2 * i] = x1;
        panel.x[2 * i + 1] = x2;
    }
    return panel;
}

}  // namespace fhr
