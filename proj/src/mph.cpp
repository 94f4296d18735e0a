#include "fhr/mph.hpp"

#include <cmath>
#include <numeric>

namespace fhr {

Vec Theta::pack() const {
    Vec v(dim());
    v(0) = alpha;
    for (std::size_t k = 0; k < beta.size(); ++k) v(1 + k) = beta[k];
    v(dim() - 1) = gamma;
    return v;
}

Theta Theta::unpack(const Vec& v) {
    if (v.size() < 2) throw DomainError("Theta::unpack: need at least alpha and gamma");
    Theta th;
    th.alpha = v(0);
    th.beta.assign(v.data() + 1, v.data() + v.size() - 1);
    th.gamma = v(v.size() - 1);
    return th;
}

void Theta::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("Theta: alpha must be positive");
    for (double b : beta)
        if (!std::isfinite(b)) throw DomainError("Theta: beta must be finite");
    if (!std::isfinite(gamma)) throw DomainError("Theta: gamma must be finite");
}

Theta theta0() { return Theta{0.75, {-0.1}, 0.75 * std::log(2.0)}; }

void PanelPath::validate() const {
    if (T() < 2) throw DomainError("PanelPath: need T >= 2");
    if (!(y0 > 0.0)) throw DomainError("PanelPath: durations must be positive");
    for (double yt : y)
        if (!(yt > 0.0)) throw DomainError("PanelPath: durations must be positive");
    if (dx < 1 || x.size() != static_cast<std::size_t>(T() * dx))
        throw DomainError("PanelPath: covariate block must be T x dx");
}

void Panel::reserve(std::size_t n) {
    y0.reserve(n);
    y.reserve(n * T);
    x.reserve(n * T * dx);
    v.reserve(n);
}

void Panel::push_back(const PanelPath& p) {
    if (p.T() != T || p.dx != dx) throw DomainError("Panel: path shape does not match panel");
    y0.push_back(p.y0);
    y.insert(y.end(), p.y.begin(), p.y.end());
    x.insert(x.end(), p.x.begin(), p.x.end());
    v.push_back(p.v);
}

Panel Panel::subset(std::size_t begin, std::size_t end) const {
    Panel out(T, dx);
    out.y0.assign(y0.begin() + begin, y0.begin() + end);
    out.y.assign(y.begin() + begin * T, y.begin() + end * T);
    out.x.assign(x.begin() + begin * T * dx, x.begin() + end * T * dx);
    out.v.assign(v.begin() + begin, v.begin() + end);
    return out;
}

double weibull_Lambda(double alpha, double y) {
    if (!(alpha > 0.0) || !(y > 0.0)) throw DomainError("weibull_Lambda: inputs must be positive");
    return std::pow(y, alpha);
}

double weibull_lambda(double alpha, double y) {
    if (!(alpha > 0.0) || !(y > 0.0)) throw DomainError("weibull_lambda: inputs must be positive");
    return alpha * std::pow(y, alpha - 1.0);
}

double weibull_Lambda_inv(double alpha, double p) {
    if (!(alpha > 0.0) || !(p > 0.0)) throw DomainError("weibull_Lambda_inv: inputs must be positive");
    return std::pow(p, 1.0 / alpha);
}

Hazard Hazard::weibull(double alpha) {
    return Hazard{[alpha](double y) { return weibull_Lambda(alpha, y); },
                  [alpha](double y) { return weibull_lambda(alpha, y); },
                  [alpha](double p) { return weibull_Lambda_inv(alpha, p); }};
}

double index_xb(const Theta& th, std::span<const double> x) {
    if (x.size() != th.beta.size()) throw DomainError("covariate dimension does not match beta");
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * th.beta[k];
    return s;
}

double rho(const Theta& th, double y_t, double y_prev, std::span<const double> x_t) {
    return weibull_Lambda(th.alpha, y_t) * std::exp(th.gamma * y_prev + index_xb(th, x_t));
}

double rho(const Theta& th, double y_t, double y_prev, double x_t) {
    return rho(th, y_t, y_prev, std::span<const double>(&x_t, 1));
}

double invert_rho(const Theta& th, double p_t, double y_prev, std::span<const double> x_t) {
    if (!(p_t > 0.0)) throw DomainError("invert_rho: p must be positive");
    return weibull_Lambda_inv(th.alpha, p_t * std::exp(-th.gamma * y_prev - index_xb(th, x_t)));
}

double invert_rho(const Theta& th, double p_t, double y_prev, double x_t) {
    return invert_rho(th, p_t, y_prev, std::span<const double>(&x_t, 1));
}

double mph_density(const Hazard& hz, const Theta& th, double y_t, double y_prev, std::span<const double> x_t,
                   double a) {
    if (!(y_t > 0.0)) throw DomainError("mph_density: duration must be positive");
    const double lin = th.gamma * y_prev + index_xb(th, x_t);
    const double r = hz.Lambda(y_t) * std::exp(lin);
    return hz.lambda(y_t) * std::exp(lin + a - r * std::exp(a));
}

double mph_density(const Theta& th, double y_t, double y_prev, std::span<const double> x_t, double a) {
    if (!(y_t > 0.0)) throw DomainError("mph_density: duration must be positive");
    const double lin = th.gamma * y_prev + index_xb(th, x_t);
    const double r = weibull_Lambda(th.alpha, y_t) * std::exp(lin);
    return weibull_lambda(th.alpha, y_t) * std::exp(lin + a - r * std::exp(a));
}

double mph_density(const Theta& th, double y_t, double y_prev, double x_t, double a) {
    return mph_density(th, y_t, y_prev, std::span<const double>(&x_t, 1), a);
}

IntegratedSpells integrated_spells(const Theta& th, const PathView& path) {
    IntegratedSpells s;
    const int T = path.T;
    s.p.resize(T);
    for (int t = 1; t <= T; ++t) s.p[t - 1] = rho(th, path.yt(t), path.yt(t - 1), path.xt(t));
    s.ptilde.resize(T - 1);
    s.ptilde_complement.resize(T - 1);
    double tail = 0.0;
    std::vector<double> suffix(T + 1, 0.0);
    for (int t = T - 1; t >= 0; --t) {
        tail += s.p[t];
        suffix[t] = tail;
    }
    for (int t = 0; t < T - 1; ++t) {
        s.ptilde[t] = s.p[t] / suffix[t];
        s.ptilde_complement[t] = suffix[t + 1] / suffix[t];
    }
    s.pbar = suffix[0];
    return s;
}

HelmertParts helmert_forward(std::span<const double> p) {
    const int T = static_cast<int>(p.size());
    if (T < 2) throw DomainError("helmert_forward: need T >= 2");
    for (double v : p)
        if (!(v > 0.0)) throw DomainError("helmert_forward: spells must be positive");
    HelmertParts h;
    h.ptilde.resize(T - 1);
    double tail = 0.0;
    std::vector<double> suffix(T);
    for (int t = T - 1; t >= 0; --t) {
        tail += p[t];
        suffix[t] = tail;
    }
    for (int t = 0; t < T - 1; ++t) h.ptilde[t] = p[t] / suffix[t];
    h.pbar = suffix[0];
    return h;
}

std::vector<double> helmert_inverse(std::span<const double> ptilde, double pbar) {
    if (!(pbar > 0.0)) throw DomainError("helmert_inverse: pbar must be positive");
    for (double v : ptilde)
        if (!(v > 0.0 && v < 1.0)) throw DomainError("helmert_inverse: ptilde must lie in (0, 1)");
    const int T = static_cast<int>(ptilde.size()) + 1;
    std::vector<double> p(T);
    double survive = 1.0;
    for (int t = 0; t < T - 1; ++t) {
        p[t] = survive * ptilde[t] * pbar;
        survive *= 1.0 - ptilde[t];
    }
    p[T - 1] = survive * pbar;
    return p;
}

double helmert_jacobian_det(std::span<const double> ptilde, double pbar, int T) {
    if (static_cast<int>(ptilde.size()) != T - 1) throw DomainError("helmert_jacobian_det: need T - 1 ratios");
    double logdet = (T - 1) * std::log(pbar);
    for (int s = 1; s <= T - 2; ++s) logdet += (T - (s + 1)) * std::log1p(-ptilde[s - 1]);
    return std::exp(logdet);
}

double gamma_moment_pbar(double delta, int T, double a) {
    if (!(delta > -T)) throw DomainError("gamma_moment_pbar: need delta > -T");
    return std::exp(-delta * a + log_gamma(T + delta) - log_gamma(T));
}

Spells2 spells2(const Theta& th, const PathView& path) {
    const double xb1 = index_xb(th, path.xt(1));
    const double xb2 = index_xb(th, path.xt(2));
    const double p1 = std::pow(path.y[0], th.alpha) * std::exp(th.gamma * path.y0 + xb1);
    const double p2 = std::pow(path.y[1], th.alpha) * std::exp(th.gamma * path.y[0] + xb2);
    const double pbar = p1 + p2;
    return Spells2{p1, p2, pbar, p1 / pbar, p2 / pbar};
}

}  // namespace fhr
