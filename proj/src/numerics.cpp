#include "fhr/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace fhr {

// ---------------------------------------------------------------------------
// log_gamma: Lanczos approximation (g = 7, nine coefficients).

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

double lanczos_log_gamma(double x) {
    // valid for x >= 0.5
    const double xm = x - 1.0;
    double s = kLanczos[0];
    for (int i = 1; i < 9; ++i) s += kLanczos[i] / (xm + i);
    const double t = xm + kLanczosG + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (xm + 0.5) * std::log(t) - t + std::log(s);
}

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("log_gamma: argument must be positive and finite");
    if (x == 1.0 || x == 2.0) return 0.0;
    if (x < 0.5) return lanczos_log_gamma(x + 1.0) - std::log(x);
    return lanczos_log_gamma(x);
}

// ---------------------------------------------------------------------------
// Quadrature

const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre_ref(int n) {
    static std::mutex mu;
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    if (n < 1) throw DomainError("gauss_legendre: need at least one node");
    std::vector<double> x(n), w(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

QuadratureRule QuadratureRule::gauss_legendre(int n, double lo, double hi) {
    return composite(1, n, lo, hi);
}

QuadratureRule QuadratureRule::composite(int panels, int n_per_panel, double lo, double hi) {
    if (!(hi > lo)) throw DomainError("quadrature: empty interval");
    if (panels < 1) throw DomainError("quadrature: need at least one panel");
    const auto& ref = gauss_legendre_ref(n_per_panel);
    QuadratureRule r;
    r.domain = Domain::Bounded;
    r.lo = lo;
    r.hi = hi;
    const double width = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + p * width;
        const double half = 0.5 * width;
        for (int i = 0; i < n_per_panel; ++i) {
            r.nodes.push_back(a + half * (ref.first[i] + 1.0));
            r.weights.push_back(half * ref.second[i]);
        }
    }
    return r;
}

QuadratureRule QuadratureRule::half_line(int n, double p_max) {
    if (!(p_max > 0.0)) throw DomainError("half_line: p_max must be positive");
    const double umax = std::log1p(p_max);
    QuadratureRule base = gauss_legendre(n, 0.0, umax);
    QuadratureRule r;
    r.domain = Domain::HalfLine;
    r.lo = 0.0;
    r.hi = p_max;
    for (std::size_t i = 0; i < base.size(); ++i) {
        const double eu = std::exp(base.nodes[i]);
        r.nodes.push_back(eu - 1.0);
        r.weights.push_back(base.weights[i] * eu);
    }
    return r;
}

double integrate(const std::function<double(double)>& f, const QuadratureRule& rule) {
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double v = f(rule.nodes[i]);
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os.precision(17);
            os << "integrate: non-finite integrand at node " << rule.nodes[i];
            throw EvaluationError(os.str());
        }
        s += rule.weights[i] * v;
    }
    return s;
}

namespace {

template <class F>
double gl_panel(const F& f, double a, double b, const std::vector<double>& x, const std::vector<double>& w) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(mid + half * x[i]);
    return s * half;
}

template <class F>
double adaptive_impl(const F& f, double lo, double hi, double rel_tol, double abs_tol, int max_depth) {
    static const auto& ref = gauss_legendre_ref(15);
    struct Seg {
        double a, b, whole;
        int depth;
    };
    const double total0 = gl_panel(f, lo, hi, ref.first, ref.second);
    std::vector<Seg> stack{{lo, hi, total0, 0}};
    const double scale = std::abs(total0);
    double result = 0.0;
    while (!stack.empty()) {
        Seg s = stack.back();
        stack.pop_back();
        const double m = 0.5 * (s.a + s.b);
        const double left = gl_panel(f, s.a, m, ref.first, ref.second);
        const double right = gl_panel(f, m, s.b, ref.first, ref.second);
        const double refined = left + right;
        const double err = std::abs(refined - s.whole);
        const double tol = std::max(rel_tol * std::max(scale, std::abs(refined)), abs_tol);
        if (err <= tol || s.depth >= max_depth) {
            result += refined;
        } else {
            stack.push_back({m, s.b, right, s.depth + 1});
            stack.push_back({s.a, m, left, s.depth + 1});
        }
    }
    if (!std::isfinite(result)) throw EvaluationError("integrate_adaptive: non-finite result");
    return result;
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi, double rel_tol,
                          double abs_tol, int max_depth) {
    return adaptive_impl(f, lo, hi, rel_tol, abs_tol, max_depth);
}

// ---------------------------------------------------------------------------
// hyp2f1

namespace {

double hyp2f1_series(double a, double b, double c, double z) {
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 5000; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) return sum;
    }
    throw EvaluationError("hyp2f1: series did not converge");
}

double hyp2f1_euler(double a, double b, double c, double z) {
    const double d = c - b;
    const double pref = std::exp(log_gamma(c) - log_gamma(b) - log_gamma(d));
    // t in [0, 1/2]: t = u^{1/b} absorbs t^{b-1}
    auto left = [&](double u) {
        const double t = std::pow(u, 1.0 / b);
        return std::pow(1.0 - t, d - 1.0) * std::pow(1.0 - z * t, -a) / b;
    };
    // t in [1/2, 1]: 1 - t = w^{1/d} absorbs (1-t)^{d-1}
    auto right = [&](double w) {
        const double t = 1.0 - std::pow(w, 1.0 / d);
        return std::pow(t, b - 1.0) * std::pow(1.0 - z * t, -a) / d;
    };
    const double il = adaptive_impl(left, 0.0, std::pow(0.5, b), 1e-14, 1e-300, 40);
    const double ir = adaptive_impl(right, 0.0, std::pow(0.5, d), 1e-14, 1e-300, 40);
    return pref * (il + ir);
}

}  // namespace

double hyp2f1_integral(double a, double b, double c, double z) {
    if (!(b > 0.0) || !(c > b) || !(z <= 0.0) || !std::isfinite(a) || !std::isfinite(z))
        throw DomainError("hyp2f1_integral: requires c > b > 0 and z <= 0");
    return hyp2f1_euler(a, b, c, z);
}

double hyp2f1(double a, double b, double c, double z) {
    if (!(b > 0.0) || !(c > b) || !(z <= 0.0) || !std::isfinite(a) || !std::isfinite(z))
        throw DomainError("hyp2f1: requires c > b > 0 and z <= 0");
    if (z == 0.0) return 1.0;
    // Pfaff: 2F1(a, b; c; z) = (1 - z)^{-a} 2F1(a, c - b; c; z / (z - 1)); all terms positive
    const double w = z / (z - 1.0);
    if (w <= 0.9) return std::pow(1.0 - z, -a) * hyp2f1_series(a, c - b, c, w);
    return hyp2f1_euler(a, b, c, z);
}

// ---------------------------------------------------------------------------
// RNG

namespace {

inline void philox_round(std::uint32_t* ctr, const std::uint32_t* key) {
    constexpr std::uint64_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    const std::uint64_t p0 = M0 * ctr[0];
    const std::uint64_t p1 = M1 * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t c1 = ctr[1], c3 = ctr[3];
    ctr[0] = hi1 ^ c1 ^ key[0];
    ctr[1] = lo1;
    ctr[2] = hi0 ^ c3 ^ key[1];
    ctr[3] = lo0;
}

void philox4x32_10(std::uint64_t counter, std::uint64_t stream, std::uint64_t seed, std::uint32_t* out) {
    std::uint32_t ctr[4] = {static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
                            static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::uint32_t key[2] = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    for (int r = 0; r < 10; ++r) {
        philox_round(ctr, key);
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
    }
    for (int i = 0; i < 4; ++i) out[i] = ctr[i];
}

}  // namespace

std::uint64_t RngStream::next_u64() {
    if (buffered_ == 0) {
        philox4x32_10(counter_++, stream_, seed_, buf_);
        buffered_ = 2;
    }
    const int i = 2 - buffered_;
    --buffered_;
    return (static_cast<std::uint64_t>(buf_[2 * i]) << 32) | buf_[2 * i + 1];
}

double RngStream::uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return spare_normal_;
    }
    const double u1 = uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(ang);
    has_spare_normal_ = true;
    return r * std::cos(ang);
}

double sample_uniform(RngStream& rng) { return rng.uniform(); }

double sample_exponential(double rate, RngStream& rng) {
    if (!(rate > 0.0)) throw DomainError("sample_exponential: rate must be positive");
    return -std::log(rng.uniform()) / rate;
}

double sample_gamma(double shape, double rate, RngStream& rng) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw DomainError("sample_gamma: shape and rate must be positive");
    if (shape < 1.0) {
        const double g = sample_gamma(shape + 1.0, 1.0, rng);
        return g * std::pow(rng.uniform(), 1.0 / shape) / rate;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

double sample_beta(double a, double b, RngStream& rng) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("sample_beta: parameters must be positive");
    const double x = sample_gamma(a, 1.0, rng);
    const double y = sample_gamma(b, 1.0, rng);
    return x / (x + y);
}

int sample_bernoulli(double p, RngStream& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("sample_bernoulli: p must lie in [0, 1]");
    return rng.uniform() < p ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Linear algebra

NullSpaceResult null_space(const Mat& A, double rel_tol) {
    NullSpaceResult out;
    const Eigen::Index n = A.cols();
    if (A.rows() == 0 || A.size() == 0) {
        out.basis = Mat::Identity(n, n);
        return out;
    }
    Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    out.singular_values = s;
    const double smax = s.size() ? s(0) : 0.0;
    out.threshold = rel_tol * smax;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > out.threshold) ++rank;
    if (smax == 0.0) rank = 0;
    out.basis = svd.matrixV().rightCols(n - rank);
    return out;
}

double condition_number(const Mat& A) {
    Eigen::JacobiSVD<Mat> svd(A);
    const Vec& s = svd.singularValues();
    if (s.size() == 0) return 0.0;
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

namespace {
void require_well_conditioned(const Mat& A, const char* who) {
    if (A.rows() != A.cols()) throw DomainError(std::string(who) + ": matrix must be square");
    const double cond = condition_number(A);
    if (!(cond <= 1e12)) {
        std::ostringstream os;
        os << who << ": ill-conditioned matrix (condition number " << cond << ")";
        throw IllConditionedError(os.str(), cond);
    }
}
}  // namespace

Vec solve_linear(const Mat& A, const Vec& b) {
    require_well_conditioned(A, "solve_linear");
    return A.fullPivLu().solve(b);
}

Mat invert(const Mat& A) {
    require_well_conditioned(A, "invert");
    return A.fullPivLu().inverse();
}

}  // namespace fhr
