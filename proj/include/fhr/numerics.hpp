#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fhr {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IllConditionedError : std::runtime_error {
    double condition;
    IllConditionedError(const std::string& msg, double cond) : std::runtime_error(msg), condition(cond) {}
};

enum class Exec { Serial, Parallel };

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Special functions

double log_gamma(double x);

// Gauss hypergeometric 2F1(a, b; c; z) for c > b > 0 and z <= 0.
double hyp2f1(double a, double b, double c, double z);
// Euler integral representation evaluated by adaptive quadrature; same domain as hyp2f1.
double hyp2f1_integral(double a, double b, double c, double z);

// ---------------------------------------------------------------------------
// Random numbers

// Counter-based generator (Philox 4x32-10). A stream is fully determined by
// (seed, stream_id); draws are indexed by an internal 64-bit counter.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    std::uint64_t next_u64();
    // Uniform on the open interval (0, 1).
    double uniform();
    double normal();

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::uint32_t buf_[4] = {0, 0, 0, 0};
    int buffered_ = 0;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

double sample_uniform(RngStream& rng);
double sample_exponential(double rate, RngStream& rng);
double sample_gamma(double shape, double rate, RngStream& rng);
double sample_beta(double a, double b, RngStream& rng);
int sample_bernoulli(double p, RngStream& rng);

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureRule {
    enum class Domain { Bounded, HalfLine };
    std::vector<double> nodes;    // in the original variable
    std::vector<double> weights;  // include the change-of-variables factor
    Domain domain = Domain::Bounded;
    double lo = 0.0;
    double hi = 0.0;

    std::size_t size() const { return nodes.size(); }

    static QuadratureRule gauss_legendre(int n, double lo, double hi);
    // Composite Gauss-Legendre on [lo, hi] split into equal panels.
    static QuadratureRule composite(int panels, int n_per_panel, double lo, double hi);
    // Half line [0, inf) via p = e^u - 1 with u in [0, log(1 + p_max)].
    static QuadratureRule half_line(int n, double p_max = 60.0);
};

// Raw Gauss-Legendre nodes and weights on [-1, 1], cached per n.
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre_ref(int n);

double integrate(const std::function<double(double)>& f, const QuadratureRule& rule);

// Adaptive Gauss-Legendre on [lo, hi] with local error control.
double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                          double rel_tol = 1e-13, double abs_tol = 1e-300, int max_depth = 40);

// ---------------------------------------------------------------------------
// Dense linear algebra

struct NullSpaceResult {
    Mat basis;                 // orthonormal columns
    Vec singular_values;       // full spectrum, descending
    double threshold = 0.0;    // rel_tol * sigma_max
};

NullSpaceResult null_space(const Mat& A, double rel_tol);

double condition_number(const Mat& A);
Vec solve_linear(const Mat& A, const Vec& b);
Mat invert(const Mat& A);

}  // namespace fhr
