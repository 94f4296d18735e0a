#pragma once

#include "fhr/batch.hpp"
#include "fhr/dgp.hpp"
#include "fhr/moments.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fhr {

struct GmmOptions {
    double tol = 1e-9;
    int max_iter = 50;
    int max_halvings = 20;
    Exec exec = Exec::Parallel;
};

struct GmmResult {
    Theta theta_hat;
    Mat H;     // mean Jacobian of the moment
    Mat V;     // mean of phi phi'
    Mat avar;  // H^{-1} V H^{-T}, per observation
    Vec se;    // sqrt(diag(avar) / n)
    Vec moment_mean;
    double moment_norm = 0.0;
    bool converged = false;
    int iterations = 0;
    std::size_t n = 0;
};

// Central differences with step 1e-5 (1 + |theta_k|), same panel at every step; forward
// differences in a coordinate whose backward point leaves the parameter space.
Mat moment_jacobian(const MomentFn& phi, const Panel& panel, const Theta& th, Exec exec = Exec::Parallel);

GmmResult gmm_solve(const MomentFn& phi, const Panel& panel, const Theta& init, const GmmOptions& opt = {});
GmmResult asymptotic_se(const MomentFn& phi, const Panel& panel, const Theta& th, Exec exec = Exec::Parallel);

// ||H + V||_F / ||V||_F.
double information_gap(const Mat& H, const Mat& V);

struct BoundResult {
    Mat info;        // mean of phi phi'
    Mat bound_avar;  // info^{-1}, per observation
    Vec bound_se;    // sqrt(diag(info^{-1}) / n)
    std::size_t n = 0;
};

BoundResult efficiency_bound(const MomentFn& score, const Panel& panel, const Theta& th,
                             Exec exec = Exec::Parallel);

enum class EffectFlavor { EfficientScore, WorkingModel, Simple };
std::string flavor_name(EffectFlavor f);

struct EffectResult {
    double mu_hat = 0.0;
    double se = 0.0;
    double asd = 0.0;  // per-observation standard deviation of the influence function
    EffectFlavor flavor = EffectFlavor::EfficientScore;
    std::size_t n = 0;
};

// Efficient flavor: IF = phi_mu - mu + G I^{-1} S with I = E[S S'].
// Other flavors: IF = phi_mu - mu - G H^{-1} phi with H the score Jacobian.
EffectResult average_effect(const MomentFn& effect, const MomentFn& score, const Panel& panel,
                            const Theta& theta_hat, EffectFlavor flavor, Exec exec = Exec::Parallel);

// ASH at the evaluation point: lambda_alpha(y) exp(x'beta + gamma y') E[e^A].
double ash_target(const Theta& th, const EvalPoint& e, const HeterogeneitySpec& het);
// ASF at the evaluation point: exp(-(x'beta + gamma y') / alpha) Gamma(1 + 1/alpha) E[e^{-A/alpha}].
double asf_target(const Theta& th, const EvalPoint& e, const HeterogeneitySpec& het);

struct TableConfig {
    char experiment = 'A';
    std::size_t n = 1000000;
    std::uint64_t seed = 1;
    EvalPoint ash_point;
    Exec exec = Exec::Parallel;
};

struct EfficiencyTable {
    std::string experiment;
    std::vector<std::string> rows;
    std::vector<std::string> cols;
    Mat asd;    // per-observation asymptotic standard deviations
    Mat ratio;  // asd divided by the benchmark row
    int benchmark_row = 0;
    double working_p = 0.5;
    std::size_t n = 0;
    std::uint64_t seed = 0;

    double at(const std::string& row, const std::string& col) const;
    std::string to_csv() const;
    std::string to_text() const;
};

// Experiment A: rows SE bound, FB bound, working-model GMM, simple GMM; columns alpha, gamma, beta.
// Experiment B: rows FB bound, working-model GMM, simple GMM; columns alpha, gamma, beta, ASH.
// All quantities at theta0 on one simulated panel; the working model uses p = mean of X_2.
EfficiencyTable make_table(const TableConfig& cfg);
EfficiencyTable make_table(const TableConfig& cfg, const Panel& panel);

}  // namespace fhr
