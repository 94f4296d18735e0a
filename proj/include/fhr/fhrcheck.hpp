#pragma once

#include "fhr/altmodels.hpp"
#include "fhr/moments.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fhr {

enum class OutcomeKind { Continuous, Discrete };

// f(y_t | y_{t-1}, x_t, a; theta) with a scalar covariate.
using ModelDensity = std::function<double(const Vec& theta, double y_t, double y_prev, double x_t, double a)>;

struct ParametricModel {
    std::string name;
    ModelDensity density;
    OutcomeKind kind = OutcomeKind::Continuous;
    std::vector<double> support;         // discrete outcome values
    std::vector<double> covariate_grid;  // values of x_t
    std::vector<double> a_grid;
    std::vector<double> y0_grid;
    std::vector<double> y_cond_grid;  // fixed past outcomes for the invariance condition, continuous case
    int T = 2;

    // Grids nonempty and the density normalizes to 1 within 1e-8 at every grid point.
    void validate(const Vec& theta) const;
};

// Default heterogeneity grid: 12 Gauss-Legendre nodes on [-3, 3].
std::vector<double> default_a_grid();
// Grid used by the MPH models: 12 Gauss-Legendre nodes on [-2, 3]. Below a = -2 the
// law of Y_2 given a long first spell falls outside double range when gamma > 0.
std::vector<double> mph_a_grid();

ParametricModel mph_model(int T = 2);
ParametricModel mih_model(double delta);
ParametricModel logit_model(int T = 2);
ParametricModel poisson_model(int y_max = 20);

struct Candidate {
    int dim = 1;
    std::function<void(const PathView&, double*)> eval;
    // Optional conditional mean E[phi | a, y0, x1] the candidate must match (zero when absent).
    std::function<Vec(double a, double y0, double x1)> target;
};

Candidate candidate_from_moment(const MomentFn& m, const Theta& th);

// MPH candidate by moment id; "ash" and "asf" carry their conditional targets given a.
Candidate mph_candidate(const std::string& id, const Theta& th, const MomentOptions& opt = {});
// P_2 - 2 P_1: conditional mean -e^{-a}, so it fails the mean-zero condition.
Candidate broken_mph_candidate(const Theta& th);

struct CheckerOptions {
    double tol = 1e-6;
    int panels = 16;          // composite Gauss-Legendre panels per continuous dimension
    int nodes_per_panel = 16;
};

struct CheckerReport {
    double cond1_residual = 0.0;
    std::vector<double> cond2_variation;  // entry s - 2 for s = 2..T
    double tol = 0.0;
    bool cond1_pass = false;
    bool cond2_pass = false;
    std::string cond1_worst;  // grid location of the largest residual
    bool pass() const { return cond1_pass && cond2_pass; }
};

CheckerReport check_fhr(const ParametricModel& model, const Candidate& phi, const Vec& theta,
                        const CheckerOptions& opt = {});

// Null space of the linear FHR constraints for a discrete model with T = 2,
// computed per (y0, x1) block over unknowns phi(y1, y2, x2).
struct NullSpaceBlock {
    double y0 = 0.0;
    double x1 = 0.0;
    NullSpaceResult ns;
    int rows = 0;
};

struct DiscreteNullSpace {
    std::vector<double> support;
    std::vector<double> covariates;
    std::vector<NullSpaceBlock> blocks;
    std::string warning;

    int unknowns_per_block() const;
    int index(int i1, int i2, int j2) const;  // position of (y1, y2, x2) within a block
    int dimension() const;                    // total over blocks
    int min_block_dimension() const;

    using PathFn = std::function<double(double y0, double y1, double y2, double x1, double x2)>;
    // ||P phi|| / ||phi|| over all blocks, P the projection onto the null space.
    double captured_fraction(const PathFn& phi) const;
    // Candidate assembled from column c of every block's basis.
    Candidate basis_candidate(int c) const;
};

DiscreteNullSpace discrete_null_space(const ParametricModel& model, const Vec& theta, double rel_tol);

}  // namespace fhr
