#pragma once

#include "fhr/dgp.hpp"
#include "fhr/mph.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fhr {

enum class Regime { FHR, StrictExogeneityOnly };

struct WorkingModel {
    double p = 0.5;            // Bernoulli success probability of X_2
    bool vague_prior = true;   // pi(v) = 1/v on v > 0
    void validate() const;
};

struct ExperimentPosterior {
    double kappa0 = 5.0;
    double lambda0 = 5.0;
    Feedback regime = Feedback::ExperimentA;
    static ExperimentPosterior from(const DgpConfig& cfg);
};

using MomentEval = std::function<void(const Theta&, const PathView&, double*)>;

struct MomentFn {
    std::string id;
    int dim = 0;
    Regime regime = Regime::FHR;
    std::optional<WorkingModel> requires_model;
    MomentEval eval;

    Vec evaluate(const Theta& th, const PathView& path) const;
};

// Evaluation point (y_t, y_{t-1}, x_t) for average effects.
struct EvalPoint {
    double y = 1.0;
    double yprev = 1.0;
    std::vector<double> x{1.0};
};

// Instrument m(path, t) of (Y^{t-2}, X^{t-1}) for the period-t difference.
using Instrument = std::function<std::vector<double>(const PathView&, int)>;

// m = (1, Y_{t-2}, X_{t-1}).
Instrument default_ab_instrument();

std::vector<double> ab_moment(const Theta& th, const PathView& path, const Instrument& m);
Vec simple_moment(const Theta& th, const PathView& path);

// Inputs shared by the closed-form T = 2 scores.
struct ScoreState {
    double y0, x1, y1;
    double pt, pt_c, pbar;  // P~_1, 1 - P~_1, Pbar
};

ScoreState score_state(const Theta& th, const PathView& path);

// C_2 = Pbar^{1/alpha} exp(-x_1 beta / alpha - gamma y_0 / alpha).
double c2_factor(const Theta& th, double y0, double x1, double pbar);

// gamma and alpha components given the beta component and E[V | conditioning set].
double score_gamma_component(const Theta& th, const ScoreState& s, double ev_pbar);
double score_alpha_component(const Theta& th, const ScoreState& s, double ev_pbar, double phi_beta,
                             double phi_gamma);

// Locally efficient score (alpha, beta, gamma) under the working model.
Vec loceff_score(const Theta& th, const PathView& path, const WorkingModel& wm);
Vec loceff_score_state(const Theta& th, const ScoreState& s, const WorkingModel& wm, int T);

struct CondExpectations {
    double ex2_pt;      // E[X2 | Y0, X1, P~1, Pbar]
    double ex2;         // E[X2 | Y0, X1, Pbar]
    double ex2v_pt;     // E[X2 V | Y0, X1, P~1, Pbar]
    double ex2_1mpt_v;  // E[X2 (1 - P~1) V | Y0, X1, Pbar]
};

double posterior_mean_v(const ExperimentPosterior& post, double pbar, int T = 2);
// E[V | Y0, X1, X2, Pbar] under the Experiment A design.
double posterior_mean_v_given_x2(const ExperimentPosterior& post, double y0, double x1, double x2, double pbar,
                                 int T = 2);

CondExpectations conditional_expectations_A(double y0, double x1, double pbar, const ExperimentPosterior& post);
CondExpectations conditional_expectations_B(const Theta& th, double y0, double x1, double ptilde1, double pbar,
                                            const ExperimentPosterior& post);

Vec eff_score_feedback(const Theta& th, const PathView& path, const ExperimentPosterior& post);
Vec eff_score_feedback_state(const Theta& th, const ScoreState& s, const CondExpectations& ce, double ev);
// No-feedback form of the beta component used under Experiment A.
double eff_score_beta_nofeedback(const ScoreState& s, double ev, double ex2v);

Vec eff_score_strict_exog(const Theta& th, const PathView& path, const ExperimentPosterior& post);

double ash_moment(const Theta& th, const PathView& path, const EvalPoint& e);
double ash_scale(const Theta& th, const EvalPoint& e);
double asf_moment(const Theta& th, const PathView& path, const EvalPoint& e);
// Alternative identifying form built from P_1 alone.
double asf_moment_p1(const Theta& th, const PathView& path, const EvalPoint& e);

struct MomentOptions {
    WorkingModel wm;
    ExperimentPosterior post;
    EvalPoint eval;
    Instrument instrument;
};

// Identifiers: simple, ab, loceff, eff-fb, eff-se, ash, asf.
MomentFn make_moment(const std::string& id, const MomentOptions& opt = {});
std::vector<std::string> mph_moment_ids();

}  // namespace fhr
