#include "fhr/moments.hpp"

#include <cmath>
#include <stdexcept>

namespace fhr {

namespace {

constexpr double kLogFloor = 1e-300;

double safe_log(double x) { return std::log(x < kLogFloor ? kLogFloor : x); }

void require_two_periods(const PathView& path, const char* who) {
    if (path.T != 2) throw DomainError(std::string(who) + ": closed form is stated for T = 2");
    if (path.dx != 1) throw DomainError(std::string(who) + ": closed form uses a scalar covariate");
}

void require_interior(double pt, double pt_c, const char* who) {
    if (!(pt > 0.0) || !(pt_c > 0.0)) throw EvaluationError(std::string(who) + ": P~1 on the boundary of (0, 1)");
}

}  // namespace

void WorkingModel::validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("WorkingModel: p must lie in [0, 1]");
}

ExperimentPosterior ExperimentPosterior::from(const DgpConfig& cfg) {
    return ExperimentPosterior{cfg.het.kappa0, cfg.het.lambda0, cfg.feedback};
}

Vec MomentFn::evaluate(const Theta& th, const PathView& path) const {
    Vec out(dim);
    eval(th, path, out.data());
    return out;
}

Instrument default_ab_instrument() {
    return [](const PathView& path, int t) {
        return std::vector<double>{1.0, path.yt(t - 2), path.x_scalar(t - 1)};
    };
}

std::vector<double> ab_moment(const Theta& th, const PathView& path, const Instrument& m) {
    if (path.T < 2) throw DomainError("ab_moment: need T >= 2");
    std::vector<double> out;
    double prev = rho(th, path.yt(1), path.yt(0), path.xt(1));
    for (int t = 2; t <= path.T; ++t) {
        const double cur = rho(th, path.yt(t), path.yt(t - 1), path.xt(t));
        for (double mk : m(path, t)) out.push_back((cur - prev) * mk);
        prev = cur;
    }
    return out;
}

ScoreState score_state(const Theta& th, const PathView& path) {
    const Spells2 s = spells2(th, path);
    return ScoreState{path.y0, path.x_scalar(1), path.y[0], s.pt, s.pt_c, s.pbar};
}

Vec simple_moment(const Theta& th, const PathView& path) {
    require_two_periods(path, "simple_moment");
    const Spells2 s = spells2(th, path);
    require_interior(s.pt, s.pt_c, "simple_moment");
    const double lp = std::log(s.pt), lq = std::log(s.pt_c);
    Vec out(3);
    out << 2.0 + lq + lp, path.x_scalar(1) * (lq - lp), path.y0 * (lq - lp);
    return out;
}

double c2_factor(const Theta& th, double y0, double x1, double pbar) {
    const double a = th.alpha;
    return std::pow(pbar, 1.0 / a) * std::exp(-(x1 * th.beta[0]) / a - th.gamma * y0 / a);
}

double score_gamma_component(const Theta& th, const ScoreState& s, double ev_pbar) {
    const double a = th.alpha;
    const double c2 = c2_factor(th, s.y0, s.x1, s.pbar);
    const double c3 = a / (1.0 + a) - a / (1.0 + 2.0 * a);
    return s.y1 - a / (1.0 + a) * c2 - (s.y0 * (s.pt - 0.5) + s.y1 * s.pt_c - c3 * c2) * ev_pbar;
}

double score_alpha_component(const Theta& th, const ScoreState& s, double ev_pbar, double phi_beta,
                             double phi_gamma) {
    const double a = th.alpha;
    const double lp = safe_log(s.pt), lq = safe_log(s.pt_c);
    return (2.0 + lp + lq) / a - (s.pt * lp + s.pt_c * lq + 0.5) * ev_pbar / a - phi_beta * th.beta[0] / a -
           phi_gamma * th.gamma / a;
}

Vec loceff_score_state(const Theta& th, const ScoreState& s, const WorkingModel& wm, int T) {
    const double phib = (wm.p - s.x1) * (s.pt - 0.5) * T;
    const double phig = score_gamma_component(th, s, T);
    const double phia = score_alpha_component(th, s, T, phib, phig);
    Vec out(3);
    out << phia, phib, phig;
    return out;
}

Vec loceff_score(const Theta& th, const PathView& path, const WorkingModel& wm) {
    require_two_periods(path, "loceff_score");
    if (!wm.vague_prior) throw DomainError("loceff_score: closed form requires the vague prior");
    const ScoreState s = score_state(th, path);
    require_interior(s.pt, s.pt_c, "loceff_score");
    return loceff_score_state(th, s, wm, path.T);
}

double posterior_mean_v(const ExperimentPosterior& post, double pbar, int T) {
    return (T + post.kappa0) / (pbar + post.lambda0);
}

double posterior_mean_v_given_x2(const ExperimentPosterior& post, double y0, double x1, double x2, double pbar,
                                 int T) {
    const double n = T + post.kappa0;
    const double r = pbar + post.lambda0;
    const double tau = y0 + x1;
    const double m0 = n / (r + tau);
    if (x2 == 0.0) return m0;
    // w2 / w1 = (r / (r + tau))^n; the common normalizing constants cancel
    const double ratio = std::pow(r / (r + tau), n);
    const double m1 = n / r;
    return (m1 - ratio * m0) / (1.0 - ratio);
}

CondExpectations conditional_expectations_A(double y0, double x1, double pbar, const ExperimentPosterior& post) {
    const double n = 2.0 + post.kappa0;
    const double r = pbar + post.lambda0;
    const double tau = y0 + x1;
    const double ex2 = 1.0 - std::pow(r / (r + tau), n);
    const double ex2v = n / r - n / (r + tau) * std::pow(r / (r + tau), n);
    return CondExpectations{ex2, ex2, ex2v, 0.5 * ex2v};
}

CondExpectations conditional_expectations_B(const Theta& th, double y0, double x1, double ptilde1, double pbar,
                                            const ExperimentPosterior& post) {
    const double a = th.alpha;
    const double n = 2.0 + post.kappa0;
    const double r = pbar + post.lambda0;
    const double c1 = r + y0 + x1;
    const double c2 = c2_factor(th, y0, x1, pbar);
    const double z = -c2 / c1;
    const double tau = y0 + x1 + c2 * std::pow(ptilde1, 1.0 / a);
    const double q = r / (r + tau);
    CondExpectations ce{};
    ce.ex2_pt = 1.0 - std::pow(q, n);
    ce.ex2 = 1.0 - std::pow(r / c1, n) * hyp2f1(n, a, 1.0 + a, z);
    ce.ex2v_pt = n / r - n / (r + tau) * std::pow(q, n);
    ce.ex2_1mpt_v = 0.5 * n / r - n / c1 * std::pow(r / c1, n) *
                                      (hyp2f1(n + 1.0, a, 1.0 + a, z) - 0.5 * hyp2f1(n + 1.0, 2.0 * a, 1.0 + 2.0 * a, z));
    return ce;
}

Vec eff_score_feedback_state(const Theta& th, const ScoreState& s, const CondExpectations& ce, double ev) {
    const double ev_pbar = ev * s.pbar;
    const double phib = -s.x1 * (s.pt - 0.5) * ev_pbar + (ce.ex2_pt - ce.ex2) -
                        (s.pt_c * ce.ex2v_pt - ce.ex2_1mpt_v) * s.pbar;
    const double phig = score_gamma_component(th, s, ev_pbar);
    const double phia = score_alpha_component(th, s, ev_pbar, phib, phig);
    Vec out(3);
    out << phia, phib, phig;
    return out;
}

double eff_score_beta_nofeedback(const ScoreState& s, double ev, double ex2v) {
    return (s.pt - 0.5) * s.pbar * (ex2v - s.x1 * ev);
}

Vec eff_score_feedback(const Theta& th, const PathView& path, const ExperimentPosterior& post) {
    require_two_periods(path, "eff_score_feedback");
    const ScoreState s = score_state(th, path);
    const double ev = posterior_mean_v(post, s.pbar);
    switch (post.regime) {
        case Feedback::ExperimentA:
            return eff_score_feedback_state(th, s, conditional_expectations_A(s.y0, s.x1, s.pbar, post), ev);
        case Feedback::ExperimentB:
            return eff_score_feedback_state(th, s, conditional_expectations_B(th, s.y0, s.x1, s.pt, s.pbar, post), ev);
        case Feedback::Custom: break;
    }
    throw std::invalid_argument("eff_score_feedback: closed forms exist only for experiments A and B");
}

Vec eff_score_strict_exog(const Theta& th, const PathView& path, const ExperimentPosterior& post) {
    require_two_periods(path, "eff_score_strict_exog");
    if (post.regime != Feedback::ExperimentA)
        throw std::invalid_argument("eff_score_strict_exog: the posterior closed form is derived for experiment A");
    const ScoreState s = score_state(th, path);
    const double x2 = path.x_scalar(2);
    const double ev = posterior_mean_v_given_x2(post, s.y0, s.x1, x2, s.pbar);
    const double ev_pbar = ev * s.pbar;
    const double phib = (x2 - s.x1) * (s.pt - 0.5) * ev_pbar;
    const double phig = score_gamma_component(th, s, ev_pbar);
    const double phia = score_alpha_component(th, s, ev_pbar, phib, phig);
    Vec out(3);
    out << phia, phib, phig;
    return out;
}

double ash_scale(const Theta& th, const EvalPoint& e) {
    return weibull_lambda(th.alpha, e.y) * std::exp(index_xb(th, e.x) + th.gamma * e.yprev);
}

double ash_moment(const Theta& th, const PathView& path, const EvalPoint& e) {
    if (path.T < 2) throw DomainError("ash_moment: need T >= 2");
    const IntegratedSpells s = integrated_spells(th, path);
    return ash_scale(th, e) * (path.T - 1) / s.pbar;
}

double asf_moment(const Theta& th, const PathView& path, const EvalPoint& e) {
    const double a = th.alpha;
    const int T = path.T;
    const IntegratedSpells s = integrated_spells(th, path);
    const double lead = std::exp(-index_xb(th, e.x) / a - th.gamma * e.yprev / a);
    const double g = std::exp(log_gamma(1.0 + 1.0 / a) + log_gamma(T) - log_gamma(T + 1.0 / a));
    return lead * g * std::pow(s.pbar, 1.0 / a);
}

double asf_moment_p1(const Theta& th, const PathView& path, const EvalPoint& e) {
    const double a = th.alpha;
    const double p1 = rho(th, path.yt(1), path.yt(0), path.xt(1));
    const double lead = std::exp(-index_xb(th, e.x) / a - th.gamma * e.yprev / a);
    return std::exp(log_gamma(1.0 + 1.0 / a)) * lead * std::pow(p1, 1.0 / a);
}

std::vector<std::string> mph_moment_ids() { return {"simple", "ab", "loceff", "eff-fb", "eff-se", "ash", "asf"}; }

MomentFn make_moment(const std::string& id, const MomentOptions& opt) {
    MomentFn f;
    f.id = id;
    if (id == "simple") {
        f.dim = 3;
        f.eval = [](const Theta& th, const PathView& p, double* out) {
            const Vec v = simple_moment(th, p);
            for (int k = 0; k < 3; ++k) out[k] = v(k);
        };
    } else if (id == "ab") {
        const Instrument m = opt.instrument ? opt.instrument : default_ab_instrument();
        f.dim = 3;
        f.eval = [m](const Theta& th, const PathView& p, double* out) {
            const std::vector<double> v = ab_moment(th, p, m);
            if (v.size() != 3) throw DomainError("ab: the registered family is the T = 2, three-instrument system");
            for (int k = 0; k < 3; ++k) out[k] = v[k];
        };
    } else if (id == "loceff") {
        opt.wm.validate();
        const WorkingModel wm = opt.wm;
        f.dim = 3;
        f.requires_model = wm;
        f.eval = [wm](const Theta& th, const PathView& p, double* out) {
            const Vec v = loceff_score(th, p, wm);
            for (int k = 0; k < 3; ++k) out[k] = v(k);
        };
    } else if (id == "eff-fb") {
        const ExperimentPosterior post = opt.post;
        if (post.regime == Feedback::Custom)
            throw std::invalid_argument("eff-fb: closed forms exist only for experiments A and B");
        f.dim = 3;
        f.eval = [post](const Theta& th, const PathView& p, double* out) {
            const Vec v = eff_score_feedback(th, p, post);
            for (int k = 0; k < 3; ++k) out[k] = v(k);
        };
    } else if (id == "eff-se") {
        ExperimentPosterior post = opt.post;
        post.regime = Feedback::ExperimentA;
        f.dim = 3;
        f.regime = Regime::StrictExogeneityOnly;
        f.eval = [post](const Theta& th, const PathView& p, double* out) {
            const Vec v = eff_score_strict_exog(th, p, post);
            for (int k = 0; k < 3; ++k) out[k] = v(k);
        };
    } else if (id == "ash") {
        const EvalPoint e = opt.eval;
        f.dim = 1;
        f.eval = [e](const Theta& th, const PathView& p, double* out) { out[0] = ash_moment(th, p, e); };
    } else if (id == "asf") {
        const EvalPoint e = opt.eval;
        f.dim = 1;
        f.eval = [e](const Theta& th, const PathView& p, double* out) { out[0] = asf_moment(th, p, e); };
    } else {
        throw std::invalid_argument("unknown moment family: " + id);
    }
    return f;
}

}  // namespace fhr
