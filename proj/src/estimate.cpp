#include "fhr/estimate.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace fhr {

namespace {

Vec safe_mean(const MomentFn& phi, const Panel& panel, const Theta& th, Exec exec, bool& ok) {
    try {
        th.validate();
        Vec m = moment_mean(phi, panel, th, exec);
        ok = m.allFinite();
        return m;
    } catch (const DomainError&) {
    } catch (const EvaluationError&) {
    }
    ok = false;
    return Vec();
}

void fill_variance(GmmResult& r, const MomentFn& phi, const Panel& panel, Exec exec) {
    r.n = panel.size();
    r.H = moment_jacobian(phi, panel, r.theta_hat, exec);
    const MomentStats st = moment_stats(phi, panel, r.theta_hat, exec);
    r.V = st.second;
    r.moment_mean = st.mean;
    r.moment_norm = st.mean.norm();
    const Mat Hinv = invert(r.H);
    r.avar = Hinv * r.V * Hinv.transpose();
    r.se = (r.avar.diagonal() / static_cast<double>(r.n)).cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

Mat moment_jacobian(const MomentFn& phi, const Panel& panel, const Theta& th, Exec exec) {
    const Vec v = th.pack();
    const int d = static_cast<int>(v.size());
    Mat J(phi.dim, d);
    for (int k = 0; k < d; ++k) {
        const double h = 1e-5 * (1.0 + std::abs(v(k)));
        Vec vp = v, vm = v;
        vp(k) += h;
        vm(k) -= h;
        const Theta tm = Theta::unpack(vm);
        bool central = true;
        try {
            tm.validate();
        } catch (const DomainError&) {
            central = false;
        }
        const Vec mp = moment_mean(phi, panel, Theta::unpack(vp), exec);
        if (central) {
            J.col(k) = (mp - moment_mean(phi, panel, tm, exec)) / (2.0 * h);
        } else {
            J.col(k) = (mp - moment_mean(phi, panel, th, exec)) / h;
        }
    }
    return J;
}

GmmResult gmm_solve(const MomentFn& phi, const Panel& panel, const Theta& init, const GmmOptions& opt) {
    if (panel.size() == 0) throw DomainError("gmm_solve: empty panel");
    if (phi.dim != init.dim()) throw DomainError("gmm_solve: moment dimension must equal dim(theta)");
    Theta th = init;
    bool ok = false;
    Vec g = safe_mean(phi, panel, th, opt.exec, ok);
    if (!ok) throw EvaluationError("gmm_solve: moment not finite at the initial value");
    GmmResult r;
    int it = 0;
    for (; it < opt.max_iter && g.norm() > opt.tol; ++it) {
        Vec step;
        try {
            step = solve_linear(moment_jacobian(phi, panel, th, opt.exec), -g);
        } catch (const DomainError&) {
            break;
        } catch (const EvaluationError&) {
            break;
        } catch (const IllConditionedError&) {
            break;
        }
        const Vec v = th.pack();
        double t = 1.0;
        bool improved = false;
        for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
            const Theta cand = Theta::unpack(v + t * step);
            bool cok = false;
            const Vec gc = safe_mean(phi, panel, cand, opt.exec, cok);
            if (cok && gc.norm() < g.norm()) {
                th = cand;
                g = gc;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    r.theta_hat = th;
    r.iterations = it;
    r.converged = g.norm() <= opt.tol;
    try {
        fill_variance(r, phi, panel, opt.exec);
    } catch (const std::runtime_error&) {
        if (r.converged) throw;
    } catch (const std::domain_error&) {
        if (r.converged) throw;
    }
    if (!r.converged && r.se.size() == 0) {
        const int d = init.dim();
        const double nan = std::numeric_limits<double>::quiet_NaN();
        r.n = panel.size();
        r.moment_mean = g;
        r.moment_norm = g.norm();
        r.H = Mat::Constant(phi.dim, d, nan);
        r.V = Mat::Constant(phi.dim, phi.dim, nan);
        r.avar = Mat::Constant(d, d, nan);
        r.se = Vec::Constant(d, nan);
    }
    return r;
}

GmmResult asymptotic_se(const MomentFn& phi, const Panel& panel, const Theta& th, Exec exec) {
    if (panel.size() == 0) throw DomainError("asymptotic_se: empty panel");
    GmmResult r;
    r.theta_hat = th;
    r.converged = true;
    fill_variance(r, phi, panel, exec);
    return r;
}

double information_gap(const Mat& H, const Mat& V) { return (H + V).norm() / V.norm(); }

BoundResult efficiency_bound(const MomentFn& score, const Panel& panel, const Theta& th, Exec exec) {
    if (panel.size() == 0) throw DomainError("efficiency_bound: empty panel");
    const MomentStats st = moment_stats(score, panel, th, exec);
    BoundResult b;
    b.n = panel.size();
    b.info = st.second;
    b.bound_avar = invert(b.info);
    b.bound_se = (b.bound_avar.diagonal() / static_cast<double>(b.n)).cwiseMax(0.0).cwiseSqrt();
    return b;
}

std::string flavor_name(EffectFlavor f) {
    switch (f) {
        case EffectFlavor::EfficientScore: return "efficient-score";
        case EffectFlavor::WorkingModel: return "working-model";
        case EffectFlavor::Simple: return "simple";
    }
    return "?";
}

EffectResult average_effect(const MomentFn& effect, const MomentFn& score, const Panel& panel,
                            const Theta& theta_hat, EffectFlavor flavor, Exec exec) {
    if (effect.dim != 1) throw DomainError("average_effect: effect moment must be scalar");
    if (score.dim != theta_hat.dim()) throw DomainError("average_effect: score dimension must equal dim(theta)");
    if (panel.size() == 0) throw DomainError("average_effect: empty panel");
    const int d = score.dim;
    const JointStats js = joint_stats({effect, score}, {theta_hat, theta_hat}, panel, exec);
    const double mu = js.mean(0);
    const Vec sbar = js.mean.tail(d);
    const Mat Sss = js.second.bottomRightCorner(d, d) - sbar * sbar.transpose();
    const Vec Sms = js.second.block(1, 0, d, 1) - sbar * mu;
    const double var_mu = js.second(0, 0) - mu * mu;
    const Mat G = moment_jacobian(effect, panel, theta_hat, exec);  // 1 x d
    Vec c;                                                          // IF = phi_mu - mu + c' S
    if (flavor == EffectFlavor::EfficientScore) {
        c = solve_linear(js.second.bottomRightCorner(d, d), G.row(0).transpose());
    } else {
        const Mat H = moment_jacobian(score, panel, theta_hat, exec);
        c = -solve_linear(H.transpose(), G.row(0).transpose());
    }
    const double var_if = var_mu + 2.0 * c.dot(Sms) + c.dot(Sss * c);
    EffectResult r;
    r.mu_hat = mu;
    r.flavor = flavor;
    r.n = panel.size();
    r.asd = std::sqrt(std::max(var_if, 0.0));
    r.se = r.asd / std::sqrt(static_cast<double>(r.n));
    return r;
}

double ash_target(const Theta& th, const EvalPoint& e, const HeterogeneitySpec& het) {
    return ash_scale(th, e) * het.kappa0 / het.lambda0;
}

double asf_target(const Theta& th, const EvalPoint& e, const HeterogeneitySpec& het) {
    const double r = 1.0 / th.alpha;
    if (!(het.kappa0 > r)) throw DomainError("asf_target: E[V^{-1/alpha}] is infinite for kappa0 <= 1/alpha");
    return std::exp(-(index_xb(th, e.x) + th.gamma * e.yprev) * r + log_gamma(1.0 + r) + log_gamma(het.kappa0 - r) -
                    log_gamma(het.kappa0) + r * std::log(het.lambda0));
}

// ---------------------------------------------------------------------------
// Tables

double EfficiencyTable::at(const std::string& row, const std::string& col) const {
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            if (rows[i] == row && cols[j] == col) return ratio(i, j);
    throw DomainError("EfficiencyTable: no entry " + row + " / " + col);
}

std::string EfficiencyTable::to_csv() const {
    std::ostringstream os;
    os << "row";
    for (const auto& c : cols) os << ',' << c << "_ratio";
    for (const auto& c : cols) os << ',' << c << "_asd";
    os << '\n';
    char buf[64];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        os << rows[i];
        for (std::size_t j = 0; j < cols.size(); ++j) {
            std::snprintf(buf, sizeof buf, ",%.17g", ratio(i, j));
            os << buf;
        }
        for (std::size_t j = 0; j < cols.size(); ++j) {
            std::snprintf(buf, sizeof buf, ",%.17g", asd(i, j));
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

std::string EfficiencyTable::to_text() const {
    std::ostringstream os;
    char buf[64];
    os << "Experiment " << experiment << " (n = " << n << ", seed = " << seed << ", working p = ";
    std::snprintf(buf, sizeof buf, "%.4f", working_p);
    os << buf << "), standard errors relative to " << rows[benchmark_row] << "\n";
    std::snprintf(buf, sizeof buf, "%-20s", "");
    os << buf;
    for (const auto& c : cols) {
        std::snprintf(buf, sizeof buf, "%10s", c.c_str());
        os << buf;
    }
    os << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%-20s", rows[i].c_str());
        os << buf;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%10.3f", ratio(i, j));
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

EfficiencyTable make_table(const TableConfig& cfg) {
    const DgpConfig dgp = DgpConfig::experiment(cfg.experiment);
    const Panel panel = simulate_panel(dgp, cfg.n, cfg.seed);
    EfficiencyTable t = make_table(cfg, panel);
    t.seed = cfg.seed;
    return t;
}

EfficiencyTable make_table(const TableConfig& cfg, const Panel& panel) {
    const DgpConfig dgp = DgpConfig::experiment(cfg.experiment);
    const Theta th = dgp.theta0;
    const bool is_a = dgp.feedback == Feedback::ExperimentA;

    double px2 = 0.0;
    for (std::size_t i = 0; i < panel.size(); ++i) px2 += panel.x[i * panel.T + 1];
    px2 /= static_cast<double>(panel.size());

    MomentOptions mo;
    mo.post = ExperimentPosterior::from(dgp);
    mo.wm.p = px2;
    mo.eval = cfg.ash_point;
    const MomentFn fb = make_moment("eff-fb", mo);
    const MomentFn le = make_moment("loceff", mo);
    const MomentFn simple = make_moment("simple", mo);

    EfficiencyTable t;
    t.experiment = std::string(1, is_a ? 'A' : 'B');
    t.working_p = px2;
    t.n = panel.size();
    t.seed = cfg.seed;
    t.cols = {"alpha", "gamma", "beta"};
    if (!is_a) t.cols.push_back("ASH");
    // packed order is (alpha, beta, gamma)
    auto by_col = [](const Mat& avar) {
        Vec v(3);
        v << std::sqrt(avar(0, 0)), std::sqrt(avar(2, 2)), std::sqrt(avar(1, 1));
        return v;
    };
    std::vector<Vec> rows;
    if (is_a) {
        const MomentFn se = make_moment("eff-se", mo);
        t.rows.push_back("SE bound");
        rows.push_back(by_col(efficiency_bound(se, panel, th, cfg.exec).bound_avar));
    }
    t.rows.push_back("FB bound");
    rows.push_back(by_col(efficiency_bound(fb, panel, th, cfg.exec).bound_avar));
    t.rows.push_back("working-model GMM");
    rows.push_back(by_col(asymptotic_se(le, panel, th, cfg.exec).avar));
    t.rows.push_back("simple GMM");
    rows.push_back(by_col(asymptotic_se(simple, panel, th, cfg.exec).avar));

    const int nc = static_cast<int>(t.cols.size());
    t.asd = Mat::Zero(static_cast<int>(rows.size()), nc);
    for (std::size_t i = 0; i < rows.size(); ++i) t.asd.row(i).head(3) = rows[i].transpose();
    if (!is_a) {
        const MomentFn ash = make_moment("ash", mo);
        t.asd(0, 3) = average_effect(ash, fb, panel, th, EffectFlavor::EfficientScore, cfg.exec).asd;
        t.asd(1, 3) = average_effect(ash, le, panel, th, EffectFlavor::WorkingModel, cfg.exec).asd;
        t.asd(2, 3) = average_effect(ash, simple, panel, th, EffectFlavor::Simple, cfg.exec).asd;
    }
    t.benchmark_row = 0;
    t.ratio = t.asd;
    for (int i = 0; i < t.ratio.rows(); ++i)
        for (int j = 0; j < nc; ++j) t.ratio(i, j) = t.asd(i, j) / t.asd(0, j);
    return t;
}

}  // namespace fhr
