#include "fhr/fhrcheck.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

namespace fhr {

namespace {

struct WeightedNode {
    double y;
    double w;  // quadrature weight times density
};

double safe_density(const ParametricModel& m, const Vec& th, double y, double yprev, double x, double a) {
    const double f = m.density(th, y, yprev, x, a);
    return std::isfinite(f) ? f : 0.0;
}

// Rule for integrating over y_t against f(y_t | y_prev, x_t, a).
std::vector<WeightedNode> outcome_rule(const ParametricModel& m, const Vec& th, double yprev, double x, double a,
                                       const CheckerOptions& opt) {
    std::vector<WeightedNode> out;
    if (m.kind == OutcomeKind::Discrete) {
        out.reserve(m.support.size());
        for (double y : m.support) out.push_back({y, safe_density(m, th, y, yprev, x, a)});
        return out;
    }
    // y = e^u: the density in u decays at both ends even when f is singular at y = 0.
    // Coarse scan for the mode, then walk outwards until the density drops below 1e-18 of its peak.
    constexpr double u_min = -700.0, u_max = 700.0, coarse = 8.0, fine = 0.5;
    auto g = [&](double u) {
        const double y = std::exp(u);
        return safe_density(m, th, y, yprev, x, a) * y;
    };
    double peak = 0.0, u_peak = 0.0;
    for (double u = u_min; u <= u_max; u += coarse) {
        const double v = g(u);
        if (v > peak) {
            peak = v;
            u_peak = u;
        }
    }
    // Reached only for conditioning values carrying negligible outer weight; validate() rejects it on the grids.
    if (!(peak > 0.0)) return out;
    for (double u = u_peak - coarse; u <= u_peak + coarse; u += 0.25) {
        const double v = g(u);
        if (v > peak) {
            peak = v;
            u_peak = u;
        }
    }
    double lo = u_peak, hi = u_peak;
    while (lo > u_min && g(lo) >= 1e-18 * peak) lo -= fine;
    while (hi < u_max && g(hi) >= 1e-18 * peak) hi += fine;
    lo -= fine;
    hi += fine;
    const QuadratureRule r = QuadratureRule::composite(opt.panels, opt.nodes_per_panel, lo, hi);
    out.reserve(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
        const double y = std::exp(r.nodes[k]);
        out.push_back({y, r.weights[k] * y * safe_density(m, th, y, yprev, x, a)});
    }
    return out;
}

struct PathBuffer {
    double y0 = 0.0;
    std::vector<double> y, x;
    PathView view() const { return PathView{y0, y.data(), x.data(), static_cast<int>(y.size()), 1}; }
};

// Integral of phi over y_s..y_T with x fixed; y_1..y_{s-1} already in buf.
void integrate_tail(const ParametricModel& m, const Vec& th, const Candidate& phi, const CheckerOptions& opt,
                    int s, double a, PathBuffer& buf, double weight, Vec& acc, std::vector<double>& tmp) {
    const int T = static_cast<int>(buf.y.size());
    if (s > T) {
        phi.eval(buf.view(), tmp.data());
        for (int k = 0; k < phi.dim; ++k) {
            if (!std::isfinite(tmp[k])) {
                std::ostringstream os;
                os << "check_fhr: non-finite candidate value at y0=" << buf.y0 << " a=" << a;
                for (int t = 0; t < T; ++t) os << " y" << t + 1 << "=" << buf.y[t];
                throw EvaluationError(os.str());
            }
            acc(k) += weight * tmp[k];
        }
        return;
    }
    const double yprev = s == 1 ? buf.y0 : buf.y[s - 2];
    const std::vector<WeightedNode> rule = outcome_rule(m, th, yprev, buf.x[s - 1], a, opt);
    for (const WeightedNode& nd : rule) {
        if (nd.w == 0.0) continue;
        buf.y[s - 1] = nd.y;
        integrate_tail(m, th, phi, opt, s + 1, a, buf, weight * nd.w, acc, tmp);
    }
}

// All sequences of length len over values.
std::vector<std::vector<double>> grid_paths(const std::vector<double>& values, int len) {
    std::vector<std::vector<double>> out{{}};
    for (int t = 0; t < len; ++t) {
        std::vector<std::vector<double>> next;
        for (const auto& p : out)
            for (double v : values) {
                auto q = p;
                q.push_back(v);
                next.push_back(std::move(q));
            }
        out = std::move(next);
    }
    return out;
}

template <class F>
void parallel_tasks(std::size_t n, const F& f) {
    std::exception_ptr err = nullptr;
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < nn; ++i) {
        try {
            f(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(fhr_check_error)
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
}

}  // namespace

void ParametricModel::validate(const Vec& theta) const {
    if (!density) throw DomainError("ParametricModel: density required");
    if (T < 2) throw DomainError("ParametricModel: T must be at least 2");
    if (covariate_grid.empty() || a_grid.empty() || y0_grid.empty())
        throw DomainError("ParametricModel: grids must be nonempty");
    if (kind == OutcomeKind::Discrete && support.empty())
        throw DomainError("ParametricModel: discrete model needs a support");
    if (kind == OutcomeKind::Continuous && y_cond_grid.empty())
        throw DomainError("ParametricModel: continuous model needs conditioning outcomes");
    std::vector<double> yprev = y0_grid;
    const auto& extra = kind == OutcomeKind::Discrete ? support : y_cond_grid;
    yprev.insert(yprev.end(), extra.begin(), extra.end());
    const CheckerOptions opt;
    for (double a : a_grid)
        for (double x : covariate_grid)
            for (double yp : yprev) {
                double mass = 0.0;
                for (const auto& nd : outcome_rule(*this, theta, yp, x, a, opt)) {
                    if (nd.w < 0.0) throw DomainError("ParametricModel: negative density");
                    mass += nd.w;
                }
                if (std::abs(mass - 1.0) > 1e-8) {
                    std::ostringstream os;
                    os << "ParametricModel " << name << ": density mass " << mass << " at a=" << a << " x=" << x
                       << " y_prev=" << yp;
                    throw DomainError(os.str());
                }
            }
}

std::vector<double> default_a_grid() {
    const auto r = QuadratureRule::gauss_legendre(12, -3.0, 3.0);
    return r.nodes;
}

std::vector<double> mph_a_grid() { return QuadratureRule::gauss_legendre(12, -2.0, 3.0).nodes; }

ParametricModel mph_model(int T) {
    ParametricModel m;
    m.name = "mph";
    m.density = [](const Vec& th, double y, double yprev, double x, double a) {
        return mph_density(Theta::unpack(th), y, yprev, x, a);
    };
    m.kind = OutcomeKind::Continuous;
    m.covariate_grid = {0.0, 1.0};
    m.a_grid = mph_a_grid();
    m.y0_grid = {0.3, 1.0, 2.5};
    m.y_cond_grid = {0.3, 1.0, 2.5};
    m.T = T;
    return m;
}

ParametricModel mih_model(double delta) {
    ParametricModel m = mph_model(2);
    m.name = "mih";
    m.density = [delta](const Vec& th, double y, double yprev, double x, double a) {
        const MihTheta mt{Theta::unpack(th), {delta}};
        return mih_density(mt, y, yprev, std::span<const double>(&x, 1), a);
    };
    return m;
}

ParametricModel logit_model(int T) {
    ParametricModel m;
    m.name = "logit";
    // theta = (beta, gamma)
    m.density = [](const Vec& th, double y, double yprev, double x, double a) {
        const double p = 1.0 / (1.0 + std::exp(-(th(1) * yprev + th(0) * x + a)));
        return y == 1.0 ? p : 1.0 - p;
    };
    m.kind = OutcomeKind::Discrete;
    m.support = {0.0, 1.0};
    m.covariate_grid = {0.0, 1.0};
    m.a_grid = default_a_grid();
    m.y0_grid = {0.0, 1.0};
    m.T = T;
    return m;
}

ParametricModel poisson_model(int y_max) {
    ParametricModel m;
    m.name = "poisson";
    // theta = (beta, gamma)
    m.density = [](const Vec& th, double y, double yprev, double x, double a) {
        return poisson_pmf(static_cast<int>(y), std::exp(th(1) * yprev + th(0) * x + a));
    };
    m.kind = OutcomeKind::Discrete;
    for (int k = 0; k <= y_max; ++k) m.support.push_back(k);
    m.covariate_grid = {0.0, 1.0};
    m.a_grid = QuadratureRule::gauss_legendre(12, -5.0, -3.5).nodes;
    m.y0_grid = {0.0, 1.0, 2.0};
    m.T = 2;
    return m;
}

Candidate candidate_from_moment(const MomentFn& mf, const Theta& th) {
    Candidate c;
    c.dim = mf.dim;
    const MomentEval ev = mf.eval;
    c.eval = [ev, th](const PathView& p, double* out) { ev(th, p, out); };
    return c;
}

Candidate mph_candidate(const std::string& id, const Theta& th, const MomentOptions& opt) {
    Candidate c = candidate_from_moment(make_moment(id, opt), th);
    const EvalPoint e = opt.eval;
    if (id == "ash") {
        const double sc = ash_scale(th, e);
        c.target = [sc](double a, double, double) { return Vec::Constant(1, sc * std::exp(a)); };
    } else if (id == "asf") {
        const double lead = std::exp(-(index_xb(th, e.x) + th.gamma * e.yprev) / th.alpha +
                                     log_gamma(1.0 + 1.0 / th.alpha));
        const double alpha = th.alpha;
        c.target = [lead, alpha](double a, double, double) { return Vec::Constant(1, lead * std::exp(-a / alpha)); };
    }
    return c;
}

Candidate broken_mph_candidate(const Theta& th) {
    Candidate c;
    c.dim = 1;
    c.eval = [th](const PathView& p, double* out) {
        out[0] = rho(th, p.yt(2), p.yt(1), p.xt(2)) - 2.0 * rho(th, p.yt(1), p.yt(0), p.xt(1));
    };
    return c;
}

CheckerReport check_fhr(const ParametricModel& model, const Candidate& phi, const Vec& theta,
                        const CheckerOptions& opt) {
    model.validate(theta);
    if (phi.dim < 1 || !phi.eval) throw DomainError("check_fhr: candidate must have positive dimension");
    const int T = model.T;
    const auto& cov = model.covariate_grid;

    // Mean-zero condition: every (a, y0, x^{1:T}).
    const auto xpaths = grid_paths(cov, T);
    struct C1Task {
        double a, y0;
        std::size_t xp;
    };
    std::vector<C1Task> c1;
    for (double a : model.a_grid)
        for (double y0 : model.y0_grid)
            for (std::size_t k = 0; k < xpaths.size(); ++k) c1.push_back({a, y0, k});
    std::vector<double> r1(c1.size(), 0.0);
    parallel_tasks(c1.size(), [&](std::size_t i) {
        PathBuffer buf;
        buf.y0 = c1[i].y0;
        buf.y.assign(T, 0.0);
        buf.x = xpaths[c1[i].xp];
        Vec acc = Vec::Zero(phi.dim);
        std::vector<double> tmp(phi.dim);
        integrate_tail(model, theta, phi, opt, 1, c1[i].a, buf, 1.0, acc, tmp);
        if (phi.target) acc -= phi.target(c1[i].a, c1[i].y0, buf.x[0]);
        r1[i] = acc.cwiseAbs().maxCoeff();
    });

    CheckerReport rep;
    rep.tol = opt.tol;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < r1.size(); ++i)
        if (r1[i] > r1[worst]) worst = i;
    rep.cond1_residual = r1.empty() ? 0.0 : r1[worst];
    if (!c1.empty()) {
        std::ostringstream os;
        os << "a=" << c1[worst].a << " y0=" << c1[worst].y0 << " x=(";
        for (std::size_t t = 0; t < xpaths[c1[worst].xp].size(); ++t) os << (t ? "," : "") << xpaths[c1[worst].xp][t];
        os << ")";
        rep.cond1_worst = os.str();
    }

    // Invariance condition: for s = 2..T the partial integral over y^{s:T} may not vary with x^{s:T}.
    const auto& ycond = model.kind == OutcomeKind::Discrete ? model.support : model.y_cond_grid;
    for (int s = 2; s <= T; ++s) {
        const auto heads = grid_paths(cov, s - 1);
        const auto tails = grid_paths(cov, T - s + 1);
        const auto ypast = grid_paths(ycond, s - 1);
        struct C2Task {
            double a, y0;
            std::size_t h, yp;
        };
        std::vector<C2Task> c2;
        for (double a : model.a_grid)
            for (double y0 : model.y0_grid)
                for (std::size_t h = 0; h < heads.size(); ++h)
                    for (std::size_t yp = 0; yp < ypast.size(); ++yp) c2.push_back({a, y0, h, yp});
        std::vector<double> r2(c2.size(), 0.0);
        parallel_tasks(c2.size(), [&](std::size_t i) {
            PathBuffer buf;
            buf.y0 = c2[i].y0;
            buf.y.assign(T, 0.0);
            buf.x.assign(T, 0.0);
            for (int t = 0; t < s - 1; ++t) {
                buf.y[t] = ypast[c2[i].yp][t];
                buf.x[t] = heads[c2[i].h][t];
            }
            std::vector<double> tmp(phi.dim);
            Vec lo = Vec::Constant(phi.dim, INFINITY), hi = Vec::Constant(phi.dim, -INFINITY);
            for (const auto& tail : tails) {
                for (int t = s - 1; t < T; ++t) buf.x[t] = tail[t - (s - 1)];
                Vec acc = Vec::Zero(phi.dim);
                integrate_tail(model, theta, phi, opt, s, c2[i].a, buf, 1.0, acc, tmp);
                lo = lo.cwiseMin(acc);
                hi = hi.cwiseMax(acc);
            }
            r2[i] = (hi - lo).maxCoeff();
        });
        rep.cond2_variation.push_back(r2.empty() ? 0.0 : *std::max_element(r2.begin(), r2.end()));
    }
    rep.cond1_pass = rep.cond1_residual <= opt.tol;
    rep.cond2_pass = std::all_of(rep.cond2_variation.begin(), rep.cond2_variation.end(),
                                 [&](double v) { return v <= opt.tol; });
    return rep;
}

// ---------------------------------------------------------------------------
// Discrete null space

int DiscreteNullSpace::unknowns_per_block() const {
    return static_cast<int>(support.size() * support.size() * covariates.size());
}

int DiscreteNullSpace::index(int i1, int i2, int j2) const {
    const int S = static_cast<int>(support.size()), X = static_cast<int>(covariates.size());
    return (i1 * S + i2) * X + j2;
}

int DiscreteNullSpace::dimension() const {
    int d = 0;
    for (const auto& b : blocks) d += static_cast<int>(b.ns.basis.cols());
    return d;
}

int DiscreteNullSpace::min_block_dimension() const {
    int d = blocks.empty() ? 0 : static_cast<int>(blocks.front().ns.basis.cols());
    for (const auto& b : blocks) d = std::min(d, static_cast<int>(b.ns.basis.cols()));
    return d;
}

double DiscreteNullSpace::captured_fraction(const PathFn& phi) const {
    double num = 0.0, den = 0.0;
    const int S = static_cast<int>(support.size()), X = static_cast<int>(covariates.size());
    for (const auto& b : blocks) {
        Vec v(unknowns_per_block());
        for (int i1 = 0; i1 < S; ++i1)
            for (int i2 = 0; i2 < S; ++i2)
                for (int j2 = 0; j2 < X; ++j2)
                    v(index(i1, i2, j2)) = phi(b.y0, support[i1], support[i2], b.x1, covariates[j2]);
        den += v.squaredNorm();
        if (b.ns.basis.cols() > 0) num += (b.ns.basis.transpose() * v).squaredNorm();
    }
    return den > 0.0 ? std::sqrt(num / den) : 1.0;
}

Candidate DiscreteNullSpace::basis_candidate(int c) const {
    Candidate cand;
    cand.dim = 1;
    const DiscreteNullSpace self = *this;
    cand.eval = [self, c](const PathView& p, double* out) {
        auto find = [](const std::vector<double>& v, double x) {
            for (std::size_t k = 0; k < v.size(); ++k)
                if (v[k] == x) return static_cast<int>(k);
            throw DomainError("basis_candidate: value outside the grid");
        };
        for (const auto& b : self.blocks) {
            if (b.y0 != p.y0 || b.x1 != p.x_scalar(1)) continue;
            if (c >= b.ns.basis.cols()) {
                out[0] = 0.0;
                return;
            }
            const int i1 = find(self.support, p.yt(1)), i2 = find(self.support, p.yt(2));
            const int j2 = find(self.covariates, p.x_scalar(2));
            out[0] = b.ns.basis(self.index(i1, i2, j2), c);
            return;
        }
        throw DomainError("basis_candidate: (y0, x1) outside the grid");
    };
    return cand;
}

DiscreteNullSpace discrete_null_space(const ParametricModel& model, const Vec& theta, double rel_tol) {
    if (model.kind != OutcomeKind::Discrete) throw DomainError("discrete_null_space: model must be discrete");
    if (model.T != 2) throw DomainError("discrete_null_space: implemented for T = 2");
    model.validate(theta);
    DiscreteNullSpace out;
    out.support = model.support;
    out.covariates = model.covariate_grid;
    const int S = static_cast<int>(model.support.size());
    const int X = static_cast<int>(model.covariate_grid.size());
    const int A = static_cast<int>(model.a_grid.size());
    if (A < 2 * S * S) {
        std::ostringstream os;
        os << "a_grid has " << A << " points; fewer than 2|S|^T = " << 2 * S * S
           << " may leave the constraints rank-deficient";
        out.warning = os.str();
    }
    const int n_unk = out.unknowns_per_block();
    for (double y0 : model.y0_grid)
        for (double x1 : model.covariate_grid) {
            const int rows = A * X + A * S * (X - 1);
            Mat C = Mat::Zero(rows, n_unk);
            int r = 0;
            for (double a : model.a_grid) {
                std::vector<double> f1(S);
                for (int i1 = 0; i1 < S; ++i1) f1[i1] = model.density(theta, model.support[i1], y0, x1, a);
                // f2[(i1 * X + j2) * S + i2]
                std::vector<double> f2(S * X * S);
                for (int i1 = 0; i1 < S; ++i1)
                    for (int j2 = 0; j2 < X; ++j2)
                        for (int i2 = 0; i2 < S; ++i2)
                            f2[(i1 * X + j2) * S + i2] =
                                model.density(theta, model.support[i2], model.support[i1], model.covariate_grid[j2], a);
                for (int j2 = 0; j2 < X; ++j2, ++r)
                    for (int i1 = 0; i1 < S; ++i1)
                        for (int i2 = 0; i2 < S; ++i2)
                            C(r, out.index(i1, i2, j2)) = f1[i1] * f2[(i1 * X + j2) * S + i2];
                for (int i1 = 0; i1 < S; ++i1)
                    for (int j2 = 1; j2 < X; ++j2, ++r)
                        for (int i2 = 0; i2 < S; ++i2) {
                            C(r, out.index(i1, i2, j2)) = f2[(i1 * X + j2) * S + i2];
                            C(r, out.index(i1, i2, 0)) = -f2[(i1 * X + 0) * S + i2];
                        }
            }
            for (int k = 0; k < rows; ++k) {
                const double nrm = C.row(k).norm();
                if (nrm > 0.0) C.row(k) /= nrm;
            }
            NullSpaceBlock b;
            b.y0 = y0;
            b.x1 = x1;
            b.rows = rows;
            b.ns = null_space(C, rel_tol);
            out.blocks.push_back(std::move(b));
        }
    return out;
}

}  // namespace fhr
