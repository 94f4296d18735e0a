#pragma once

#include "fhr/moments.hpp"
#include "fhr/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

// 2F1(a, b; 1 + b; z) from mpmath at 40 digits.
struct Hyp2f1Case {
    double a, b, c, z, value;
};

inline const std::vector<Hyp2f1Case>& hyp2f1_cases() {
    static const std::vector<Hyp2f1Case> v{
        {7, 0.75, 1.75, -0.01, 0.97074716201752815696},  {7, 0.75, 1.75, -0.3, 0.50596514093560424444},
        {7, 0.75, 1.75, -1, 0.23415221991365283109},     {7, 0.75, 1.75, -3, 0.10350856971247505823},
        {7, 0.75, 1.75, -10, 0.041962147097478044436},   {7, 0.75, 1.75, -100, 0.0074620434189045121447},
        {7, 1.5, 2.5, -0.01, 0.9591725622475527407},     {7, 1.5, 2.5, -0.3, 0.35867570074720691627},
        {7, 1.5, 2.5, -1, 0.092070394818397698736},      {7, 1.5, 2.5, -3, 0.018575776903944848588},
        {7, 1.5, 2.5, -10, 0.0030560345889059449813},    {7, 1.5, 2.5, -100, 0.000096640789634224208191},
        {7, 1.3, 2.3, -0.01, 0.96151292328579661939},    {7, 1.3, 2.3, -0.3, 0.38575242173806731169},
        {7, 1.3, 2.3, -1, 0.11381529030803708233},       {7, 1.3, 2.3, -3, 0.028157019731238456635},
        {7, 1.3, 2.3, -10, 0.0058902495237699889233},    {7, 1.3, 2.3, -100, 0.00029521243450720650486},
        {7, 0.5, 1.5, -0.01, 0.97721489586995032766},    {7, 0.5, 1.5, -0.3, 0.60171948185493098151},
        {7, 0.5, 1.5, -1, 0.3532164476674582287},        {7, 0.5, 1.5, -3, 0.20457768656839333447},
        {7, 0.5, 1.5, -10, 0.11205516606714803643},      {7, 0.5, 1.5, -100, 0.035434956200157588239},
        {8, 0.75, 1.75, -0.01, 0.96667261480570035862},  {8, 0.75, 1.75, -0.3, 0.46882955256885022292},
        {8, 0.75, 1.75, -1, 0.20990153563719002776},     {8, 0.75, 1.75, -3, 0.09242490529573665913},
        {8, 0.75, 1.75, -10, 0.037466208263728092147},   {8, 0.75, 1.75, -100, 0.0066625387668800280414},
        {8, 1.5, 2.5, -0.01, 0.95350373920317759038},    {8, 1.5, 2.5, -0.3, 0.31596654691121258641},
        {8, 1.5, 2.5, -1, 0.074015131643026763293},      {8, 1.5, 2.5, -3, 0.014608332243724523891},
        {8, 1.5, 2.5, -10, 0.0024011810303857760005},    {8, 1.5, 2.5, -100, 0.000075932049000317702267},
        {8, 1.3, 2.3, -0.01, 0.95616530483547381504},    {8, 1.3, 2.3, -0.3, 0.34370928784856957299},
        {8, 1.3, 2.3, -1, 0.094129057822258764918},      {8, 1.3, 2.3, -3, 0.022939194024454885832},
        {8, 1.3, 2.3, -10, 0.0047963555708634723649},    {8, 1.3, 2.3, -100, 0.00024038726810045748559},
        {8, 0.5, 1.5, -0.01, 0.97403655007260640229},    {8, 0.5, 1.5, -0.3, 0.57012282716380972404},
        {8, 0.5, 1.5, -1, 0.32854473711978264093},       {8, 0.5, 1.5, -3, 0.18996935432466881058},
        {8, 0.5, 1.5, -10, 0.10405122929919544976},      {8, 0.5, 1.5, -100, 0.032903887900146998163},
    };
    return v;
}

// Arguments handed to log_gamma by the closed-form moments and scores.
inline std::vector<double> log_gamma_args() {
    const double alpha = 0.75;
    return {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 1.0 + 1.0 / alpha, 2.0 + 1.0 / alpha, 1.0 + 0.5, 1.0 + 2.0,
            7.0, 7.5, 8.0, 12.7, 0.01, 100.0, 1.0 + 0.8, 1.0 + 2.0 / 1.25, 3.0 - 0.6, 171.5};
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

// Finite-difference determinant of (ptilde, pbar) -> (P_1..P_T).
inline double fd_jacobian_det(const std::vector<double>& ptilde, double pbar,
                              const std::function<std::vector<double>(const std::vector<double>&, double)>& inv) {
    const int T = static_cast<int>(ptilde.size()) + 1;
    Eigen::MatrixXd J(T, T);
    for (int k = 0; k < T; ++k) {
        std::vector<double> tp = ptilde, tm = ptilde;
        double bp = pbar, bm = pbar;
        double h;
        if (k < T - 1) {
            h = 1e-6 * std::min(ptilde[k], 1.0 - ptilde[k]);
            tp[k] += h;
            tm[k] -= h;
        } else {
            h = 1e-6 * pbar;
            bp += h;
            bm -= h;
        }
        const std::vector<double> fp = inv(tp, bp), fm = inv(tm, bm);
        for (int r = 0; r < T; ++r) J(r, k) = (fp[r] - fm[r]) / (2.0 * h);
    }
    return std::abs(J.determinant());
}

// Inverse by cofactor expansion, for small matrices.
inline Eigen::MatrixXd cofactor_inverse(const Eigen::MatrixXd& A) {
    const int n = static_cast<int>(A.rows());
    Eigen::MatrixXd C(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Eigen::MatrixXd M(n - 1, n - 1);
            for (int r = 0, rr = 0; r < n; ++r) {
                if (r == i) continue;
                for (int c = 0, cc = 0; c < n; ++c) {
                    if (c == j) continue;
                    M(rr, cc++) = A(r, c);
                }
                ++rr;
            }
            C(i, j) = ((i + j) % 2 ? -1.0 : 1.0) * (n == 1 ? 1.0 : M.determinant());
        }
    return C.transpose() / A.determinant();
}

inline double ks_uniform(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) d = std::max({d, (i + 1) / n - u[i], u[i] - i / n});
    return d;
}

inline double ks_exponential(std::vector<double> e) {
    for (double& v : e) v = -std::expm1(-v);
    return ks_uniform(std::move(e));
}

// Critical value of the one-sample KS statistic at 0.1%, asymptotic form.
inline double ks_critical_001(std::size_t n) { return std::sqrt(-0.5 * std::log(0.0005)) / std::sqrt(double(n)); }

inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
    return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const std::vector<double> ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double m = (n - 1) / 2.0;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (ra[i] - m) * (rb[i] - m);
        saa += (ra[i] - m) * (ra[i] - m);
        sbb += (rb[i] - m) * (rb[i] - m);
    }
    return sab / std::sqrt(saa * sbb);
}

// Conditional simulation of the Experiment B expectations given (y0, x1, ptilde1, pbar):
// V | data ~ Gamma(2 + kappa0, lambda0 + pbar), ptilde1 ~ U(0, 1) independent of V,
// X_2 | V, Y_1 ~ Bernoulli(1 - exp(-(y0 + x1 + y1) V)).
struct CondMc {
    double ex2_pt, ex2, ex2v_pt, ex2_1mpt_v;
    double se_ex2_pt, se_ex2, se_ex2v_pt, se_ex2_1mpt_v;
};

inline CondMc cond_expectations_mc(const fhr::Theta& th, double y0, double x1, double ptilde1, double pbar,
                                   const fhr::ExperimentPosterior& post, std::size_t draws, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::gamma_distribution<double> gam(2.0 + post.kappa0, 1.0 / (post.lambda0 + pbar));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto y1_of = [&](double pt) {
        return std::pow(pt * pbar * std::exp(-th.gamma * y0 - th.beta[0] * x1), 1.0 / th.alpha);
    };
    const double y1_fixed = y1_of(ptilde1);
    double s[4] = {0, 0, 0, 0}, q[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < draws; ++i) {
        const double v = gam(gen);
        const double u = unif(gen);
        const double pr_fixed = -std::expm1(-(y0 + x1 + y1_fixed) * v);
        const double pr_free = -std::expm1(-(y0 + x1 + y1_of(u)) * v);
        const double f[4] = {pr_fixed, pr_free, pr_fixed * v, pr_free * (1.0 - u) * v};
        for (int k = 0; k < 4; ++k) {
            s[k] += f[k];
            q[k] += f[k] * f[k];
        }
    }
    const double n = static_cast<double>(draws);
    double m[4], se[4];
    for (int k = 0; k < 4; ++k) {
        m[k] = s[k] / n;
        se[k] = std::sqrt(std::max(q[k] / n - m[k] * m[k], 0.0) / n);
    }
    return CondMc{m[0], m[1], m[2], m[3], se[0], se[1], se[2], se[3]};
}

}  // namespace oracle
