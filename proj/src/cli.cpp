#include "fhr/cli.hpp"

#include "fhr/altmodels.hpp"
#include "fhr/batch.hpp"
#include "fhr/estimate.hpp"
#include "fhr/fhrcheck.hpp"
#include "fhr/panel_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace fhr::cli {

namespace {

template <class T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "experiment", "n", "seed", "T", "alpha", "beta", "gamma", "custom_tau", "moment", "p", "input", "out",
        "threads", "with_latent", "model", "phi", "b", "delta", "y", "yprev", "x", "flavor"};
    return keys;
}

DgpConfig make_dgp(const RunConfig& cfg) {
    DgpConfig d;
    if (cfg.experiment == "custom") {
        d.feedback = Feedback::Custom;
        d.T = cfg.T;
        const std::vector<double> c = cfg.custom_tau;
        d.custom_tau = [c](double y0, std::span<const double> y, std::span<const double> x) {
            return c[0] + c[1] * y0 + c[2] * x.back() + c[3] * y.back();
        };
    } else {
        d = DgpConfig::experiment(cfg.experiment[0]);
    }
    if (cfg.alpha) d.theta0.alpha = *cfg.alpha;
    if (cfg.beta) d.theta0.beta = {*cfg.beta};
    if (cfg.gamma) d.theta0.gamma = *cfg.gamma;
    d.validate();
    return d;
}

json theta_json(const Theta& th) { return json{{"alpha", th.alpha}, {"beta", th.beta}, {"gamma", th.gamma}}; }

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Panel input_or_simulated(const RunConfig& cfg, const DgpConfig& dgp, json& rep) {
    if (!cfg.input.empty()) {
        rep["data"] = cfg.input;
        return read_panel_csv(cfg.input);
    }
    rep["data"] = "simulated";
    return simulate_panel(dgp, cfg.n, cfg.seed);
}

double mean_x2(const Panel& panel) {
    double s = 0.0;
    for (std::size_t i = 0; i < panel.size(); ++i) s += panel.x[i * panel.T + 1];
    return s / static_cast<double>(panel.size());
}

MomentOptions moment_options(const RunConfig& cfg, const DgpConfig& dgp, const Panel& panel) {
    MomentOptions mo;
    mo.post = ExperimentPosterior::from(dgp);
    mo.wm.p = cfg.p ? *cfg.p : mean_x2(panel);
    mo.eval.y = cfg.y;
    mo.eval.yprev = cfg.yprev;
    mo.eval.x = {cfg.x};
    return mo;
}

json base_report(const std::string& command, const RunConfig& cfg) {
    return json{{"command", command}, {"config", cfg.to_json()}};
}

json checker_json(const CheckerReport& r) {
    return json{{"cond1_residual", r.cond1_residual}, {"cond2_variation", r.cond2_variation},
                {"tol", r.tol},                       {"cond1_pass", r.cond1_pass},
                {"cond2_pass", r.cond2_pass},         {"cond1_worst", r.cond1_worst},
                {"pass", r.pass()}};
}

json null_space_json(const DiscreteNullSpace& ns) {
    json blocks = json::array();
    for (const auto& b : ns.blocks) {
        const Vec& sv = b.ns.singular_values;
        blocks.push_back(json{{"y0", b.y0},
                              {"x1", b.x1},
                              {"rows", b.rows},
                              {"dimension", b.ns.basis.cols()},
                              {"smallest_singular_value", sv.size() ? sv.minCoeff() : 0.0},
                              {"threshold", b.ns.threshold}});
    }
    return json{{"dimension", ns.dimension()},
                {"min_block_dimension", ns.min_block_dimension()},
                {"unknowns_per_block", ns.unknowns_per_block()},
                {"warning", ns.warning},
                {"blocks", blocks}};
}

}  // namespace

void RunConfig::validate() const {
    if (experiment != "A" && experiment != "B" && experiment != "custom")
        throw ConfigError("experiment must be A, B or custom");
    if (n < 1) throw ConfigError("n must be at least 1");
    if (T < 2) throw ConfigError("T must be at least 2");
    if (experiment != "custom" && T != 2) throw ConfigError("experiments A and B have T = 2");
    if (experiment == "custom" && custom_tau.size() != 4)
        throw ConfigError("custom experiment needs custom_tau = [c0, c1, c2, c3]");
    if (alpha && !(*alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (p && !(*p > 0.0 && *p < 1.0)) throw ConfigError("p must lie in (0, 1)");
    if (threads < 0) throw ConfigError("threads must be non-negative");
    if (flavor != "efficient" && flavor != "working" && flavor != "simple")
        throw ConfigError("flavor must be efficient, working or simple");
    if (model != "mph" && model != "mih" && model != "logit" && model != "poisson")
        throw ConfigError("model must be mph, mih, logit or poisson");
    if (!(b > 0.0)) throw ConfigError("b must be positive");
}

json RunConfig::to_json() const {
    json j{{"experiment", experiment}, {"n", n},         {"seed", seed},       {"T", T},
           {"moment", moment},         {"input", input}, {"out", out},         {"threads", threads},
           {"with_latent", with_latent}, {"model", model}, {"phi", phi},       {"b", b},
           {"delta", delta},           {"y", y},         {"yprev", yprev},     {"x", x},
           {"flavor", flavor}};
    j["alpha"] = alpha ? json(*alpha) : json(nullptr);
    j["beta"] = beta ? json(*beta) : json(nullptr);
    j["gamma"] = gamma ? json(*gamma) : json(nullptr);
    j["p"] = p ? json(*p) : json(nullptr);
    j["custom_tau"] = custom_tau;
    return j;
}

void RunConfig::merge(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const json& v = it.value();
        const auto& keys = known_keys();
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("unknown config key '" + k + "'");
        auto opt_double = [&](std::optional<double>& dst) {
            if (v.is_null()) dst.reset();
            else if (v.is_number()) dst = v.get<double>();
            else throw ConfigError("config key '" + k + "' has the wrong type");
        };
        auto number = [&](double& dst) {
            if (!v.is_number()) throw ConfigError("config key '" + k + "' has the wrong type");
            dst = v.get<double>();
        };
        auto count = [&]() -> std::uint64_t {
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
                throw ConfigError("config key '" + k + "' must be a non-negative integer");
            return v.get<std::uint64_t>();
        };
        auto text = [&](std::string& dst) {
            if (!v.is_string()) throw ConfigError("config key '" + k + "' must be a string");
            dst = v.get<std::string>();
        };
        if (k == "experiment") text(experiment);
        else if (k == "n") n = count();
        else if (k == "seed") seed = count();
        else if (k == "T") T = static_cast<int>(count());
        else if (k == "alpha") opt_double(alpha);
        else if (k == "beta") opt_double(beta);
        else if (k == "gamma") opt_double(gamma);
        else if (k == "custom_tau") custom_tau = get_as<std::vector<double>>(v, k);
        else if (k == "moment") text(moment);
        else if (k == "p") opt_double(p);
        else if (k == "input") text(input);
        else if (k == "out") text(out);
        else if (k == "threads") threads = static_cast<int>(count());
        else if (k == "with_latent") {
            if (!v.is_boolean()) throw ConfigError("config key 'with_latent' must be a boolean");
            with_latent = v.get<bool>();
        }
        else if (k == "model") text(model);
        else if (k == "phi") text(phi);
        else if (k == "b") number(b);
        else if (k == "delta") number(delta);
        else if (k == "y") number(y);
        else if (k == "yprev") number(yprev);
        else if (k == "x") number(x);
        else if (k == "flavor") text(flavor);
    }
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    RunConfig cfg;
    cfg.merge(j);
    return cfg;
}

CommandResult cmd_simulate(const RunConfig& cfg) {
    if (cfg.out.empty()) throw ConfigError("simulate needs an output path (--out)");
    const DgpConfig dgp = make_dgp(cfg);
    const Panel panel = simulate_panel(dgp, cfg.n, cfg.seed);
    write_panel_csv(cfg.out, panel, cfg.with_latent);
    json rep = base_report("simulate", cfg);
    std::vector<double> means(1 + 2 * panel.T, 0.0);
    for (std::size_t i = 0; i < panel.size(); ++i) {
        means[0] += panel.y0[i];
        for (int t = 0; t < panel.T; ++t) {
            means[1 + 2 * t] += panel.x[i * panel.T + t];
            means[2 + 2 * t] += panel.y[i * panel.T + t];
        }
    }
    json cm;
    cm["y0"] = means[0] / panel.size();
    for (int t = 0; t < panel.T; ++t) {
        cm["x" + std::to_string(t + 1)] = means[1 + 2 * t] / panel.size();
        cm["y" + std::to_string(t + 1)] = means[2 + 2 * t] / panel.size();
    }
    rep["rows"] = panel.size();
    rep["path"] = cfg.out;
    rep["column_means"] = cm;
    return {rep, 0};
}

CommandResult cmd_estimate(const RunConfig& cfg) {
    if (cfg.input.empty()) throw ConfigError("estimate needs an input CSV (--input)");
    if (cfg.moment == "ash" || cfg.moment == "asf")
        throw ConfigError("moment '" + cfg.moment + "' is an average effect; use the ash command");
    const DgpConfig dgp = make_dgp(cfg);
    json rep = base_report("estimate", cfg);
    const Panel panel = input_or_simulated(cfg, dgp, rep);
    const MomentOptions mo = moment_options(cfg, dgp, panel);
    const MomentFn phi = make_moment(cfg.moment, mo);
    json warnings = json::array();
    if (phi.regime == Regime::StrictExogeneityOnly && cfg.experiment != "A")
        warnings.push_back("regime mismatch: moment '" + cfg.moment +
                           "' is valid only without feedback, but experiment " + cfg.experiment + " has feedback");
    const GmmResult r = gmm_solve(phi, panel, dgp.theta0);
    rep["n"] = panel.size();
    rep["moment"] = phi.id;
    rep["working_p"] = mo.wm.p;
    rep["theta_init"] = theta_json(dgp.theta0);
    rep["theta_hat"] = theta_json(r.theta_hat);
    rep["se"] = vec_json(r.se);
    rep["converged"] = r.converged;
    rep["iterations"] = r.iterations;
    rep["moment_norm"] = r.moment_norm;
    rep["information_gap"] = information_gap(r.H, r.V);
    rep["warnings"] = warnings;
    return {rep, r.converged ? 0 : 1};
}

CommandResult cmd_bounds(const RunConfig& cfg) {
    const DgpConfig dgp = make_dgp(cfg);
    json rep = base_report("bounds", cfg);
    const Panel panel = input_or_simulated(cfg, dgp, rep);
    const MomentOptions mo = moment_options(cfg, dgp, panel);
    auto one = [&](const std::string& id) {
        const BoundResult b = efficiency_bound(make_moment(id, mo), panel, dgp.theta0);
        return json{{"score", id},
                    {"asd", vec_json(b.bound_avar.diagonal().cwiseSqrt())},
                    {"se", vec_json(b.bound_se)}};
    };
    rep["n"] = panel.size();
    rep["order"] = {"alpha", "beta", "gamma"};
    json bounds = json::array();
    bounds.push_back(one("eff-fb"));
    if (cfg.experiment == "A") bounds.push_back(one("eff-se"));
    rep["bounds"] = bounds;
    return {rep, 0};
}

CommandResult cmd_tables(const RunConfig& cfg) {
    if (cfg.experiment == "custom") throw ConfigError("tables are defined for experiments A and B");
    TableConfig tc;
    tc.experiment = cfg.experiment[0];
    tc.n = cfg.n;
    tc.seed = cfg.seed;
    tc.ash_point.y = cfg.y;
    tc.ash_point.yprev = cfg.yprev;
    tc.ash_point.x = {cfg.x};
    const EfficiencyTable t = make_table(tc);
    if (!cfg.out.empty()) {
        std::ofstream os(cfg.out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open '" + cfg.out + "' for writing");
        os << t.to_csv();
    }
    json rep = base_report("tables", cfg);
    rep["rows"] = t.rows;
    rep["cols"] = t.cols;
    json ratio = json::array(), asd = json::array();
    for (int i = 0; i < t.ratio.rows(); ++i) {
        ratio.push_back(vec_json(t.ratio.row(i).transpose()));
        asd.push_back(vec_json(t.asd.row(i).transpose()));
    }
    rep["ratio"] = ratio;
    rep["asd"] = asd;
    rep["benchmark_row"] = t.rows[t.benchmark_row];
    rep["working_p"] = t.working_p;
    rep["text"] = t.to_text();
    return {rep, 0};
}

CommandResult cmd_check(const RunConfig& cfg) {
    json rep = base_report("check", cfg);
    rep["model"] = cfg.model;
    rep["phi"] = cfg.phi;
    if (cfg.model == "mph") {
        const DgpConfig dgp = make_dgp(cfg);
        const Theta th = dgp.theta0;
        MomentOptions mo;
        mo.post = ExperimentPosterior::from(dgp);
        if (cfg.p) mo.wm.p = *cfg.p;
        mo.eval.y = cfg.y;
        mo.eval.yprev = cfg.yprev;
        mo.eval.x = {cfg.x};
        const Candidate c = cfg.phi == "broken" ? broken_mph_candidate(th) : mph_candidate(cfg.phi, th, mo);
        const CheckerReport r = check_fhr(mph_model(2), c, th.pack());
        rep["report"] = checker_json(r);
        return {rep, 0};
    }
    if (cfg.model == "mih") {
        if (cfg.phi != "mih") throw ConfigError("the mih model checks phi = mih");
        MihTheta mt{make_dgp(cfg).theta0, {cfg.delta}};
        const double b = cfg.b;
        Candidate c;
        c.eval = [mt, b](const PathView& p, double* out) {
            out[0] = mih_moment(mt, p, b, [](double, std::span<const double>) { return 1.0; });
        };
        Vec tv = mt.base.pack();
        rep["report"] = checker_json(check_fhr(mih_model(cfg.delta), c, tv));
        return {rep, 0};
    }
    if (cfg.model == "logit") {
        Vec th(2);
        th << (cfg.beta ? *cfg.beta : 0.7), (cfg.gamma ? *cfg.gamma : 0.3);
        const DiscreteNullSpace ns = discrete_null_space(logit_model(2), th, 1e-10);
        rep["null_space"] = null_space_json(ns);
        return {rep, 0};
    }
    PoissonTheta pth{{cfg.beta ? *cfg.beta : 0.5}, cfg.gamma ? *cfg.gamma : 0.2};
    Vec th(2);
    th << pth.beta[0], pth.gamma;
    const ParametricModel pm = poisson_model(20);
    const DiscreteNullSpace ns = discrete_null_space(pm, th, 1e-10);
    rep["null_space"] = null_space_json(ns);
    if (cfg.phi == "cw") {
        json captured = json::array();
        for (int comp = 0; comp < 2; ++comp) {
            captured.push_back(ns.captured_fraction([&](double y0, double y1, double y2, double x1, double x2) {
                const double xa[1] = {x1}, xb[1] = {x2};
                return poisson_cw_moment(pth, static_cast<int>(y0), static_cast<int>(y1), static_cast<int>(y2), xa,
                                         xb)(comp);
            }));
        }
        rep["cw_captured_fraction"] = captured;
        Candidate c;
        c.dim = 2;
        c.eval = [pth](const PathView& p, double* out) {
            const Vec v = poisson_cw_moment(pth, static_cast<int>(p.y0), static_cast<int>(p.y[0]),
                                            static_cast<int>(p.y[1]), p.xt(1), p.xt(2));
            out[0] = v(0);
            out[1] = v(1);
        };
        rep["report"] = checker_json(check_fhr(pm, c, th));
    }
    return {rep, 0};
}

CommandResult cmd_ash(const RunConfig& cfg) {
    const DgpConfig dgp = make_dgp(cfg);
    json rep = base_report("ash", cfg);
    const Panel panel = input_or_simulated(cfg, dgp, rep);
    const MomentOptions mo = moment_options(cfg, dgp, panel);
    const std::string score_id = cfg.flavor == "efficient" ? "eff-fb" : cfg.flavor == "working" ? "loceff" : "simple";
    const EffectFlavor fl = cfg.flavor == "efficient" ? EffectFlavor::EfficientScore
                            : cfg.flavor == "working" ? EffectFlavor::WorkingModel
                                                      : EffectFlavor::Simple;
    const MomentFn score = make_moment(score_id, mo);
    const GmmResult g = gmm_solve(score, panel, dgp.theta0);
    const EffectResult r = average_effect(make_moment("ash", mo), score, panel, g.theta_hat, fl);
    const double target = ash_target(dgp.theta0, mo.eval, dgp.het);
    rep["n"] = panel.size();
    rep["flavor"] = flavor_name(fl);
    rep["score"] = score_id;
    rep["theta_hat"] = theta_json(g.theta_hat);
    rep["converged"] = g.converged;
    rep["mu_hat"] = r.mu_hat;
    rep["se"] = r.se;
    rep["asd"] = r.asd;
    rep["target"] = target;
    rep["z"] = (r.mu_hat - target) / r.se;
    return {rep, g.converged ? 0 : 1};
}

std::vector<std::string> command_names() { return {"simulate", "estimate", "bounds", "tables", "check", "ash"}; }

CommandResult run_command(const std::string& command, const RunConfig& cfg) {
    cfg.validate();
    if (cfg.threads > 0) set_num_threads(cfg.threads);
    if (command == "simulate") return cmd_simulate(cfg);
    if (command == "estimate") return cmd_estimate(cfg);
    if (command == "bounds") return cmd_bounds(cfg);
    if (command == "tables") return cmd_tables(cfg);
    if (command == "check") return cmd_check(cfg);
    if (command == "ash") return cmd_ash(cfg);
    throw ConfigError("unknown command '" + command + "'");
}

}  // namespace fhr::cli
