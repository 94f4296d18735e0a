#include "fhr/cli.hpp"
#include "fhr/numerics.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

using fhr::cli::json;

int main(int argc, char** argv) {
    CLI::App app{"Simulation, GMM estimation and moment checks for Weibull panel duration models"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, experiment, moment, out, input, model, phi, flavor;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double p = 0, y = 0, yprev = 0, x = 0, b = 0, delta = 0;
    int threads = 0, T = 0;
    bool with_latent = false;

    app.add_option("--config", config_path, "JSON config file");
    auto* o_exp = app.add_option("--experiment", experiment, "A, B or custom");
    auto* o_n = app.add_option("--n", n, "number of panels");
    auto* o_seed = app.add_option("--seed", seed, "RNG seed");
    auto* o_T = app.add_option("--T", T, "periods (custom experiment)");
    auto* o_moment = app.add_option("--moment", moment, "moment family");
    auto* o_p = app.add_option("--p", p, "working-model success probability");
    auto* o_out = app.add_option("--out", out, "output path");
    auto* o_input = app.add_option("--input", input, "input panel CSV");
    auto* o_threads = app.add_option("--threads", threads, "worker thread cap");
    auto* o_latent = app.add_flag("--with-latent", with_latent, "write the latent V column");
    auto* o_model = app.add_option("--model", model, "checker model: mph, mih, logit, poisson");
    auto* o_phi = app.add_option("--phi", phi, "checker candidate");
    auto* o_b = app.add_option("--b", b, "MIH moment exponent");
    auto* o_delta = app.add_option("--delta", delta, "MIH heterogeneity loading");
    auto* o_y = app.add_option("--y", y, "evaluation duration");
    auto* o_yprev = app.add_option("--yprev", yprev, "evaluation lagged duration");
    auto* o_x = app.add_option("--x", x, "evaluation covariate");
    auto* o_flavor = app.add_option("--flavor", flavor, "efficient, working or simple");

    const std::map<std::string, std::string> help = {
        {"simulate", "simulate a panel and write it as CSV (--out)"},
        {"estimate", "GMM estimate from a panel CSV (--input) with one moment family"},
        {"bounds", "efficiency bounds at the true parameter on a simulated panel"},
        {"tables", "asymptotic standard error table for experiment A or B"},
        {"check", "test whether a candidate is a valid moment for a model"},
        {"ash", "average structural hazard estimate with standard error"},
    };
    for (const auto& name : fhr::cli::command_names()) app.add_subcommand(name, help.at(name));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        fhr::cli::RunConfig cfg;
        if (!config_path.empty()) cfg = fhr::cli::load_config_file(config_path);
        json flags;
        if (*o_exp) flags["experiment"] = experiment;
        if (*o_n) flags["n"] = n;
        if (*o_seed) flags["seed"] = seed;
        if (*o_T) flags["T"] = T;
        if (*o_moment) flags["moment"] = moment;
        if (*o_p) flags["p"] = p;
        if (*o_out) flags["out"] = out;
        if (*o_input) flags["input"] = input;
        if (*o_threads) flags["threads"] = threads;
        if (*o_latent) flags["with_latent"] = with_latent;
        if (*o_model) flags["model"] = model;
        if (*o_phi) flags["phi"] = phi;
        if (*o_b) flags["b"] = b;
        if (*o_delta) flags["delta"] = delta;
        if (*o_y) flags["y"] = y;
        if (*o_yprev) flags["yprev"] = yprev;
        if (*o_x) flags["x"] = x;
        if (*o_flavor) flags["flavor"] = flavor;
        if (!flags.empty()) cfg.merge(flags);

        const std::string command = app.get_subcommands().front()->get_name();
        const fhr::cli::CommandResult res = fhr::cli::run_command(command, cfg);
        if (command == "tables" && res.report.contains("text")) std::cerr << res.report["text"].get<std::string>();
        std::cout << res.report.dump(2) << '\n';
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
