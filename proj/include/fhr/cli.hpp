#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fhr::cli {

using nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string experiment = "A";  // A | B | custom
    std::size_t n = 1000000;
    std::uint64_t seed = 1;
    int T = 2;
    std::optional<double> alpha, beta, gamma;  // theta0 overrides
    std::vector<double> custom_tau;            // c0 + c1 y0 + c2 x_{t-1} + c3 y_{t-1}
    std::string moment = "simple";
    std::optional<double> p;  // working-model p; defaults to the sample mean of X_2
    std::string input;
    std::string out;
    int threads = 0;  // 0 keeps the OpenMP default
    bool with_latent = false;
    std::string model = "mph";  // checker model: mph | mih | logit | poisson
    std::string phi = "ab";
    double b = 1.0;       // MIH moment exponent
    double delta = 0.25;  // MIH heterogeneity loading
    double y = 1.0, yprev = 1.0, x = 1.0;
    std::string flavor = "efficient";  // efficient | working | simple

    void validate() const;
    json to_json() const;
    // Unknown keys and ill-typed values throw ConfigError.
    void merge(const json& j);
};

RunConfig load_config_file(const std::string& path);

struct CommandResult {
    json report;
    int exit_code = 0;
};

CommandResult cmd_simulate(const RunConfig& cfg);
CommandResult cmd_estimate(const RunConfig& cfg);
CommandResult cmd_bounds(const RunConfig& cfg);
CommandResult cmd_tables(const RunConfig& cfg);
CommandResult cmd_check(const RunConfig& cfg);
CommandResult cmd_ash(const RunConfig& cfg);

CommandResult run_command(const std::string& command, const RunConfig& cfg);
std::vector<std::string> command_names();

}  // namespace fhr::cli
