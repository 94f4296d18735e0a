#pragma once

#include "fhr/mph.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace fhr {

struct HeterogeneitySpec {
    double kappa0 = 5.0;   // Gamma shape
    double lambda0 = 5.0;  // Gamma rate
    void validate() const;
};

enum class Feedback { ExperimentA, ExperimentB, Custom };

// tau(y0, y_1..y_{t-1}, x_1..x_{t-1}) for the period-t covariate.
using TauFn = std::function<double(double, std::span<const double>, std::span<const double>)>;

struct DgpConfig {
    int T = 2;
    Theta theta0 = fhr::theta0();
    double y0_rate = 1.5;
    double x1_prob = 0.5;
    HeterogeneitySpec het;
    Feedback feedback = Feedback::ExperimentA;
    TauFn custom_tau;

    void validate() const;
    static DgpConfig experiment(char which);
};

std::string feedback_name(Feedback f);

double feedback_tau(const DgpConfig& cfg, double y0, double x1, double y1);
double feedback_prob(const DgpConfig& cfg, double y0, double x1, double y1, double v);

// Draws one unit from stream (seed, unit).
PanelPath simulate_unit(const DgpConfig& cfg, std::uint64_t seed, std::uint64_t unit);

// Unit i uses RngStream(seed, i), so results do not depend on thread count.
Panel simulate_panel(const DgpConfig& cfg, std::size_t n, std::uint64_t seed, Exec exec = Exec::Parallel);

}  // namespace fhr
