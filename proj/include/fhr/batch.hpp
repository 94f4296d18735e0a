#pragma once

#include "fhr/moments.hpp"

#include <cstddef>
#include <functional>

namespace fhr {

// Units are grouped in fixed chunks; chunk partial sums are combined by a
// pairwise tree, so the serial and parallel paths give bitwise-equal results.
constexpr std::size_t kReduceChunk = 2048;

// Accumulates the contribution of unit i into acc[0..width).
using UnitAccumulator = std::function<void(std::size_t i, double* acc)>;

Vec batch_sum(std::size_t n, int width, const UnitAccumulator& add, Exec exec = Exec::Parallel);

struct MomentStats {
    std::size_t n = 0;
    Vec mean;    // (1/n) sum phi
    Mat second;  // (1/n) sum phi phi'
    Mat cov() const { return second - mean * mean.transpose(); }
    // Standard error of each component of the mean.
    Vec mc_se() const;
};

Vec moment_mean(const MomentFn& phi, const Panel& panel, const Theta& th, Exec exec = Exec::Parallel);
MomentStats moment_stats(const MomentFn& phi, const Panel& panel, const Theta& th, Exec exec = Exec::Parallel);

// Mean of (phi, phi phi') stacked, for several functions evaluated on the same units.
struct JointStats {
    std::size_t n = 0;
    Vec mean;
    Mat second;
};
JointStats joint_stats(const std::vector<MomentFn>& fns, const std::vector<Theta>& thetas, const Panel& panel,
                       Exec exec = Exec::Parallel);

void set_num_threads(int n);
int max_threads();

}  // namespace fhr
