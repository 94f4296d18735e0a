#include "fhr/batch.hpp"

#include <algorithm>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fhr {

namespace {

void chunk_sum(std::size_t begin, std::size_t end, int width, const UnitAccumulator& add, double* out) {
    std::fill(out, out + width, 0.0);
    for (std::size_t i = begin; i < end; ++i) add(i, out);
}

// Pairwise combination of chunk partials, stored contiguously.
void tree_reduce(std::vector<double>& parts, std::size_t count, int width) {
    for (std::size_t stride = 1; stride < count; stride *= 2) {
        for (std::size_t c = 0; c + stride < count; c += 2 * stride) {
            double* dst = parts.data() + c * width;
            const double* src = parts.data() + (c + stride) * width;
            for (int k = 0; k < width; ++k) dst[k] += src[k];
        }
    }
}

}  // namespace

Vec batch_sum(std::size_t n, int width, const UnitAccumulator& add, Exec exec) {
    const std::size_t chunks = (n + kReduceChunk - 1) / kReduceChunk;
    Vec out = Vec::Zero(width);
    if (chunks == 0) return out;
    std::vector<double> parts(chunks * width, 0.0);
    if (exec == Exec::Serial) {
        for (std::size_t c = 0; c < chunks; ++c)
            chunk_sum(c * kReduceChunk, std::min(n, (c + 1) * kReduceChunk), width, add, parts.data() + c * width);
    } else {
        std::exception_ptr err = nullptr;
        const long long nc = static_cast<long long>(chunks);
#pragma omp parallel for schedule(dynamic, 4)
        for (long long c = 0; c < nc; ++c) {
            try {
                const std::size_t cc = static_cast<std::size_t>(c);
                chunk_sum(cc * kReduceChunk, std::min(n, (cc + 1) * kReduceChunk), width, add,
                          parts.data() + cc * width);
            } catch (...) {
#pragma omp critical(fhr_batch_error)
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
    }
    tree_reduce(parts, chunks, width);
    for (int k = 0; k < width; ++k) out(k) = parts[k];
    return out;
}

Vec MomentStats::mc_se() const {
    const Vec var = cov().diagonal();
    return (var.array().max(0.0) / static_cast<double>(n)).sqrt().matrix();
}

Vec moment_mean(const MomentFn& phi, const Panel& panel, const Theta& th, Exec exec) {
    const int d = phi.dim;
    const Vec s = batch_sum(
        panel.size(), d,
        [&](std::size_t i, double* acc) {
            double buf[16];
            std::vector<double> big;
            double* out = buf;
            if (d > 16) {
                big.resize(d);
                out = big.data();
            }
            phi.eval(th, panel.view(i), out);
            for (int k = 0; k < d; ++k) acc[k] += out[k];
        },
        exec);
    return s / static_cast<double>(panel.size());
}

JointStats joint_stats(const std::vector<MomentFn>& fns, const std::vector<Theta>& thetas, const Panel& panel,
                       Exec exec) {
    if (fns.size() != thetas.size()) throw DomainError("joint_stats: one theta per function required");
    int d = 0;
    for (const auto& f : fns) d += f.dim;
    const int width = d + d * (d + 1) / 2;
    const Vec s = batch_sum(
        panel.size(), width,
        [&](std::size_t i, double* acc) {
            std::vector<double> v(d);
            const PathView pv = panel.view(i);
            int off = 0;
            for (std::size_t j = 0; j < fns.size(); ++j) {
                fns[j].eval(thetas[j], pv, v.data() + off);
                off += fns[j].dim;
            }
            for (int k = 0; k < d; ++k) acc[k] += v[k];
            int idx = d;
            for (int r = 0; r < d; ++r)
                for (int c = r; c < d; ++c) acc[idx++] += v[r] * v[c];
        },
        exec);
    JointStats js;
    js.n = panel.size();
    const double inv = 1.0 / static_cast<double>(js.n);
    js.mean = s.head(d) * inv;
    js.second.resize(d, d);
    int idx = d;
    for (int r = 0; r < d; ++r)
        for (int c = r; c < d; ++c) {
            js.second(r, c) = js.second(c, r) = s(idx++) * inv;
        }
    return js;
}

MomentStats moment_stats(const MomentFn& phi, const Panel& panel, const Theta& th, Exec exec) {
    const JointStats js = joint_stats({phi}, {th}, panel, exec);
    return MomentStats{js.n, js.mean, js.second};
}

void set_num_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace fhr
