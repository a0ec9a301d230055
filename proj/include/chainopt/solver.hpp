#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "chainopt/errors.hpp"
#include "chainopt/model.hpp"
#include "chainopt/rng.hpp"

namespace chainopt {

/// Stopping rule for a solver run: a fixed number of iterations (fully
/// deterministic) or a wall-clock limit (iteration count then varies).
struct Budget {
    enum class Kind { iterations, seconds };

    Kind kind = Kind::iterations;
    std::int64_t iterations = 0;
    double seconds = 0.0;

    static Budget iters(std::int64_t n) { return Budget{Kind::iterations, n, 0.0}; }
    static Budget wall_clock(double s) { return Budget{Kind::seconds, 0, s}; }

    bool deterministic() const { return kind == Kind::iterations; }
};

/// One point of the best-so-far convergence trace.
struct TracePoint {
    std::int64_t iteration = 0;
    double best_utility = 0.0;
    double elapsed_ms = 0.0;
};

/// Outcome of one solver run. `trace` holds the monotone best-so-far
/// utility per iteration, starting at iteration 0 (post-initialization).
struct SolverReport {
    std::string algorithm;
    Configuration best;
    double best_utility = 0.0;
    std::int64_t iterations = 0;
    double elapsed_seconds = 0.0;
    std::uint64_t seed = 0;
    std::vector<TracePoint> trace;
};

/// Draws `count` distinct indices uniformly without replacement and writes
/// them as ones into a zeroed selection vector. Reuses one index buffer, so
/// repeated resampling does no allocation (partial Fisher-Yates; carrying
/// the permuted buffer over between calls does not bias the draw).
class SelectionSampler {
 public:
    explicit SelectionSampler(int pool_size) : index_(pool_size) {
        for (int i = 0; i < pool_size; ++i) index_[i] = i;
    }

    void resample(std::vector<std::uint8_t>& z, int count, Rng& rng) {
        const int M = static_cast<int>(index_.size());
        if (count >= M) {  // full selection is forced; no draws needed
            z.assign(M, 1);
            return;
        }
        z.assign(M, 0);
        for (int k = 0; k < count; ++k) {
            const int j = k + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(M - k)));
            std::swap(index_[k], index_[j]);
            z[index_[k]] = 1;
        }
    }

 private:
    std::vector<int> index_;
};

namespace detail {

/// Monotonic timer for budgets and trace timestamps.
class StopWatch {
 public:
    StopWatch() : start_(std::chrono::steady_clock::now()) {}

    double elapsed_seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    double elapsed_ms() const { return elapsed_seconds() * 1e3; }

 private:
    std::chrono::steady_clock::time_point start_;
};

inline bool budget_allows(const Budget& b, std::int64_t next_iteration, const StopWatch& watch) {
    if (b.kind == Budget::Kind::iterations) return next_iteration <= b.iterations;
    return watch.elapsed_seconds() < b.seconds;
}

} // namespace detail

} // namespace chainopt
