#pragma once

// Estimates, mergeable running moments, least-squares fits, seeded RNG and
// a deterministic parallel loop.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>

namespace hypdrift {

/// A point value with its sampling uncertainty and the seed that reproduces it.
struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::string method;

    std::pair<double, double> ci95() const {
        return {value - 1.96 * stderr_, value + 1.96 * stderr_};
    }
};

Estimate make_estimate(double value, double stderr_, std::size_t n, std::uint64_t seed,
                       std::string method);

/// Count / mean / sum of squared deviations with an associative merge
/// (Chan et al.), so per-thread partials combine to the serial answer.
class RunningStats {
public:
    void add(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }
    void merge(const RunningStats& o);

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stddev() const { return std::sqrt(variance()); }
    double stderr_of_mean() const {
        return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double intercept_stderr = 0.0;
    std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope * x. Needs >= 2 points.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// splitmix64 finaliser.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Sub-seed for stream `index` of a run: seed XOR splitmix64(index).
/// Stable across runs and thread counts.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index));
}

/// Sub-seed for a named estimator inside a report.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
    /// Uniform on [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Calls body(i) for i in [0, n) across hardware threads. Bodies must only
/// write to per-index state; callers merge in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hypdrift
