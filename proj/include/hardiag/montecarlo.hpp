#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <random>

namespace hardiag {

// Philox4x32-10 keyed by the master seed. A stream is addressed by
// (master seed, stream id) and draws blocks by an internal counter, so any
// replication can be regenerated without touching the others.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t master_seed, std::uint64_t stream_id);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }
    result_type operator()();

    double uniform();  // in [0, 1)
    double normal();
    Eigen::VectorXd normal_vector(Eigen::Index n);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int used_ = 2;
    std::normal_distribution<double> gauss_{0.0, 1.0};
};

struct McConfig {
    std::int64_t replications = 10000;
    std::uint64_t master_seed = 0;
    std::int64_t chunk = 1024;
};

struct McResult {
    double estimate = 0.0;
    double standard_error = 0.0;
    std::int64_t used = 0;
    std::int64_t excluded = 0;
};

using Sampler = std::function<double(RandomStream&)>;

// Mean and standard error of sampler over cfg.replications independent
// streams. Non-finite draws are excluded; more than 1% excluded throws
// NumericalFailure. The result does not depend on chunk size or thread count.
McResult mc_expectation(const Sampler& sampler, const McConfig& cfg);

// Independent master seed for sub-task `index` (SplitMix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Worker count: HARDIAG_THREADS if set, else hardware concurrency.
int worker_threads();

// Runs body(i) for i in [0, count) on the worker pool.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& body, std::int64_t chunk = 1);

} // namespace hardiag
