#include "hardiag/montecarlo.hpp"
#include "hardiag/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hardiag {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k)
{
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t(kMul0) * c[0];
        const std::uint64_t p1 = std::uint64_t(kMul1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

} // namespace

RandomStream::RandomStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)},
      stream_(stream_id)
{
}

void RandomStream::refill()
{
    const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                           static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const auto out = philox(ctr, key_);
    buffer_[0] = (std::uint64_t(out[1]) << 32) | out[0];
    buffer_[1] = (std::uint64_t(out[3]) << 32) | out[2];
    ++block_;
    used_ = 0;
}

RandomStream::result_type RandomStream::operator()()
{
    if (used_ >= 2) refill();
    return buffer_[used_++];
}

double RandomStream::uniform()
{
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double RandomStream::normal()
{
    return gauss_(*this);
}

Eigen::VectorXd RandomStream::normal_vector(Eigen::Index n)
{
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
}

int worker_threads()
{
    if (const char* env = std::getenv("HARDIAG_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& body, std::int64_t chunk)
{
    if (count <= 0) return;
    chunk = std::max<std::int64_t>(1, chunk);
    const std::int64_t chunks = (count + chunk - 1) / chunk;
    const int workers = static_cast<int>(std::min<std::int64_t>(worker_threads(), chunks));
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_guard;
    auto run = [&] {
        for (;;) {
            const std::int64_t c = next.fetch_add(1);
            if (c >= chunks) return;
            try {
                const std::int64_t end = std::min(count, (c + 1) * chunk);
                for (std::int64_t i = c * chunk; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_guard);
                if (!failure) failure = std::current_exception();
                next.store(chunks);
                return;
            }
        }
    };
    if (workers <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t) pool.emplace_back(run);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
}

McResult mc_expectation(const Sampler& sampler, const McConfig& cfg)
{
    if (cfg.replications < 1) throw InputError("mc_expectation: replications must be positive");
    if (cfg.chunk < 1) throw InputError("mc_expectation: chunk must be positive");
    std::vector<double> values(static_cast<std::size_t>(cfg.replications));
    parallel_for(
        cfg.replications,
        [&](std::int64_t i) {
            RandomStream stream(cfg.master_seed, static_cast<std::uint64_t>(i));
            values[static_cast<std::size_t>(i)] = sampler(stream);
        },
        cfg.chunk);

    McResult res;
    double sum = 0.0, comp = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) {
            ++res.excluded;
            continue;
        }
        ++res.used;
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    if (res.excluded * 100 > cfg.replications)
        throw NumericalFailure("mc_expectation: " + std::to_string(res.excluded) + " of " +
                               std::to_string(cfg.replications) + " replications were non-finite");
    if (res.used == 0) throw NumericalFailure("mc_expectation: no finite replications");
    res.estimate = sum / static_cast<double>(res.used);
    double ss = 0.0;
    for (double v : values)
        if (std::isfinite(v)) ss += (v - res.estimate) * (v - res.estimate);
    res.standard_error = res.used > 1 ? std::sqrt(ss / static_cast<double>(res.used - 1) / static_cast<double>(res.used)) : 0.0;
    return res;
}

} // namespace hardiag
