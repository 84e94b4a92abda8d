#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace percgames {

using Stream = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for replicate `index` under `seed`. Depends only on the
// pair, so results never depend on how replicates are split across workers.
inline Stream make_stream(std::uint64_t seed, std::uint64_t index) {
  return Stream(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

inline double uniform01(Stream& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// PERCGAMES_WORKERS overrides `requested`; 0 means available parallelism.
inline unsigned resolve_workers(unsigned requested = 0) {
  if (const char* env = std::getenv("PERCGAMES_WORKERS"); env != nullptr && *env != '\0') {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(acc, i) for i in [0, count) split into contiguous chunks, one
// accumulator per worker, then folds the accumulators in chunk order with
// merge(into, from). Exceptions from any worker are rethrown.
template <class Acc, class Body, class Merge>
Acc parallel_reduce(std::int64_t count, unsigned workers, const Acc& init, Body body,
                    Merge merge) {
  workers = static_cast<unsigned>(
      std::clamp<std::int64_t>(workers, 1, std::max<std::int64_t>(count, 1)));
  std::vector<Acc> partial(workers, init);
  if (workers == 1) {
    for (std::int64_t i = 0; i < count; ++i) body(partial[0], i);
    return partial[0];
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::int64_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      const std::int64_t begin = w * chunk;
      const std::int64_t end = std::min(count, begin + chunk);
      try {
        for (std::int64_t i = begin; i < end; ++i) body(partial[w], i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  Acc total = init;
  for (const auto& p : partial) merge(total, p);
  return total;
}

// Replicates are grouped in fixed blocks of kReplicateBlock; block b draws from
// make_stream(seed, b) in replicate order. Blocks, not workers, own the
// streams, so the result is the same for any worker count.
inline constexpr std::int64_t kReplicateBlock = 256;

template <class Acc, class Body, class Merge>
Acc parallel_replicates(std::int64_t replicates, unsigned workers, std::uint64_t seed,
                        const Acc& init, Body body, Merge merge) {
  const std::int64_t blocks = (replicates + kReplicateBlock - 1) / kReplicateBlock;
  return parallel_reduce(
      blocks, workers, init,
      [&](Acc& acc, std::int64_t b) {
        Stream rng = make_stream(seed, static_cast<std::uint64_t>(b));
        const std::int64_t end = std::min(replicates, (b + 1) * kReplicateBlock);
        for (std::int64_t i = b * kReplicateBlock; i < end; ++i) body(acc, rng, i);
      },
      merge);
}

}  // namespace percgames
