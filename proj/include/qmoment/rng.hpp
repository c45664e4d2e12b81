#ifndef QMOMENT_RNG_HPP
#define QMOMENT_RNG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

namespace qmoment {

/// Seedable stream of doubles with a fully specified bit-level recipe:
/// mt19937_64 seeded through seed_seq{seed lo, seed hi, stream lo, stream hi},
/// uniform = top 53 bits * 2^-53, normal by Box-Muller. Identical on every
/// conforming standard library.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return radius * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Worker count: QMOMENT_THREADS when set and positive, else the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("QMOMENT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(chunk) for chunk = 0..n_chunks-1 on up to worker_count()
/// threads. Chunks are assigned statically, so results written per chunk do
/// not depend on the thread count.
template <class Body>
void parallel_chunks(std::size_t n_chunks, Body body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n_chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) body(c);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t c = w; c < n_chunks; c += workers) body(c);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace qmoment

#endif  // QMOMENT_RNG_HPP
