#pragma once

#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "rng.hpp"

namespace gridflood {

struct MCEstimate {
  double estimate = 0;
  std::int64_t trials = 0;

  double half_width() const {  // 95% normal-approximation CI half-width
    if (trials <= 0) return 0;
    return 1.96 * std::sqrt(estimate * (1.0 - estimate) / static_cast<double>(trials));
  }

  double stderr_() const {
    if (trials <= 0) return 0;
    return std::sqrt(estimate * (1.0 - estimate) / static_cast<double>(trials));
  }
};

inline double z_score(const MCEstimate& a, const MCEstimate& b) {
  const double se = std::sqrt(a.stderr_() * a.stderr_() + b.stderr_() * b.stderr_());
  if (se == 0) return a.estimate == b.estimate ? 0.0 : 1e9;
  return (a.estimate - b.estimate) / se;
}

// Runs N Bernoulli trials split across workers. Trial k draws from the
// stream derived from (seed, tag, k), so the result is identical for any
// worker count or scheduling.
template <class TrialFn>
MCEstimate mc_binomial(std::int64_t n_trials, std::uint64_t seed, std::uint64_t tag, int workers,
                       TrialFn&& trial) {
  workers = std::max(1, workers);
  std::vector<std::int64_t> successes(static_cast<std::size_t>(workers), 0);
  std::vector<std::thread> pool;
  const std::int64_t chunk = (n_trials + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = w * chunk;
    const std::int64_t hi = std::min(n_trials, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, w, lo, hi] {
      std::int64_t hits = 0;
      for (std::int64_t k = lo; k < hi; ++k) {
        RngStream rng = RngStream::derive(seed, {kProbeTag, tag, static_cast<std::uint64_t>(k)});
        if (trial(rng)) ++hits;
      }
      successes[static_cast<std::size_t>(w)] = hits;
    });
  }
  for (auto& t : pool) t.join();
  std::int64_t total = 0;
  for (std::int64_t s : successes) total += s;
  return {n_trials > 0 ? static_cast<double>(total) / static_cast<double>(n_trials) : 0.0,
          n_trials};
}

}  // namespace gridflood
