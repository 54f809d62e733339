#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "relnet/repair.hpp"
#include "relnet/rng.hpp"
#include "relnet/topology.hpp"

namespace relnet {

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t windows = 0;
};

/// Monte Carlo estimator for temporal window statistics of a repair
/// system. Covers pattern lengths beyond the analytic three-step limit;
/// results are estimates with standard errors. Windows are sampled by
/// sliding over long stationary trajectories; the requested budget is
/// split across independently seeded trajectory shards whose means also
/// provide the standard error, so worker count never changes the result.
class RenewalWindowEstimator {
 public:
  explicit RenewalWindowEstimator(RepairSystem system) : system_(std::move(system)) {
    system_.validate();
    for (int e : system_.topology.edge_indices()) edges_.push_back(e);
    for (const auto& path : system_.topology.paths()) {
      std::vector<std::size_t> positions;
      for (int c : path) {
        for (std::size_t i = 0; i < edges_.size(); ++i)
          if (edges_[i] == c) positions.push_back(i);
      }
      paths_.push_back(std::move(positions));
    }
  }

  static constexpr int kShards = 50;

  McEstimate estimate_pattern(std::string_view pattern, std::uint64_t windows,
                              std::uint64_t seed, int threads = 1) const {
    detail::validate_pattern(pattern);
    if (windows < static_cast<std::uint64_t>(kShards))
      throw std::invalid_argument("estimate_pattern: need at least one window per shard");
    std::string pat(pattern);
    std::vector<double> shard_means(kShards, 0.0);
    std::uint64_t per_shard = windows / kShards;
    std::uint64_t remainder = windows % kShards;

    std::atomic<int> next{0};
    auto worker = [&]() {
      for (int shard = next.fetch_add(1); shard < kShards; shard = next.fetch_add(1)) {
        std::uint64_t n = per_shard + (static_cast<std::uint64_t>(shard) < remainder ? 1 : 0);
        shard_means[static_cast<std::size_t>(shard)] =
            run_shard(pat, n, derive_seed(seed, 0x7265706169724d43ULL, static_cast<std::uint64_t>(shard)));
      }
    };
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    double mean = 0.0;
    for (double v : shard_means) mean += v;
    mean /= kShards;
    double var = 0.0;
    for (double v : shard_means) var += (v - mean) * (v - mean);
    var /= (kShards - 1.0);
    return {mean, std::sqrt(var / kShards), windows};
  }

 private:
  double run_shard(const std::string& pattern, std::uint64_t windows,
                   std::uint64_t seed) const {
    Rng rng(seed);
    const double p_down = system_.spec.p_down;
    const int tau = system_.spec.tau;
    const std::size_t n_edges = edges_.size();
    const int N = system_.multiplicity;
    const std::size_t L = pattern.size();

    // remaining broken steps per connection; 0 = functional
    std::vector<int> remaining(n_edges * static_cast<std::size_t>(N), 0);
    std::vector<bool> edge_up(n_edges, true);
    std::vector<char> window(L, 0);
    std::size_t head = 0;

    const std::uint64_t burn_in =
        static_cast<std::uint64_t>(100.0 * (1.0 / p_down + tau));
    std::uint64_t matches = 0;
    std::uint64_t seen = 0;
    std::uint64_t total_steps = burn_in + windows + L - 1;

    for (std::uint64_t step = 0; step < total_steps; ++step) {
      for (std::size_t e = 0; e < n_edges; ++e) {
        bool up = false;
        for (int c = 0; c < N; ++c) {
          int& r = remaining[e * static_cast<std::size_t>(N) + static_cast<std::size_t>(c)];
          if (r >= 2) {
            --r;
          } else {
            r = (uniform01(rng) <= p_down) ? tau : 0;
          }
          up = up || (r == 0);
        }
        edge_up[e] = up;
      }
      bool functional = false;
      for (const auto& path : paths_) {
        bool ok = true;
        for (std::size_t pos : path) {
          if (!edge_up[pos]) {
            ok = false;
            break;
          }
        }
        if (ok) {
          functional = true;
          break;
        }
      }
      if (step < burn_in) continue;
      window[head] = functional ? 1 : 0;
      head = (head + 1) % L;
      if (step - burn_in + 1 < L) continue;
      if (seen == windows) break;
      bool match = true;
      for (std::size_t i = 0; i < L && match; ++i) {
        char want = pattern[i];
        char got = window[(head + i) % L];
        if (want == '+' && !got) match = false;
        if (want == '-' && got) match = false;
      }
      if (match) ++matches;
      ++seen;
    }
    return static_cast<double>(matches) / static_cast<double>(seen);
  }

  RepairSystem system_;
  std::vector<int> edges_;
  std::vector<std::vector<std::size_t>> paths_;
};

}  // namespace relnet
