#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "relnet/errors.hpp"
#include "relnet/rng.hpp"
#include "relnet/topology.hpp"

namespace relnet {

/// Parameters of the cut-off entanglement-generation protocol.
struct ProtocolParams {
  double p_gen = 0.01;                   // per-step link generation probability
  double t_coh_seconds = 1.0;            // memory coherence time
  double step_seconds = 2.0 / 3.0 * 1e-3;  // duration of one protocol step
  long t_cut = 1500;                     // cut-off in steps

  void validate() const {
    if (!(p_gen > 0.0 && p_gen <= 1.0))
      throw std::invalid_argument("ProtocolParams: p_gen must lie in (0,1]");
    if (!(t_coh_seconds > 0.0))
      throw std::invalid_argument("ProtocolParams: t_coh_seconds must be > 0");
    if (!(step_seconds > 0.0))
      throw std::invalid_argument("ProtocolParams: step_seconds must be > 0");
    if (t_cut < 1) throw std::invalid_argument("ProtocolParams: t_cut must be >= 1");
  }
};

/// Werner state: mixture of a perfect Bell pair (weight w) with the
/// maximally mixed state.
struct WernerState {
  double visibility = 1.0;

  void validate() const {
    if (!(visibility >= 0.0 && visibility <= 1.0))
      throw std::invalid_argument("WernerState: visibility must lie in [0,1]");
  }

  double fidelity() const { return (1.0 + 3.0 * visibility) / 4.0; }
};

/// Waiting time of one multiplexed segment: the first step in which any
/// of its n parallel connections generates a link. The minimum of n
/// geometrics is itself geometric with success 1 - (1-p_gen)^n.
inline long sample_segment_waiting_time(int multiplicity, double p_gen, Rng& rng) {
  if (multiplicity < 1)
    throw std::invalid_argument("sample_segment_waiting_time: multiplicity must be >= 1");
  if (!(p_gen > 0.0 && p_gen <= 1.0))
    throw std::invalid_argument("sample_segment_waiting_time: p_gen must lie in (0,1]");
  double success = -std::expm1(multiplicity * std::log1p(-p_gen));
  return sample_geometric(success, rng);
}

/// Entanglement swapping of Werner states is multiplicative in the
/// visibility (Bell measurements are treated as perfect).
inline double swap_visibility(std::span<const double> visibilities) {
  double w = 1.0;
  for (double v : visibilities) {
    WernerState{v}.validate();
    w *= v;
  }
  return w;
}

/// BB84 secret-key fraction of a Werner state with visibility w.
inline double secret_key_fraction(double w) {
  WernerState{w}.validate();
  double acc = 1.0;
  if (w < 1.0) acc += (1.0 - w) * std::log2((1.0 - w) / 2.0);
  acc += (1.0 + w) * std::log2((1.0 + w) / 2.0);
  return std::max(0.0, acc);
}

/// Completion of one unconditional generation attempt: the step at which
/// the end-to-end state exists and its visibility at that moment.
struct CompletionSample {
  long steps = 0;
  double visibility = 1.0;
};

struct AttemptOutcome {
  bool success = false;
  long completion_step = 0;
  double visibility = 0.0;
};

/// End-to-end visibility when the segments of the established path were
/// completed at `segment_steps` and swapping happens at the final step:
/// every link decoheres from its creation until the attempt completes.
inline CompletionSample combine_segment_times(std::span<const long> segment_steps,
                                              const ProtocolParams& params) {
  if (segment_steps.empty())
    throw std::invalid_argument("combine_segment_times: no segments");
  long completion = 0;
  for (long t : segment_steps) completion = std::max(completion, t);
  double log_w = 0.0;
  for (long t : segment_steps)
    log_w -= static_cast<double>(completion - t) * params.step_seconds / params.t_coh_seconds;
  return {completion, std::exp(log_w)};
}

/// One attempt on a chain configuration: per-edge waiting times are the
/// minimum over that edge's working connections, the chain completes at
/// the slowest edge.
inline CompletionSample sample_chain_completion(std::span<const int> multiplicities,
                                                const ProtocolParams& params, Rng& rng) {
  params.validate();
  if (multiplicities.empty())
    throw std::invalid_argument("sample_chain_completion: no edges");
  std::vector<long> times;
  times.reserve(multiplicities.size());
  for (int n : multiplicities)
    times.push_back(sample_segment_waiting_time(n, params.p_gen, rng));
  return combine_segment_times(times, params);
}

/// One attempt on a network configuration: each working edge carries a
/// single link generator; the attempt completes when some available path
/// has all of its links, and the end-to-end state is swapped along that
/// path. Ties between simultaneously completing paths go to the path
/// with fewest hops, then to declaration order. Links on unused paths
/// are ignored.
inline CompletionSample sample_network_completion(const NetworkConfiguration& config,
                                                  const ProtocolParams& params, Rng& rng) {
  params.validate();
  if (config.paths.empty())
    throw std::invalid_argument("sample_network_completion: configuration has no paths");
  std::vector<long> edge_time(config.edges.size());
  for (std::size_t i = 0; i < config.edges.size(); ++i)
    edge_time[i] = sample_segment_waiting_time(1, params.p_gen, rng);

  auto position = [&](const std::string& id) {
    for (std::size_t i = 0; i < config.edges.size(); ++i)
      if (config.edges[i] == id) return i;
    throw std::invalid_argument("sample_network_completion: path edge '" + id +
                                "' missing from configuration edge set");
  };

  long best_completion = 0;
  std::size_t best_path = 0;
  bool have = false;
  for (std::size_t k = 0; k < config.paths.size(); ++k) {
    long completion = 0;
    for (const auto& id : config.paths[k])
      completion = std::max(completion, edge_time[position(id)]);
    bool better = !have || completion < best_completion ||
                  (completion == best_completion &&
                   config.paths[k].size() < config.paths[best_path].size());
    if (better) {
      best_completion = completion;
      best_path = k;
      have = true;
    }
  }
  std::vector<long> times;
  for (const auto& id : config.paths[best_path]) times.push_back(edge_time[position(id)]);
  return combine_segment_times(times, params);
}

inline AttemptOutcome simulate_attempt(std::span<const int> chain_multiplicities,
                                       const ProtocolParams& params, Rng& rng) {
  CompletionSample s = sample_chain_completion(chain_multiplicities, params, rng);
  if (s.steps <= params.t_cut) return {true, s.steps, s.visibility};
  return {false, 0, 0.0};
}

inline AttemptOutcome simulate_attempt(const NetworkConfiguration& config,
                                       const ProtocolParams& params, Rng& rng) {
  CompletionSample s = sample_network_completion(config, params, rng);
  if (s.steps <= params.t_cut) return {true, s.steps, s.visibility};
  return {false, 0, 0.0};
}

/// Cut-off statistics of the restart protocol, from the empirical
/// distribution of unconditional completion samples: an attempt succeeds
/// if it completes within t_cut, otherwise all links are erased and the
/// attempt restarts. The total waiting time is
/// t_cut (1-p_cut)/p_cut + E[T | T <= t_cut], and the delivered
/// visibility is that of the final, successful attempt.
struct CutoffStatistics {
  double p_cut = 0.0;
  double mean_steps = 0.0;
  double mean_seconds = 0.0;
  double mean_visibility = 0.0;
  std::uint64_t successes = 0;
  std::uint64_t samples = 0;

  bool attainable() const { return successes > 0; }
};

inline CutoffStatistics cutoff_statistics(std::span<const CompletionSample> samples,
                                          long t_cut, const ProtocolParams& params) {
  if (samples.empty()) throw std::invalid_argument("cutoff_statistics: no samples");
  if (t_cut < 1) throw std::invalid_argument("cutoff_statistics: t_cut must be >= 1");
  CutoffStatistics out;
  out.samples = samples.size();
  double sum_t = 0.0, sum_w = 0.0;
  for (const auto& s : samples) {
    if (s.steps <= t_cut) {
      ++out.successes;
      sum_t += static_cast<double>(s.steps);
      sum_w += s.visibility;
    }
  }
  if (out.successes == 0) return out;  // marked unattainable, rate will be 0
  double n = static_cast<double>(out.samples);
  out.p_cut = static_cast<double>(out.successes) / n;
  double mean_conditional = sum_t / static_cast<double>(out.successes);
  out.mean_steps =
      static_cast<double>(t_cut) * (1.0 - out.p_cut) / out.p_cut + mean_conditional;
  out.mean_seconds = out.mean_steps * params.step_seconds;
  out.mean_visibility = sum_w / static_cast<double>(out.successes);
  return out;
}

/// Secret-key rate in bits per second: the key fraction at the mean
/// delivered visibility over the mean waiting time.
inline double key_rate(double mean_visibility, double mean_seconds) {
  if (!(mean_seconds > 0.0)) throw std::invalid_argument("key_rate: mean_seconds must be > 0");
  return secret_key_fraction(mean_visibility) / mean_seconds;
}

struct KeyRatePoint {
  long t_cut = 0;
  double p_cut = 0.0;
  double mean_steps = 0.0;
  double mean_seconds = 0.0;
  double mean_visibility = 0.0;
  double secret_fraction = 0.0;
  double rate_bits_per_second = 0.0;
  std::uint64_t samples = 0;
};

/// The rate is r(<W>)/<T> by default; averaging the per-sample fraction
/// instead is available for sensitivity checks.
enum class RateDefinition { FractionOfMeanVisibility, MeanOfSampleFractions };

using CompletionSampler = std::function<CompletionSample(Rng&)>;

namespace detail {

struct GridAccumulator {
  std::vector<std::uint64_t> count;
  std::vector<double> sum_steps;
  std::vector<double> sum_visibility;

  explicit GridAccumulator(std::size_t n) : count(n, 0), sum_steps(n, 0.0), sum_visibility(n, 0.0) {}

  void add(const GridAccumulator& other) {
    for (std::size_t i = 0; i < count.size(); ++i) {
      count[i] += other.count[i];
      sum_steps[i] += other.sum_steps[i];
      sum_visibility[i] += other.sum_visibility[i];
    }
  }
};

}  // namespace detail

inline constexpr std::uint64_t kSamplesPerShard = 8192;

/// Key-rate curve over a grid of cut-off times. One batch of
/// unconditional completion samples serves every grid point (an attempt
/// successful at T <= t_cut contributes the same T and visibility for
/// every such t_cut). Sampling is sharded with derived per-shard seeds;
/// shard results merge in index order, so the outcome is identical for
/// any worker count.
inline std::vector<KeyRatePoint> simulate_key_rate_curve(
    const CompletionSampler& sampler, const ProtocolParams& params,
    const std::vector<long>& t_cut_grid, std::uint64_t samples, std::uint64_t seed,
    std::uint64_t stream_id = 0, int threads = 1) {
  params.validate();
  if (t_cut_grid.empty()) throw std::invalid_argument("simulate_key_rate_curve: empty grid");
  if (!std::is_sorted(t_cut_grid.begin(), t_cut_grid.end()))
    throw std::invalid_argument("simulate_key_rate_curve: grid must be sorted");
  if (samples == 0) throw std::invalid_argument("simulate_key_rate_curve: samples must be > 0");

  std::size_t n_grid = t_cut_grid.size();
  std::uint64_t n_shards = (samples + kSamplesPerShard - 1) / kSamplesPerShard;
  std::vector<detail::GridAccumulator> shard_acc(n_shards, detail::GridAccumulator(n_grid));

  std::atomic<std::uint64_t> next{0};
  auto worker = [&]() {
    for (std::uint64_t shard = next.fetch_add(1); shard < n_shards;
         shard = next.fetch_add(1)) {
      Rng rng(derive_seed(seed, stream_id, shard));
      std::uint64_t begin = shard * kSamplesPerShard;
      std::uint64_t end = std::min(begin + kSamplesPerShard, samples);
      auto& acc = shard_acc[shard];
      for (std::uint64_t i = begin; i < end; ++i) {
        CompletionSample s = sampler(rng);
        auto it = std::lower_bound(t_cut_grid.begin(), t_cut_grid.end(), s.steps);
        if (it == t_cut_grid.end()) continue;  // completes beyond every cut-off
        std::size_t bucket = static_cast<std::size_t>(it - t_cut_grid.begin());
        acc.count[bucket] += 1;
        acc.sum_steps[bucket] += static_cast<double>(s.steps);
        acc.sum_visibility[bucket] += s.visibility;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    int n_workers = std::min<int>(threads, static_cast<int>(n_shards));
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  detail::GridAccumulator total(n_grid);
  for (const auto& acc : shard_acc) total.add(acc);

  std::vector<KeyRatePoint> curve;
  curve.reserve(n_grid);
  std::uint64_t cum_count = 0;
  double cum_steps = 0.0, cum_vis = 0.0;
  for (std::size_t i = 0; i < n_grid; ++i) {
    cum_count += total.count[i];
    cum_steps += total.sum_steps[i];
    cum_vis += total.sum_visibility[i];
    KeyRatePoint point;
    point.t_cut = t_cut_grid[i];
    point.samples = samples;
    if (cum_count > 0) {
      double n = static_cast<double>(samples);
      point.p_cut = static_cast<double>(cum_count) / n;
      point.mean_steps = static_cast<double>(point.t_cut) * (1.0 - point.p_cut) / point.p_cut +
                         cum_steps / static_cast<double>(cum_count);
      point.mean_seconds = point.mean_steps * params.step_seconds;
      point.mean_visibility = cum_vis / static_cast<double>(cum_count);
      point.secret_fraction = secret_key_fraction(point.mean_visibility);
      point.rate_bits_per_second = point.secret_fraction / point.mean_seconds;
    }
    curve.push_back(point);
  }
  return curve;
}

/// Sampler closures with the per-sample bookkeeping precomputed.
inline CompletionSampler make_chain_sampler(std::vector<int> multiplicities,
                                            ProtocolParams params) {
  params.validate();
  if (multiplicities.empty())
    throw std::invalid_argument("make_chain_sampler: no edges");
  return [multiplicities = std::move(multiplicities), params](Rng& rng) {
    return sample_chain_completion(multiplicities, params, rng);
  };
}

inline CompletionSampler make_network_sampler(const NetworkConfiguration& config,
                                              ProtocolParams params) {
  params.validate();
  if (config.paths.empty())
    throw std::invalid_argument("make_network_sampler: configuration has no paths");
  std::vector<std::vector<std::size_t>> path_positions;
  for (const auto& path : config.paths) {
    std::vector<std::size_t> positions;
    for (const auto& id : path) {
      auto it = std::find(config.edges.begin(), config.edges.end(), id);
      if (it == config.edges.end())
        throw std::invalid_argument("make_network_sampler: path edge '" + id +
                                    "' missing from configuration edge set");
      positions.push_back(static_cast<std::size_t>(it - config.edges.begin()));
    }
    path_positions.push_back(std::move(positions));
  }
  std::size_t n_edges = config.edges.size();
  return [path_positions = std::move(path_positions), n_edges, params](Rng& rng) {
    std::vector<long> edge_time(n_edges);
    for (auto& t : edge_time) t = sample_segment_waiting_time(1, params.p_gen, rng);
    long best_completion = 0;
    std::size_t best = 0;
    bool have = false;
    for (std::size_t k = 0; k < path_positions.size(); ++k) {
      long completion = 0;
      for (std::size_t pos : path_positions[k])
        completion = std::max(completion, edge_time[pos]);
      bool better = !have || completion < best_completion ||
                    (completion == best_completion &&
                     path_positions[k].size() < path_positions[best].size());
      if (better) {
        best_completion = completion;
        best = k;
        have = true;
      }
    }
    std::vector<long> times;
    times.reserve(path_positions[best].size());
    for (std::size_t pos : path_positions[best]) times.push_back(edge_time[pos]);
    return combine_segment_times(times, params);
  };
}

/// Weighted sum of per-configuration rates; the weights are the
/// configuration probabilities of the chosen weighting mode, so a
/// nonfunctional system contributes zero rate.
inline std::vector<double> average_key_rate(
    const std::vector<std::vector<KeyRatePoint>>& curves, std::span<const double> weights) {
  if (curves.size() != weights.size())
    throw std::invalid_argument("average_key_rate: one weight per curve required");
  if (curves.empty()) throw std::invalid_argument("average_key_rate: no curves");
  std::size_t n = curves.front().size();
  for (const auto& c : curves)
    if (c.size() != n)
      throw std::invalid_argument("average_key_rate: curves evaluated on different grids");
  std::vector<double> avg(n, 0.0);
  for (std::size_t k = 0; k < curves.size(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      avg[i] += weights[k] * curves[k][i].rate_bits_per_second;
  return avg;
}

/// Cut-off with the highest rate on the evaluated grid; ties break
/// toward the smaller cut-off.
inline long optimize_cutoff(std::span<const KeyRatePoint> curve) {
  if (curve.empty()) throw std::invalid_argument("optimize_cutoff: empty curve");
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i].rate_bits_per_second > curve[best].rate_bits_per_second) best = i;
  return curve[best].t_cut;
}

}  // namespace relnet
