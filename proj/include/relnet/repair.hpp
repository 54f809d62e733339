#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "relnet/errors.hpp"
#include "relnet/math.hpp"
#include "relnet/topology.hpp"

namespace relnet {

/// Break-and-repair renewal model of a single connection: it breaks in a
/// time step with probability p_down, stays broken for exactly `tau`
/// steps, and may break again immediately after the repair completes.
struct RepairSpec {
  double p_down = 0.1;
  int tau = 1;

  void validate() const {
    if (!(p_down > 0.0 && p_down <= 1.0))
      throw std::invalid_argument("RepairSpec: p_down must lie in (0,1]");
    if (tau < 1) throw std::invalid_argument("RepairSpec: tau must be >= 1");
  }

  /// Average renewal cycle length in steps: 1/p_down - 1 functional plus
  /// tau broken.
  double mean_cycle() const { return 1.0 / p_down - 1.0 + tau; }
};

/// Probability that the connection is broken in an arbitrarily chosen
/// time step of the stationary process.
inline double stationary_broken_probability(const RepairSpec& spec) {
  spec.validate();
  return spec.tau / spec.mean_cycle();
}

/// m(t): probability of being broken in t arbitrarily chosen consecutive
/// steps, valid for 1 <= t <= tau (longer windows need several repair
/// cycles and are only accessible through the Monte Carlo estimator).
inline double consecutive_broken_probability(const RepairSpec& spec, int t) {
  spec.validate();
  if (t < 1 || t > spec.tau)
    throw std::invalid_argument(
        "consecutive_broken_probability: t must lie in [1, tau]; longer broken runs "
        "are only available through the Monte Carlo estimator");
  return stationary_broken_probability(spec) *
         (1.0 - (t - 1) * (1.0 - spec.p_down) / spec.tau);
}

/// Probability of the broken / functional / broken pattern over three
/// consecutive steps: the window must open on the last broken step of a
/// repair, survive one step and break again.
inline double broken_functional_broken_probability(const RepairSpec& spec) {
  spec.validate();
  return (1.0 - spec.p_down) * spec.p_down / spec.mean_cycle();
}

namespace detail {

inline void validate_pattern(std::string_view pattern) {
  if (pattern.empty()) throw std::invalid_argument("temporal pattern must be nonempty");
  for (char c : pattern)
    if (c != '+' && c != '-' && c != '*')
      throw std::invalid_argument("temporal pattern may only contain '+', '-', '*'");
}

/// Single-connection probability of a pattern over {-,*} (no '+'),
/// length <= 3. Leading and trailing wildcards marginalize away.
inline double connection_minus_star_probability(const RepairSpec& spec,
                                                std::string_view pattern) {
  std::size_t lo = pattern.find_first_not_of('*');
  if (lo == std::string_view::npos) return 1.0;
  std::size_t hi = pattern.find_last_not_of('*');
  std::string_view core = pattern.substr(lo, hi - lo + 1);
  if (core == "-") return consecutive_broken_probability(spec, 1);
  if (core == "--") return consecutive_broken_probability(spec, 2);
  if (core == "---") return consecutive_broken_probability(spec, 3);
  if (core == "-*-")
    return consecutive_broken_probability(spec, 3) +
           broken_functional_broken_probability(spec);
  throw std::invalid_argument("unsupported single-connection pattern core '" +
                              std::string(core) + "'");
}

}  // namespace detail

/// Probability that a block of N connections (functional while at least
/// one connection works) shows the given pattern over {+,-,*} in up to
/// three consecutive steps. The block is broken at a set of steps iff all
/// N connections are broken throughout, so each {-,*} pattern is the
/// single-connection probability to the power N; '+' entries resolve by
/// the marginal identities p^{..+..} = p^{..*..} - p^{..-..}.
inline double block_pattern_probability(const RepairSpec& spec, int N,
                                        std::string_view pattern) {
  spec.validate();
  if (N < 1) throw std::invalid_argument("block_pattern_probability: N must be >= 1");
  detail::validate_pattern(pattern);
  if (pattern.size() > 3)
    throw std::invalid_argument(
        "block_pattern_probability: analytic patterns are limited to 3 steps; use the "
        "Monte Carlo estimator for longer windows");
  std::vector<std::size_t> plus_positions;
  for (std::size_t i = 0; i < pattern.size(); ++i)
    if (pattern[i] == '+') plus_positions.push_back(i);
  double total = 0.0;
  std::string work(pattern);
  for (std::uint32_t bits = 0; bits < (1u << plus_positions.size()); ++bits) {
    int sign = 1;
    for (std::size_t b = 0; b < plus_positions.size(); ++b) {
      if (bits & (1u << b)) {
        work[plus_positions[b]] = '-';
        sign = -sign;
      } else {
        work[plus_positions[b]] = '*';
      }
    }
    total += sign * std::pow(detail::connection_minus_star_probability(spec, work),
                             static_cast<double>(N));
  }
  return total;
}

/// A multiplexed system under the repair model: every edge of the
/// topology is a block of `multiplicity` connections with the same
/// repair law; nodes do not fail.
struct RepairSystem {
  Topology topology;
  RepairSpec spec;
  int multiplicity = 1;

  void validate() const {
    topology.validate();
    spec.validate();
    if (multiplicity < 1) throw std::invalid_argument("RepairSystem: multiplicity must be >= 1");
  }

  static RepairSystem chain(int edges, int multiplicity, RepairSpec spec) {
    return RepairSystem{Topology::series_chain(edges), spec, multiplicity};
  }
};

/// Probability that the system shows the given temporal pattern (up to
/// three consecutive steps). Builds the product of time-indexed
/// end-to-end indicators, expands it, and evaluates every monomial as a
/// product of per-edge block pattern probabilities — the same edge at
/// different time steps is correlated and is never factorized.
inline double system_pattern_probability(const RepairSystem& system,
                                         std::string_view pattern) {
  system.validate();
  detail::validate_pattern(pattern);
  if (pattern.size() > 3)
    throw std::invalid_argument(
        "system_pattern_probability: analytic patterns are limited to 3 steps; use the "
        "Monte Carlo estimator for longer windows");

  IndicatorPolynomial product = IndicatorPolynomial::one();
  for (std::size_t step = 0; step < pattern.size(); ++step) {
    if (pattern[step] == '*') continue;
    IndicatorPolynomial x = build_indicator(system.topology, static_cast<int>(step));
    product = product * (pattern[step] == '+' ? x : x.one_minus());
  }

  std::map<std::string, double> block_cache;
  auto block_prob = [&](const std::string& block_pattern) {
    auto it = block_cache.find(block_pattern);
    if (it != block_cache.end()) return it->second;
    double value = block_pattern_probability(system.spec, system.multiplicity, block_pattern);
    block_cache.emplace(block_pattern, value);
    return value;
  };

  const auto& components = system.topology.components();
  double total = 0.0;
  for (const auto& term : product.terms()) {
    double prod = static_cast<double>(term.coeff);
    // vars are sorted by (component, time): walk groups
    std::size_t i = 0;
    while (i < term.vars.size() && prod != 0.0) {
      std::int32_t comp = term.vars[i].component;
      std::string pat(pattern.size(), '*');
      while (i < term.vars.size() && term.vars[i].component == comp) {
        pat[static_cast<std::size_t>(term.vars[i].time)] = '+';
        ++i;
      }
      if (components[static_cast<std::size_t>(comp)].kind == ComponentKind::Edge)
        prod *= block_prob(pat);
      // nodes never fail: their factor is 1
    }
    total += prod;
  }
  return total;
}

/// Stationary probability that a chain of M edges with multiplicity N is
/// functional at an arbitrary step.
inline double average_uptime(const RepairSpec& spec, int N, int M) {
  spec.validate();
  if (N < 1 || M < 1) throw std::invalid_argument("average_uptime: N and M must be >= 1");
  double broken = std::pow(stationary_broken_probability(spec), static_cast<double>(N));
  return std::pow(1.0 - broken, static_cast<double>(M));
}

/// Normalized temporal correlation Cor(t_a, t_b) of the binary system
/// state at two of three consecutive steps; (t_a,t_b) is (1,2) or (1,3).
inline double temporal_correlation(const RepairSystem& system, int t_a, int t_b) {
  if (t_a != 1 || (t_b != 2 && t_b != 3))
    throw std::invalid_argument("temporal_correlation: (t_a,t_b) must be (1,2) or (1,3)");
  std::string pat = "+**";
  pat[static_cast<std::size_t>(t_b - 1)] = '+';
  double joint = system_pattern_probability(system, pat);
  double mean = system_pattern_probability(system, "+**");
  double variance = mean * (1.0 - mean);
  if (variance <= 0.0)
    throw numerical_error("temporal_correlation: degenerate state (variance is zero)");
  return (joint - mean * mean) / variance;
}

/// Signed third-order joint cumulant of the system state at three
/// consecutive steps. Stationarity makes the three single-step means
/// equal; two-step joints enter through the matching patterns.
inline double joint_cumulant(const RepairSystem& system) {
  double p111 = system_pattern_probability(system, "+++");
  double p12 = system_pattern_probability(system, "++*");
  double p23 = system_pattern_probability(system, "*++");
  double p13 = system_pattern_probability(system, "+*+");
  double p1 = system_pattern_probability(system, "+**");
  return p111 - p1 * (p12 + p13 + p23) + 2.0 * p1 * p1 * p1;
}

/// Joint distribution of the system state at three consecutive steps.
/// Index layout: (s1 << 2) | (s2 << 1) | s3, where s = 1 means working.
struct JointDistribution3 {
  std::array<double, 8> p{};

  static constexpr std::size_t index(int s1, int s2, int s3) {
    return static_cast<std::size_t>((s1 << 2) | (s2 << 1) | s3);
  }

  double sum() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
  }

  /// Pairwise marginal over steps (a, b), a < b in {0,1,2}.
  std::array<double, 4> marginal(int a, int b) const {
    std::array<double, 4> m{};
    for (std::size_t x = 0; x < 8; ++x) {
      int bits[3] = {static_cast<int>((x >> 2) & 1), static_cast<int>((x >> 1) & 1),
                     static_cast<int>(x & 1)};
      m[static_cast<std::size_t>((bits[a] << 1) | bits[b])] += p[x];
    }
    return m;
  }
};

inline JointDistribution3 build_joint_distribution(const RepairSystem& system) {
  JointDistribution3 dist;
  for (int s1 = 0; s1 < 2; ++s1)
    for (int s2 = 0; s2 < 2; ++s2)
      for (int s3 = 0; s3 < 2; ++s3) {
        std::string pat{s1 ? '+' : '-', s2 ? '+' : '-', s3 ? '+' : '-'};
        dist.p[JointDistribution3::index(s1, s2, s3)] =
            system_pattern_probability(system, pat);
      }
  return dist;
}

struct IpfOptions {
  double marginal_tol = 1e-10;
  int max_sweeps = 100000;
};

/// Kullback-Leibler projection of P onto the closure of the pairwise
/// exponential family of three binary variables, via iterative
/// proportional fitting from the uniform distribution; returns the
/// divergence D(P || Q*) in bits. This is the genuine three-way
/// correlation left after all pairwise structure is explained.
inline double d3_multi_information(const JointDistribution3& P, IpfOptions opt = {}) {
  for (double v : P.p)
    if (v < 0.0)
      throw std::invalid_argument("d3_multi_information: negative probability entry");
  double total = P.sum();
  if (!(std::abs(total - 1.0) <= 1e-8))
    throw std::invalid_argument("d3_multi_information: distribution sums to " +
                                std::to_string(total) + ", expected 1");

  static constexpr int kPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  std::array<std::array<double, 4>, 3> target;
  for (int k = 0; k < 3; ++k) target[static_cast<std::size_t>(k)] = P.marginal(kPairs[k][0], kPairs[k][1]);

  JointDistribution3 Q;
  Q.p.fill(1.0 / 8.0);
  auto bit = [](std::size_t x, int pos) { return static_cast<int>((x >> (2 - pos)) & 1); };

  bool converged = false;
  for (int sweep = 0; sweep < opt.max_sweeps && !converged; ++sweep) {
    for (int k = 0; k < 3; ++k) {
      auto current = Q.marginal(kPairs[k][0], kPairs[k][1]);
      for (std::size_t x = 0; x < 8; ++x) {
        std::size_t cell = static_cast<std::size_t>((bit(x, kPairs[k][0]) << 1) |
                                                    bit(x, kPairs[k][1]));
        if (current[cell] > 0.0)
          Q.p[x] *= target[static_cast<std::size_t>(k)][cell] / current[cell];
        else
          Q.p[x] = 0.0;
      }
    }
    double deviation = 0.0;
    for (int k = 0; k < 3; ++k) {
      auto current = Q.marginal(kPairs[k][0], kPairs[k][1]);
      for (std::size_t c = 0; c < 4; ++c)
        deviation = std::max(deviation,
                             std::abs(current[c] - target[static_cast<std::size_t>(k)][c]));
    }
    converged = deviation < opt.marginal_tol;
  }
  if (!converged)
    throw numerical_error("d3_multi_information: marginal fitting did not converge");

  double divergence = 0.0;
  for (std::size_t x = 0; x < 8; ++x) {
    if (P.p[x] > 0.0) divergence += P.p[x] * std::log2(P.p[x] / Q.p[x]);
  }
  return std::max(divergence, 0.0);
}

enum class ChainWeighting { Unconditional, ConditionedFunctional, ConditionedBroken };

/// Probability of each chain configuration class (per-edge working
/// multiplicities at a step), optionally conditioned on the chain having
/// been functional or broken in the previous step. Weights include the
/// permutation counts, so they sum to the (conditional) probability that
/// the chain is functional.
inline std::vector<double> chain_configuration_weights(
    const RepairSpec& spec, int N, const std::vector<ChainConfiguration>& configurations,
    ChainWeighting mode) {
  spec.validate();
  if (N < 1) throw std::invalid_argument("chain_configuration_weights: N must be >= 1");
  double m1 = consecutive_broken_probability(spec, 1);
  double up = 1.0 - m1;
  double edge_up_prev = 1.0 - std::pow(m1, N);

  // per-connection joints over two consecutive steps
  double q_mm = 0.0, q_mp = 0.0;
  if (mode != ChainWeighting::Unconditional) {
    q_mm = consecutive_broken_probability(spec, 2);
    q_mp = m1 - q_mm;
  }

  auto unconditional_edge = [&](int j) { return binomial_pmf(N, j, up); };
  // Pr(j connections work now AND the edge worked in the previous step)
  auto joint_functional_edge = [&](int j) {
    double all_broken_prev = binomial(N, j) * std::pow(q_mp, j) * std::pow(q_mm, N - j);
    return unconditional_edge(j) - all_broken_prev;
  };

  std::vector<double> weights;
  weights.reserve(configurations.size());
  for (const auto& cfg : configurations) {
    double w_unc = 1.0, w_func = 1.0;
    for (int j : cfg.multiplicities) {
      w_unc *= unconditional_edge(j);
      if (mode != ChainWeighting::Unconditional) w_func *= joint_functional_edge(j);
    }
    double w = 0.0;
    switch (mode) {
      case ChainWeighting::Unconditional:
        w = w_unc;
        break;
      case ChainWeighting::ConditionedFunctional: {
        double chain_up_prev = std::pow(edge_up_prev, cfg.multiplicities.size());
        w = w_func / chain_up_prev;
        break;
      }
      case ChainWeighting::ConditionedBroken: {
        double chain_up_prev = std::pow(edge_up_prev, cfg.multiplicities.size());
        if (chain_up_prev >= 1.0)
          throw numerical_error(
              "chain_configuration_weights: chain is never broken, cannot condition");
        w = (w_unc - w_func) / (1.0 - chain_up_prev);
        break;
      }
    }
    weights.push_back(w * static_cast<double>(cfg.count));
  }
  return weights;
}

}  // namespace relnet
