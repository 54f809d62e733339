#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "relnet/errors.hpp"
#include "relnet/math.hpp"

namespace relnet {

/// Exponential failure law of a single physical connection: constant
/// hazard `rate`, survival exp(-rate * t).
struct ConnectionLaw {
  double rate = 1.0;

  void validate() const {
    if (!(rate >= 0.0)) throw std::invalid_argument("ConnectionLaw: rate must be >= 0");
  }
};

/// Distribution of the number of connections that work at t = 0.
/// Either all of them (perfect start), each independently with
/// probability p (binomial), or an explicit table q_0..q_N.
class InitialDistribution {
 public:
  enum class Kind { Perfect, Binomial, Explicit };

  static InitialDistribution perfect() { return InitialDistribution(Kind::Perfect, 1.0, {}); }

  static InitialDistribution binomial(double p) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("InitialDistribution: binomial p must lie in [0,1]");
    return InitialDistribution(Kind::Binomial, p, {});
  }

  static InitialDistribution explicit_weights(std::vector<double> q) {
    double sum = 0.0;
    for (double v : q) {
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("InitialDistribution: weights must lie in [0,1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("InitialDistribution: weights sum to " +
                                  std::to_string(sum) + ", expected 1");
    return InitialDistribution(Kind::Explicit, 0.0, std::move(q));
  }

  Kind kind() const { return kind_; }
  double binomial_p() const { return p_; }

  /// q_n for a block of multiplicity N.
  double weight(int n, int N) const {
    switch (kind_) {
      case Kind::Perfect:
        return n == N ? 1.0 : 0.0;
      case Kind::Binomial:
        return binomial_pmf(N, n, p_);
      case Kind::Explicit:
        if (static_cast<int>(q_.size()) != N + 1)
          throw std::invalid_argument("InitialDistribution: explicit table has " +
                                      std::to_string(q_.size()) + " entries, block needs " +
                                      std::to_string(N + 1));
        return q_[static_cast<std::size_t>(n)];
    }
    return 0.0;
  }

 private:
  InitialDistribution(Kind kind, double p, std::vector<double> q)
      : kind_(kind), p_(p), q_(std::move(q)) {}

  Kind kind_;
  double p_;
  std::vector<double> q_;
};

/// One multiplexed edge: N parallel connections, functional while at
/// least `flux` of them work.
struct BlockModel {
  int multiplicity = 1;
  int flux = 1;
  ConnectionLaw law;
  InitialDistribution init = InitialDistribution::perfect();

  void validate() const {
    law.validate();
    if (multiplicity < 1) throw std::invalid_argument("BlockModel: multiplicity must be >= 1");
    if (flux < 1 || flux > multiplicity)
      throw std::invalid_argument("BlockModel: flux must satisfy 1 <= flux <= multiplicity");
  }
};

struct ChainModel {
  std::vector<BlockModel> blocks;

  void validate() const {
    if (blocks.empty()) throw std::invalid_argument("ChainModel: at least one block required");
    for (const auto& b : blocks) b.validate();
  }

  static ChainModel uniform(int edges, BlockModel block) {
    ChainModel chain;
    chain.blocks.assign(static_cast<std::size_t>(edges), std::move(block));
    chain.validate();
    return chain;
  }
};

inline double connection_survival(ConnectionLaw law, double t) {
  law.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("connection_survival: t must be >= 0");
  return std::exp(-law.rate * t);
}

/// Survival of a perfect-start block: probability that at most N - flux
/// of the N connections have failed by time t.
inline double block_survival_perfect(int N, int flux, ConnectionLaw law, double t) {
  BlockModel{N, flux, law, InitialDistribution::perfect()}.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("block_survival_perfect: t must be >= 0");
  double alpha = std::exp(-law.rate * t);
  if (flux == 1) {
    // 1 - (1-alpha)^N, evaluated to keep precision for alpha near 0 or 1
    return -std::expm1(N * std::log1p(-alpha));
  }
  double sum = 0.0;
  for (int i = 0; i <= N - flux; ++i) sum += binomial_pmf(N, i, 1.0 - alpha);
  return std::min(sum, 1.0);
}

/// Hazard of a perfect-start block. Diverges once survival underflows.
inline double block_failure_rate_perfect(int N, int flux, ConnectionLaw law, double t) {
  BlockModel{N, flux, law, InitialDistribution::perfect()}.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("block_failure_rate_perfect: t must be >= 0");
  double kt = law.rate * t;
  // x = alpha^-1 - 1 = e^{kt} - 1. Work with whichever of x, 1/x is small.
  double x = std::expm1(kt);
  if (!std::isfinite(x) || block_survival_perfect(N, flux, law, t) <= 0.0)
    throw numerical_error("block_failure_rate_perfect: survival underflowed to 0");
  int m = N - flux;
  if (x <= 1.0) {
    double num = law.rate * flux * binomial(N, flux) * std::pow(x, m);
    double den = 0.0;
    for (int i = 0; i <= m; ++i) den += binomial(N, i) * std::pow(x, i);
    return num / den;
  }
  // divide through by x^m; dominant denominator term is then O(1)
  double y = 1.0 / x;
  double num = law.rate * flux * binomial(N, flux);
  double den = 0.0;
  for (int i = 0; i <= m; ++i) den += binomial(N, i) * std::pow(y, m - i);
  return num / den;
}

/// Survival of a block whose initial working count n is distributed
/// according to the block's initial distribution: sum over n >= flux of
/// q_n * S_perfect(n).
inline double block_survival(const BlockModel& block, double t) {
  block.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("block_survival: t must be >= 0");
  if (block.init.kind() == InitialDistribution::Kind::Perfect)
    return block_survival_perfect(block.multiplicity, block.flux, block.law, t);
  if (block.init.kind() == InitialDistribution::Kind::Binomial && block.flux == 1) {
    // sum_n C(N,n) p^n (1-p)^(N-n) [1 - (1-alpha)^n] = 1 - (1 - p*alpha)^N
    double p = block.init.binomial_p();
    double alpha = std::exp(-block.law.rate * t);
    return -std::expm1(block.multiplicity * std::log1p(-p * alpha));
  }
  double sum = 0.0;
  for (int n = block.flux; n <= block.multiplicity; ++n) {
    double q = block.init.weight(n, block.multiplicity);
    if (q > 0.0) sum += q * block_survival_perfect(n, block.flux, block.law, t);
  }
  return std::min(sum, 1.0);
}

/// Hazard of a probabilistic-start block: survival-weighted mixture of the
/// per-count hazards, i.e. the conditional failure rate given survival.
inline double block_failure_rate(const BlockModel& block, double t) {
  block.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("block_failure_rate: t must be >= 0");
  if (block.init.kind() == InitialDistribution::Kind::Perfect)
    return block_failure_rate_perfect(block.multiplicity, block.flux, block.law, t);
  if (block.init.kind() == InitialDistribution::Kind::Binomial && block.flux == 1) {
    int N = block.multiplicity;
    double p = block.init.binomial_p();
    double k = block.law.rate;
    double alpha = std::exp(-k * t);
    double g = 1.0 - p * alpha;  // (1-g^N)' = -N g' g^{N-1}
    double survival = -std::expm1(N * std::log1p(-p * alpha));
    if (survival <= 0.0)
      throw numerical_error("block_failure_rate: survival underflowed to 0");
    return N * p * k * alpha * std::pow(g, N - 1) / survival;
  }
  double survival = 0.0;
  double density = 0.0;
  for (int n = block.flux; n <= block.multiplicity; ++n) {
    double q = block.init.weight(n, block.multiplicity);
    if (q <= 0.0) continue;
    double s = block_survival_perfect(n, block.flux, block.law, t);
    survival += q * s;
    density += q * s * block_failure_rate_perfect(n, block.flux, block.law, t);
  }
  if (survival <= 0.0) throw numerical_error("block_failure_rate: survival underflowed to 0");
  return density / survival;
}

inline double chain_survival(const ChainModel& chain, double t) {
  chain.validate();
  double prod = 1.0;
  for (const auto& b : chain.blocks) prod *= block_survival(b, t);
  return prod;
}

inline double chain_failure_rate(const ChainModel& chain, double t) {
  chain.validate();
  double sum = 0.0;
  for (const auto& b : chain.blocks) sum += block_failure_rate(b, t);
  return sum;
}

/// Mean time to failure, integral of the survival function.
inline double mean_time_to_failure(const std::function<double(double)>& survival,
                                   SurvivalIntegralOptions opt = {}) {
  return integrate_survival(survival, opt);
}

inline double mean_time_to_failure(const ChainModel& chain,
                                   SurvivalIntegralOptions opt = {}) {
  chain.validate();
  double max_rate = 0.0;
  for (const auto& b : chain.blocks) max_rate = std::max(max_rate, b.law.rate);
  if (max_rate > 0.0) opt.initial_span = 1.0 / max_rate;
  return integrate_survival([&chain](double t) { return chain_survival(chain, t); }, opt);
}

/// Probability the chain is functional at t = 0.
inline double initial_working_probability(const ChainModel& chain) {
  chain.validate();
  double prod = 1.0;
  for (const auto& b : chain.blocks) {
    double s = 0.0;
    for (int n = b.flux; n <= b.multiplicity; ++n) s += b.init.weight(n, b.multiplicity);
    prod *= std::min(s, 1.0);
  }
  return prod;
}

enum class MatchCriterion { MeanTimeToFailure, InitialWorking, Both };

struct MatchOptions {
  double p_threshold = 0.9;      // required initial working probability
  int max_multiplicity = 10000;  // search bound
};

namespace detail {

inline ChainModel binomial_chain_like(const ChainModel& reference, int multiplicity,
                                      double p, double rate) {
  ChainModel candidate;
  candidate.blocks.reserve(reference.blocks.size());
  for (const auto& ref : reference.blocks) {
    candidate.blocks.push_back(BlockModel{multiplicity, ref.flux, ConnectionLaw{rate},
                                          InitialDistribution::binomial(p)});
  }
  return candidate;
}

}  // namespace detail

/// Smallest multiplicity N' such that a chain of binomial(p)-start blocks
/// with failure rate `rate` meets the selected criteria of the perfect
/// reference chain. Both criteria are monotone in N' (extra parallel
/// connections stochastically dominate), so a gallop-and-bisect search
/// returns the same minimum as a linear scan.
inline int match_multiplicity(const ChainModel& reference, double p, double rate,
                              MatchCriterion criterion, MatchOptions opt = {}) {
  reference.validate();
  for (const auto& b : reference.blocks) {
    if (b.init.kind() != InitialDistribution::Kind::Perfect)
      throw std::invalid_argument("match_multiplicity: reference chain must use perfect-start blocks");
  }
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("match_multiplicity: p must lie in (0,1]");

  double reference_mttf = 0.0;
  if (criterion != MatchCriterion::InitialWorking)
    reference_mttf = mean_time_to_failure(reference);

  auto meets = [&](int candidate_multiplicity) {
    ChainModel candidate =
        detail::binomial_chain_like(reference, candidate_multiplicity, p, rate);
    if (criterion != MatchCriterion::MeanTimeToFailure &&
        initial_working_probability(candidate) < opt.p_threshold)
      return false;
    if (criterion != MatchCriterion::InitialWorking &&
        mean_time_to_failure(candidate) < reference_mttf)
      return false;
    return true;
  };

  int lo = 1;
  int hi = 1;
  while (!meets(hi)) {
    lo = hi + 1;
    hi *= 2;
    if (hi > opt.max_multiplicity) {
      if (lo > opt.max_multiplicity || !meets(opt.max_multiplicity))
        throw numerical_error("match_multiplicity: no multiplicity <= " +
                              std::to_string(opt.max_multiplicity) +
                              " satisfies the criteria");
      hi = opt.max_multiplicity;
      break;
    }
  }
  while (lo < hi) {
    int mid = lo + (hi - lo) / 2;
    if (meets(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

}  // namespace relnet
