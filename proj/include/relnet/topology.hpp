#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relnet/errors.hpp"
#include "relnet/math.hpp"

namespace relnet {

enum class ComponentKind { Edge, Node };

struct Component {
  std::string id;
  ComponentKind kind = ComponentKind::Edge;
};

/// Two-terminal topology given by its components and the explicit list of
/// end-to-end simple paths (each path names every component it uses,
/// edges and intermediate nodes alike). Symmetries are declared as
/// component permutations that map the path system onto itself.
class Topology {
 public:
  Topology() = default;

  Topology(std::string label, std::vector<Component> components,
           std::vector<std::vector<std::string>> paths,
           std::vector<std::map<std::string, std::string>> symmetries = {})
      : label_(std::move(label)) {
    for (auto& c : components) add_component(c);
    for (auto& p : paths) add_path(p);
    for (auto& s : symmetries) add_symmetry(s);
    validate();
  }

  const std::string& label() const { return label_; }
  const std::vector<Component>& components() const { return components_; }
  std::size_t component_count() const { return components_.size(); }

  int index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end())
      throw std::invalid_argument("Topology '" + label_ + "': unknown component '" +
                                  std::string(id) + "'");
    return it->second;
  }

  bool has_component(std::string_view id) const {
    return index_.count(std::string(id)) != 0;
  }

  /// Paths as component index sets, in declaration order.
  const std::vector<std::vector<int>>& paths() const { return paths_; }

  /// Declared symmetry permutations as index maps (identity not included).
  const std::vector<std::vector<int>>& symmetries() const { return symmetries_; }

  std::vector<int> edge_indices() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(components_.size()); ++i)
      if (components_[static_cast<std::size_t>(i)].kind == ComponentKind::Edge)
        out.push_back(i);
    return out;
  }

  void validate() const {
    if (components_.empty())
      throw std::invalid_argument("Topology '" + label_ + "': no components");
    if (paths_.empty())
      throw std::invalid_argument("Topology '" + label_ + "': at least one path required");
    for (const auto& p : paths_)
      if (p.empty())
        throw std::invalid_argument("Topology '" + label_ + "': empty path");
    for (const auto& perm : symmetries_) check_symmetry(perm);
  }

  /// Serial chain of `edges` edge components, one end-to-end path.
  static Topology series_chain(int edges, std::string label = "chain") {
    if (edges < 1) throw std::invalid_argument("series_chain: edges must be >= 1");
    std::vector<Component> comps;
    std::vector<std::string> path;
    for (int i = 0; i < edges; ++i) {
      std::string id = "e" + std::to_string(i + 1);
      comps.push_back({id, ComponentKind::Edge});
      path.push_back(id);
    }
    return Topology(std::move(label), std::move(comps), {path});
  }

 private:
  void add_component(Component& c) {
    if (c.id.empty()) throw std::invalid_argument("Topology: component with empty id");
    if (index_.count(c.id))
      throw std::invalid_argument("Topology: duplicate component id '" + c.id + "'");
    index_[c.id] = static_cast<int>(components_.size());
    components_.push_back(std::move(c));
  }

  void add_path(const std::vector<std::string>& ids) {
    std::vector<int> path;
    for (const auto& id : ids) path.push_back(index_of(id));
    std::sort(path.begin(), path.end());
    path.erase(std::unique(path.begin(), path.end()), path.end());
    paths_.push_back(std::move(path));
  }

  void add_symmetry(const std::map<std::string, std::string>& mapping) {
    std::vector<int> perm(components_.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (const auto& [from, to] : mapping)
      perm[static_cast<std::size_t>(index_of(from))] = index_of(to);
    check_symmetry(perm);
    symmetries_.push_back(std::move(perm));
  }

  void check_symmetry(const std::vector<int>& perm) const {
    std::vector<bool> hit(components_.size(), false);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      int j = perm[i];
      if (j < 0 || j >= static_cast<int>(components_.size()) || hit[static_cast<std::size_t>(j)])
        throw std::invalid_argument("Topology '" + label_ + "': symmetry is not a permutation");
      hit[static_cast<std::size_t>(j)] = true;
      if (components_[i].kind != components_[static_cast<std::size_t>(j)].kind)
        throw std::invalid_argument("Topology '" + label_ +
                                    "': symmetry maps across component kinds");
    }
    // the permuted path system must coincide with the declared one
    std::set<std::vector<int>> declared(paths_.begin(), paths_.end());
    for (const auto& p : paths_) {
      std::vector<int> mapped;
      for (int c : p) mapped.push_back(perm[static_cast<std::size_t>(c)]);
      std::sort(mapped.begin(), mapped.end());
      if (!declared.count(mapped))
        throw std::invalid_argument("Topology '" + label_ +
                                    "': symmetry does not preserve the path system");
    }
  }

  std::string label_;
  std::vector<Component> components_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::vector<int>> paths_;
  std::vector<std::vector<int>> symmetries_;
};

/// Variable of an indicator polynomial: a component, optionally tagged
/// with a time step (time < 0 means untimed).
struct PolyVar {
  std::int32_t component = 0;
  std::int32_t time = -1;

  friend auto operator<=>(const PolyVar&, const PolyVar&) = default;
};

/// Multilinear polynomial with integer coefficients over indicator
/// variables. Idempotence (x^2 = x) is built into the product, so the
/// canonical form never repeats a variable inside one monomial.
class IndicatorPolynomial {
 public:
  using Monomial = std::vector<PolyVar>;  // sorted, unique
  struct Term {
    long long coeff = 0;
    Monomial vars;
  };

  IndicatorPolynomial() = default;

  static IndicatorPolynomial zero() { return IndicatorPolynomial(); }

  static IndicatorPolynomial constant(long long c) {
    IndicatorPolynomial p;
    if (c != 0) p.terms_.push_back({c, {}});
    return p;
  }

  static IndicatorPolynomial one() { return constant(1); }

  static IndicatorPolynomial monomial(Monomial vars, long long coeff = 1) {
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    IndicatorPolynomial p;
    if (coeff != 0) p.terms_.push_back({coeff, std::move(vars)});
    return p;
  }

  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  friend IndicatorPolynomial operator+(const IndicatorPolynomial& a,
                                       const IndicatorPolynomial& b) {
    std::vector<Term> merged = a.terms_;
    merged.insert(merged.end(), b.terms_.begin(), b.terms_.end());
    IndicatorPolynomial out;
    out.terms_ = normalize(std::move(merged));
    return out;
  }

  friend IndicatorPolynomial operator-(const IndicatorPolynomial& a,
                                       const IndicatorPolynomial& b) {
    std::vector<Term> merged = a.terms_;
    for (const auto& t : b.terms_) merged.push_back({-t.coeff, t.vars});
    IndicatorPolynomial out;
    out.terms_ = normalize(std::move(merged));
    return out;
  }

  friend IndicatorPolynomial operator*(const IndicatorPolynomial& a,
                                       const IndicatorPolynomial& b) {
    std::vector<Term> raw;
    raw.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& ta : a.terms_) {
      for (const auto& tb : b.terms_) {
        Monomial vars;
        vars.reserve(ta.vars.size() + tb.vars.size());
        std::set_union(ta.vars.begin(), ta.vars.end(), tb.vars.begin(), tb.vars.end(),
                       std::back_inserter(vars));
        raw.push_back({ta.coeff * tb.coeff, std::move(vars)});
      }
    }
    IndicatorPolynomial out;
    out.terms_ = normalize(std::move(raw));
    return out;
  }

  IndicatorPolynomial one_minus() const { return one() - *this; }

  /// Expectation under independent per-variable probabilities.
  double evaluate(const std::function<double(const PolyVar&)>& probability) const {
    double total = 0.0;
    for (const auto& term : terms_) {
      double prod = static_cast<double>(term.coeff);
      for (const auto& v : term.vars) prod *= probability(v);
      total += prod;
    }
    return total;
  }

  /// Checked evaluation: every variable must be present in `assignment`.
  double evaluate(const std::map<PolyVar, double>& assignment) const {
    return evaluate([&assignment](const PolyVar& v) {
      auto it = assignment.find(v);
      if (it == assignment.end())
        throw std::invalid_argument("IndicatorPolynomial: unassigned variable");
      if (!(it->second >= 0.0 && it->second <= 1.0))
        throw std::invalid_argument("IndicatorPolynomial: probability outside [0,1]");
      return it->second;
    });
  }

  /// Value and time derivative, given per-variable values and their
  /// derivatives (product rule per monomial).
  std::pair<double, double> evaluate_with_derivative(
      const std::function<double(const PolyVar&)>& value,
      const std::function<double(const PolyVar&)>& derivative) const {
    double total = 0.0;
    double dtotal = 0.0;
    std::vector<double> vals;
    for (const auto& term : terms_) {
      vals.clear();
      double prod = 1.0;
      for (const auto& v : term.vars) {
        double x = value(v);
        vals.push_back(x);
        prod *= x;
      }
      total += static_cast<double>(term.coeff) * prod;
      double dsum = 0.0;
      for (std::size_t i = 0; i < term.vars.size(); ++i) {
        double rest = 1.0;
        for (std::size_t j = 0; j < term.vars.size(); ++j)
          if (j != i) rest *= vals[j];
        dsum += derivative(term.vars[i]) * rest;
      }
      dtotal += static_cast<double>(term.coeff) * dsum;
    }
    return {total, dtotal};
  }

 private:
  static std::vector<Term> normalize(std::vector<Term> raw) {
    std::sort(raw.begin(), raw.end(), [](const Term& a, const Term& b) {
      if (a.vars.size() != b.vars.size()) return a.vars.size() < b.vars.size();
      return a.vars < b.vars;
    });
    std::vector<Term> out;
    for (auto& t : raw) {
      if (!out.empty() && out.back().vars == t.vars)
        out.back().coeff += t.coeff;
      else
        out.push_back(std::move(t));
    }
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const Term& t) { return t.coeff == 0; }),
              out.end());
    return out;
  }

  std::vector<Term> terms_;
};

inline constexpr std::size_t kMaxIndicatorComponents = 30;

/// End-to-end functionality indicator 1 - prod_paths (1 - prod_c x_c),
/// expanded to canonical multilinear form. Variables are tagged with
/// `time` (use the default for the untimed polynomial).
inline IndicatorPolynomial build_indicator(const Topology& topology, int time = -1) {
  topology.validate();
  if (topology.component_count() > kMaxIndicatorComponents)
    throw std::invalid_argument("build_indicator: more than " +
                                std::to_string(kMaxIndicatorComponents) +
                                " components; expansion would be intractable");
  IndicatorPolynomial all_fail = IndicatorPolynomial::one();
  for (const auto& path : topology.paths()) {
    IndicatorPolynomial::Monomial vars;
    for (int c : path) vars.push_back(PolyVar{c, time});
    all_fail = all_fail * IndicatorPolynomial::monomial(std::move(vars)).one_minus();
  }
  return all_fail.one_minus();
}

/// Probability that some end-to-end path is fully functional at time t,
/// with independent per-component survival functions.
inline double network_survival(
    const Topology& topology,
    const std::function<double(const std::string&, double)>& component_survival,
    double t) {
  IndicatorPolynomial poly = build_indicator(topology);
  return poly.evaluate([&](const PolyVar& v) {
    return component_survival(topology.components()[static_cast<std::size_t>(v.component)].id, t);
  });
}

/// Hazard -S'/S of the end-to-end survival, using the polynomial chain
/// rule with dS_c/dt = -rate_c * S_c per component.
inline double network_failure_rate(
    const Topology& topology,
    const std::function<double(const std::string&, double)>& component_survival,
    const std::function<double(const std::string&, double)>& component_rate, double t) {
  IndicatorPolynomial poly = build_indicator(topology);
  auto id_of = [&](const PolyVar& v) -> const std::string& {
    return topology.components()[static_cast<std::size_t>(v.component)].id;
  };
  auto [value, dvalue] = poly.evaluate_with_derivative(
      [&](const PolyVar& v) { return component_survival(id_of(v), t); },
      [&](const PolyVar& v) {
        double s = component_survival(id_of(v), t);
        return -component_rate(id_of(v), t) * s;
      });
  if (value <= 0.0)
    throw numerical_error("network_failure_rate: survival vanished at t = " +
                          std::to_string(t));
  return -dvalue / value;
}

/// One class of per-edge working multiplicities of a multiplexed chain,
/// up to permutation of the edges.
struct ChainConfiguration {
  std::vector<int> multiplicities;  // nondecreasing representative
  double weight = 0.0;              // probability of the representative
  long long count = 0;              // number of permuted equivalents
};

/// All functional multiplicity multisets {1..N}^M up to permutation,
/// weighted by independent Binomial(N, up_probability) edge counts.
inline std::vector<ChainConfiguration> enumerate_chain_configurations(
    int M, int N, double up_probability) {
  if (M < 1 || N < 1)
    throw std::invalid_argument("enumerate_chain_configurations: M and N must be >= 1");
  if (!(up_probability >= 0.0 && up_probability <= 1.0))
    throw std::invalid_argument("enumerate_chain_configurations: probability outside [0,1]");
  std::vector<ChainConfiguration> out;
  std::vector<int> current(static_cast<std::size_t>(M), 1);
  auto factorial = [](int n) {
    long long f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  // nondecreasing sequences over {1..N}
  while (true) {
    ChainConfiguration cfg;
    cfg.multiplicities = current;
    cfg.weight = 1.0;
    for (int n : current) cfg.weight *= binomial_pmf(N, n, up_probability);
    cfg.count = factorial(M);
    int run = 1;
    for (std::size_t i = 1; i <= current.size(); ++i) {
      if (i < current.size() && current[i] == current[i - 1]) {
        ++run;
      } else {
        cfg.count /= factorial(run);
        run = 1;
      }
    }
    out.push_back(std::move(cfg));
    // advance
    int pos = M - 1;
    while (pos >= 0 && current[static_cast<std::size_t>(pos)] == N) --pos;
    if (pos < 0) break;
    int v = ++current[static_cast<std::size_t>(pos)];
    for (std::size_t i = static_cast<std::size_t>(pos) + 1; i < current.size(); ++i)
      current[i] = v;
  }
  return out;
}

/// One symmetry class of functional network states. A raw state (subset
/// of working edges) is classified by the set of end-to-end paths it
/// makes available; classes group these path sets under the declared
/// symmetries. `weight` is the total probability of all raw states whose
/// path set equals the representative; `count` is the orbit size.
struct NetworkConfiguration {
  std::string id;
  std::vector<std::vector<std::string>> paths;  // edges per available path
  std::vector<std::string> edges;               // union of the above
  double weight = 0.0;
  long long count = 0;
};

inline std::vector<NetworkConfiguration> enumerate_network_configurations(
    const Topology& topology,
    const std::function<double(const std::string&)>& edge_up_probability) {
  topology.validate();
  std::vector<int> edges = topology.edge_indices();
  std::size_t m = edges.size();
  if (m == 0) throw std::invalid_argument("enumerate_network_configurations: no edges");
  if (m > 20)
    throw std::invalid_argument("enumerate_network_configurations: more than 20 edges");

  std::vector<double> up(m);
  std::unordered_map<int, std::size_t> edge_pos;
  for (std::size_t i = 0; i < m; ++i) {
    edge_pos[edges[i]] = i;
    const std::string& id = topology.components()[static_cast<std::size_t>(edges[i])].id;
    up[i] = edge_up_probability(id);
    if (!(up[i] >= 0.0 && up[i] <= 1.0))
      throw std::invalid_argument("enumerate_network_configurations: probability of edge '" +
                                  id + "' outside [0,1]");
  }

  // per-path edge masks (nodes are assumed functional here)
  std::vector<std::uint32_t> path_mask;
  for (const auto& p : topology.paths()) {
    std::uint32_t mask = 0;
    for (int c : p) {
      auto it = edge_pos.find(c);
      if (it != edge_pos.end()) mask |= (1u << it->second);
    }
    path_mask.push_back(mask);
  }
  std::size_t n_paths = path_mask.size();

  // total probability per available-path set
  std::map<std::uint32_t, double> pathset_prob;
  for (std::uint32_t state = 0; state < (1u << m); ++state) {
    std::uint32_t avail = 0;
    for (std::size_t k = 0; k < n_paths; ++k)
      if ((state & path_mask[k]) == path_mask[k]) avail |= (1u << k);
    if (avail == 0) continue;
    double pr = 1.0;
    for (std::size_t i = 0; i < m; ++i)
      pr *= (state & (1u << i)) ? up[i] : 1.0 - up[i];
    pathset_prob[avail] += pr;
  }

  // symmetry group acting on path indices, generated by the declared
  // permutations (closed under composition)
  std::vector<std::vector<std::size_t>> group;
  {
    std::vector<std::size_t> identity(n_paths);
    std::iota(identity.begin(), identity.end(), 0);
    std::set<std::vector<std::size_t>> seen{identity};
    std::vector<std::vector<std::size_t>> generators;
    for (const auto& perm : topology.symmetries()) {
      // grouping by a symmetry only makes sense if it preserves weights
      for (std::size_t i = 0; i < m; ++i) {
        int image = perm[static_cast<std::size_t>(edges[i])];
        auto it = edge_pos.find(image);
        if (it == edge_pos.end())
          throw std::invalid_argument(
              "enumerate_network_configurations: symmetry maps an edge to a non-edge");
        if (std::abs(up[i] - up[it->second]) > 1e-12)
          throw std::invalid_argument(
              "enumerate_network_configurations: edge probabilities are not symmetry-invariant");
      }
      std::vector<std::size_t> on_paths(n_paths);
      for (std::size_t k = 0; k < n_paths; ++k) {
        std::uint32_t mapped = 0;
        for (std::size_t i = 0; i < m; ++i) {
          if (!(path_mask[k] & (1u << i))) continue;
          mapped |= (1u << edge_pos.at(perm[static_cast<std::size_t>(edges[i])]));
        }
        auto found = std::find(path_mask.begin(), path_mask.end(), mapped);
        if (found == path_mask.end())
          throw std::invalid_argument("enumerate_network_configurations: symmetry does not preserve edge paths");
        on_paths[k] = static_cast<std::size_t>(found - path_mask.begin());
      }
      generators.push_back(on_paths);
      seen.insert(on_paths);
    }
    std::vector<std::vector<std::size_t>> frontier(seen.begin(), seen.end());
    while (!frontier.empty()) {
      std::vector<std::vector<std::size_t>> next;
      for (const auto& g : frontier) {
        for (const auto& h : generators) {
          std::vector<std::size_t> gh(n_paths);
          for (std::size_t k = 0; k < n_paths; ++k) gh[k] = g[h[k]];
          if (seen.insert(gh).second) next.push_back(gh);
        }
      }
      frontier = std::move(next);
    }
    group.assign(seen.begin(), seen.end());
  }

  auto apply = [&](const std::vector<std::size_t>& g, std::uint32_t pathset) {
    std::uint32_t out = 0;
    for (std::size_t k = 0; k < n_paths; ++k)
      if (pathset & (1u << k)) out |= (1u << g[k]);
    return out;
  };

  // orbits of path sets
  std::map<std::uint32_t, std::pair<std::uint32_t, long long>> orbit_of;  // set -> (rep, size)
  std::vector<std::uint32_t> reps;
  std::set<std::uint32_t> assigned;
  for (const auto& [pathset, prob] : pathset_prob) {
    (void)prob;
    if (assigned.count(pathset)) continue;
    std::set<std::uint32_t> orbit;
    for (const auto& g : group) orbit.insert(apply(g, pathset));
    std::uint32_t rep = *orbit.begin();
    for (std::uint32_t member : orbit) {
      assigned.insert(member);
      orbit_of[member] = {rep, static_cast<long long>(orbit.size())};
    }
    reps.push_back(rep);
  }

  struct Pending {
    std::uint32_t rep;
    long long count;
    std::size_t n_paths;
    std::size_t total_len;
  };
  std::vector<Pending> pending;
  for (std::uint32_t rep : reps) {
    Pending p{rep, orbit_of[rep].second, 0, 0};
    for (std::size_t k = 0; k < n_paths; ++k) {
      if (!(rep & (1u << k))) continue;
      ++p.n_paths;
      p.total_len += static_cast<std::size_t>(std::popcount(path_mask[k]));
    }
    pending.push_back(p);
  }
  std::sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    if (a.n_paths != b.n_paths) return a.n_paths < b.n_paths;
    if (a.total_len != b.total_len) return a.total_len < b.total_len;
    return a.rep < b.rep;
  });

  std::vector<NetworkConfiguration> out;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const Pending& p = pending[i];
    NetworkConfiguration cfg;
    cfg.id = "cfg" + std::to_string(i + 1);
    cfg.count = p.count;
    cfg.weight = pathset_prob.at(p.rep);
    std::uint32_t union_mask = 0;
    for (std::size_t k = 0; k < n_paths; ++k) {
      if (!(p.rep & (1u << k))) continue;
      union_mask |= path_mask[k];
      std::vector<std::string> ids;
      for (std::size_t e = 0; e < m; ++e)
        if (path_mask[k] & (1u << e))
          ids.push_back(topology.components()[static_cast<std::size_t>(edges[e])].id);
      cfg.paths.push_back(std::move(ids));
    }
    for (std::size_t e = 0; e < m; ++e)
      if (union_mask & (1u << e))
        cfg.edges.push_back(topology.components()[static_cast<std::size_t>(edges[e])].id);
    out.push_back(std::move(cfg));
  }
  return out;
}

inline std::vector<NetworkConfiguration> enumerate_network_configurations(
    const Topology& topology, double uniform_edge_up) {
  return enumerate_network_configurations(
      topology, [uniform_edge_up](const std::string&) { return uniform_edge_up; });
}

/// Five-node / six-edge two-terminal benchmark network: a square with one
/// diagonal (edges a,b,c,d,e around nodes R,S), followed in series by node
/// T and a final edge f. Declared symmetries: the square reflection
/// (a<->b, d<->e, R<->S) and the square terminal swap (a<->d, b<->e).
inline Topology benchmark_network() {
  std::vector<Component> comps = {
      {"a", ComponentKind::Edge}, {"b", ComponentKind::Edge}, {"c", ComponentKind::Edge},
      {"d", ComponentKind::Edge}, {"e", ComponentKind::Edge}, {"f", ComponentKind::Edge},
      {"R", ComponentKind::Node}, {"S", ComponentKind::Node}, {"T", ComponentKind::Node}};
  std::vector<std::vector<std::string>> paths = {
      {"a", "R", "d", "T", "f"},
      {"a", "R", "c", "S", "e", "T", "f"},
      {"b", "S", "e", "T", "f"},
      {"b", "S", "c", "R", "d", "T", "f"}};
  std::vector<std::map<std::string, std::string>> syms = {
      {{"a", "b"}, {"b", "a"}, {"d", "e"}, {"e", "d"}, {"R", "S"}, {"S", "R"}},
      {{"a", "d"}, {"d", "a"}, {"b", "e"}, {"e", "b"}}};
  return Topology("netherlands", std::move(comps), std::move(paths), std::move(syms));
}

}  // namespace relnet
