#ifndef GSP_GPT_HPP
#define GSP_GPT_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "gsp/choice_matrix.hpp"
#include "gsp/core.hpp"
#include "gsp/master.hpp"
#include "gsp/random.hpp"

namespace gsp {

enum class SelectionRule { Cost, Dominance };

struct GptConfig {
  int gamma = 10;                 // behaviors sampled per iteration
  int delta = 20;                 // columns added per iteration
  LossKind loss = LossKind::KL;
  SelectionRule selection = SelectionRule::Cost;
  bool allow_irrational = true;
  double significance = 0.05;     // chi-squared level of the stopping test
  int max_iterations = 200;
  std::uint64_t rng_seed = 0;
  SolverOptions solver;
  bool audit_pricing = false;     // cross-check incremental costs against direct ones

  void validate() const {
    if (gamma < 1 || delta < 1) throw std::invalid_argument("GptConfig: gamma/delta must be >= 1");
    if (significance <= 0.0 || significance >= 1.0) {
      throw std::invalid_argument("GptConfig: significance must lie in (0,1)");
    }
    if (max_iterations < 1) throw std::invalid_argument("GptConfig: max_iterations must be >= 1");
  }
};

inline GptConfig gpt_r_config() {
  GptConfig c;
  c.allow_irrational = false;
  c.selection = SelectionRule::Cost;
  return c;
}
inline GptConfig gpt_i_config() {
  GptConfig c;
  c.allow_irrational = true;
  c.selection = SelectionRule::Cost;
  return c;
}
inline GptConfig gpt_ic_config() {
  GptConfig c;
  c.allow_irrational = true;
  c.selection = SelectionRule::Dominance;
  return c;
}

// Reduced costs below this threshold count as negative (improving).
inline constexpr double kNegativeCostTol = 1e-9;

// Search forest over partially-ranked preferences.  The path from a root
// to a node spells the node's strictly ranked sequence; the indifference
// set is the complement, so nodes are keyed by the ranked sequence alone.
// Each node records which irrationality levels have entered the model.
class PreferenceTree {
 public:
  struct Node {
    std::vector<ProductId> ranked;
    std::vector<ProductId> indifference;  // sorted; always catalog \ ranked
    std::vector<int> levels;              // levels present in the model
    std::vector<int> model_indices;       // aligned with levels
    std::vector<int> children;
    int parent = -1;
  };

  // N rational roots: P(sigma_k) = (k), I(sigma_k) = N \ {k}, level 1,
  // registered with model indices 0..N-1.  The no-purchase option is
  // rankable and gets a root of its own.
  static PreferenceTree initialize(const ProductCatalog& catalog) {
    PreferenceTree tree;
    tree.n_products_ = catalog.n_products;
    for (ProductId k = 0; k < catalog.n_products; ++k) {
      std::vector<ProductId> ranked{k};
      std::vector<ProductId> indiff;
      for (ProductId j = 0; j < catalog.n_products; ++j) {
        if (j != k) indiff.push_back(j);
      }
      const int id = tree.create_node(std::move(ranked), std::move(indiff), -1);
      tree.register_behavior(id, 1, k);
    }
    return tree;
  }

  int n_products() const { return n_products_; }
  int n_nodes() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int id) const { return nodes_[id]; }

  int find(const std::vector<ProductId>& ranked) const {
    auto it = index_.find(ranked);
    return it == index_.end() ? -1 : it->second;
  }

  bool is_pruned(const std::vector<ProductId>& ranked) const {
    return pruned_.count(ranked) > 0;
  }

  // Hard pruning: the key is never expanded or instantiated again.  Keys
  // that already carry model behaviors are left alone.
  void mark_pruned(const std::vector<ProductId>& ranked) {
    if (index_.count(ranked) > 0) return;
    pruned_.insert(ranked);
  }

  int find_or_create(const std::vector<ProductId>& ranked,
                     const std::vector<ProductId>& indifference, int parent) {
    const int existing = find(ranked);
    if (existing >= 0) return existing;
    return create_node(ranked, indifference, parent);
  }

  void register_behavior(int node_id, int level, int model_index) {
    Node& n = nodes_[node_id];
    if (std::find(n.levels.begin(), n.levels.end(), level) != n.levels.end()) {
      throw std::invalid_argument("PreferenceTree: level already registered");
    }
    n.levels.push_back(level);
    n.model_indices.push_back(model_index);
  }

  std::vector<int> leaf_ids() const {
    std::vector<int> out;
    for (int id = 0; id < n_nodes(); ++id) {
      if (nodes_[id].children.empty()) out.push_back(id);
    }
    return out;
  }

  Behavior behavior_at(int node_id, int level) const {
    const Node& n = nodes_[node_id];
    return Behavior(n.ranked, n.indifference, level);
  }

 private:
  int create_node(std::vector<ProductId> ranked, std::vector<ProductId> indifference, int parent) {
    Node n;
    n.ranked = std::move(ranked);
    n.indifference = std::move(indifference);
    std::sort(n.indifference.begin(), n.indifference.end());
    n.parent = parent;
    const int id = static_cast<int>(nodes_.size());
    index_[n.ranked] = id;
    nodes_.push_back(std::move(n));
    if (parent >= 0) nodes_[parent].children.push_back(id);
    return id;
  }

  int n_products_ = 0;
  std::vector<Node> nodes_;
  std::map<std::vector<ProductId>, int> index_;
  std::set<std::vector<ProductId>> pruned_;
};

// gamma draws (with replacement, deduplicated in draw order) over nodes,
// where a node's probability is the summed weight of its levels present
// in the model.  If every node has zero aggregated weight, sampling falls
// back to uniform draws over the unpruned leaves.
inline std::vector<int> sample_nodes(const PreferenceTree& tree, const std::vector<double>& weights,
                                     int gamma, RandomEngine& rng) {
  std::vector<double> node_weight(tree.n_nodes(), 0.0);
  double total = 0.0;
  for (int id = 0; id < tree.n_nodes(); ++id) {
    for (int k : tree.node(id).model_indices) {
      if (k < static_cast<int>(weights.size())) node_weight[id] += weights[k];
    }
    total += node_weight[id];
  }

  std::vector<int> drawn;
  drawn.reserve(gamma);
  if (total > 0.0) {
    for (int g = 0; g < gamma; ++g) drawn.push_back(rng.categorical(node_weight));
  } else {
    const std::vector<int> leaves = tree.leaf_ids();
    if (leaves.empty()) return {};
    for (int g = 0; g < gamma; ++g) {
      drawn.push_back(leaves[rng.uniform_int(0, static_cast<int>(leaves.size()) - 1)]);
    }
  }
  std::vector<int> unique;
  for (int id : drawn) {
    if (std::find(unique.begin(), unique.end(), id) == unique.end()) unique.push_back(id);
  }
  return unique;
}

inline std::vector<int> sample_nodes(const PreferenceTree& tree, const ChoiceModel& model,
                                     int gamma, RandomEngine& rng) {
  return sample_nodes(tree, model.weights, gamma, rng);
}

// A sub-behavior not yet in the model: the parent's ranked sequence
// extended by one item from its indifference set, at a given level.
struct Candidate {
  int parent_node = -1;
  ProductId moved_item = -1;
  int level = 1;
  std::vector<ProductId> ranked;        // parent ranked + moved_item
  std::vector<ProductId> indifference;  // parent indifference \ {moved_item}
  double cost = 0.0;

  Behavior to_behavior() const { return Behavior(ranked, indifference, level); }
};

// Sub-behavior generation: one child per item of the indifference set,
// with levels 1..|P|+1 when irrational behaviors are allowed and level 1
// only otherwise.  Children already pruned are skipped, as are
// (child, level) pairs already in the model.
inline std::vector<Candidate> expand(const PreferenceTree& tree, int node_id,
                                     bool allow_irrational) {
  const PreferenceTree::Node& node = tree.node(node_id);
  const int max_level = allow_irrational ? static_cast<int>(node.ranked.size()) + 1 : 1;
  std::vector<Candidate> out;
  for (ProductId item : node.indifference) {
    std::vector<ProductId> child_ranked = node.ranked;
    child_ranked.push_back(item);
    if (tree.is_pruned(child_ranked)) continue;
    std::vector<ProductId> child_indiff;
    child_indiff.reserve(node.indifference.size() - 1);
    for (ProductId j : node.indifference) {
      if (j != item) child_indiff.push_back(j);
    }
    const int child_id = tree.find(child_ranked);
    for (int level = 1; level <= max_level; ++level) {
      if (child_id >= 0) {
        const auto& levels = tree.node(child_id).levels;
        if (std::find(levels.begin(), levels.end(), level) != levels.end()) continue;
      }
      Candidate c;
      c.parent_node = node_id;
      c.moved_item = item;
      c.level = level;
      c.ranked = child_ranked;
      c.indifference = child_indiff;
      out.push_back(std::move(c));
    }
  }
  return out;
}

struct SelectionResult {
  std::vector<Candidate> entering;
  std::vector<std::vector<ProductId>> pruned_keys;  // candidate nodes with no selected level
};

namespace detail {

inline void collect_pruned(const std::vector<Candidate>& all, const std::vector<Candidate>& chosen,
                           SelectionResult& result) {
  std::set<std::vector<ProductId>> kept;
  for (const Candidate& c : chosen) kept.insert(c.ranked);
  std::set<std::vector<ProductId>> dropped;
  for (const Candidate& c : all) {
    if (kept.count(c.ranked) == 0) dropped.insert(c.ranked);
  }
  result.pruned_keys.assign(dropped.begin(), dropped.end());
}

}  // namespace detail

// The delta candidates with the smallest reduced costs; ties broken by
// (|P|, ranked sequence, level).  Candidate nodes with no selected level
// are pruned from the search tree.
inline SelectionResult select_cost(std::vector<Candidate> candidates, int delta) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.ranked.size() != b.ranked.size()) return a.ranked.size() < b.ranked.size();
    if (a.ranked != b.ranked) return a.ranked < b.ranked;
    return a.level < b.level;
  });
  SelectionResult result;
  const int take = std::min<int>(delta, static_cast<int>(candidates.size()));
  result.entering.assign(candidates.begin(), candidates.begin() + take);
  detail::collect_pruned(candidates, result.entering, result);
  return result;
}

// Dominance rule: rank candidates by (|P| ascending, cost ascending) and
// return the delta consecutive candidates starting at the best-ranked one
// with negative cost.  Empty when no candidate improves.
inline SelectionResult select_dominance(std::vector<Candidate> candidates, int delta) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.ranked.size() != b.ranked.size()) return a.ranked.size() < b.ranked.size();
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.ranked != b.ranked) return a.ranked < b.ranked;
    return a.level < b.level;
  });
  SelectionResult result;
  int first_negative = -1;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].cost < -kNegativeCostTol) {
      first_negative = static_cast<int>(i);
      break;
    }
  }
  if (first_negative < 0) return result;  // nothing prunes, the loop stops
  const int last = std::min<int>(first_negative + delta, static_cast<int>(candidates.size()));
  result.entering.assign(candidates.begin() + first_negative, candidates.begin() + last);
  detail::collect_pruned(candidates, result.entering, result);
  return result;
}

// Likelihood-ratio stopping test: stop when -2(L_prev - L_new) falls
// below the chi-squared critical value with `params_added` degrees of
// freedom at the configured significance.
inline bool stop_check(double loglik_prev, double loglik_new, int params_added,
                       double significance) {
  if (params_added <= 0) return true;
  const double statistic = -2.0 * (loglik_prev - loglik_new);
  const boost::math::chi_squared dist(static_cast<double>(params_added));
  const double critical = boost::math::quantile(dist, 1.0 - significance);
  return statistic < critical;
}

struct FitIteration {
  int iteration = 0;
  double objective = 0.0;
  double loglik = 0.0;
  int n_candidates = 0;
  int candidate_bound = 0;  // gamma * max|I| * (max|P|+1) over sampled nodes
  int n_entering = 0;
  int n_columns = 0;
  double pricing_audit_error = 0.0;
};

struct FitResult {
  ChoiceModel model;
  double objective = 0.0;
  double loglik = 0.0;
  long iterations = 0;
  std::string stop_reason;
  std::vector<FitIteration> trace;
  double wall_seconds = 0.0;
};

// The full column-generation loop: initialize rational roots, then
// iterate {sample, expand, price, select, re-solve} until the likelihood
// test passes, no improving column exists, or the iteration cap is hit.
// Behaviors with weight <= 1e-9 are dropped from the returned model.
inline FitResult fit(const EmpiricalDistribution& emp, const ProductCatalog& catalog,
                     const GptConfig& config) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();

  PreferenceTree tree = PreferenceTree::initialize(catalog);
  std::vector<Behavior> behaviors;
  behaviors.reserve(catalog.n_products);
  for (int id = 0; id < tree.n_nodes(); ++id) behaviors.push_back(tree.behavior_at(id, 1));

  ChoiceMatrixView view(behaviors, emp.offer_sets());
  MasterSolution sol;
  try {
    sol = solve_master(config.loss, view, emp, config.solver);
  } catch (const SolverError& e) {
    throw SolverError(std::string("gpt::fit (initial master): ") + e.what(), e.iterations);
  }
  double loglik = log_likelihood(sol.fitted, emp, config.solver.epsilon);

  RandomEngine rng(config.rng_seed);
  RandomEngine audit_rng(config.rng_seed ^ 0x9e3779b97f4a7c15ULL);

  FitResult result;
  result.trace.push_back({0, sol.objective, loglik, 0, 0, 0, view.n_columns(), 0.0});
  result.stop_reason = "max_iterations";

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    const std::vector<int> sampled = sample_nodes(tree, sol.weights, config.gamma, rng);

    std::vector<Candidate> candidates;
    int max_i = 0;
    int max_p = 0;
    double audit_error = 0.0;
    for (int node_id : sampled) {
      const auto& node = tree.node(node_id);
      if (node.indifference.empty()) continue;
      max_i = std::max<int>(max_i, static_cast<int>(node.indifference.size()));
      max_p = std::max<int>(max_p, static_cast<int>(node.ranked.size()));
      std::vector<Candidate> local = expand(tree, node_id, config.allow_irrational);
      if (local.empty()) continue;
      const NodePricer pricer(node.ranked, node.indifference, sol.duals);
      for (Candidate& c : local) c.cost = pricer.child_cost(c.moved_item, c.level);
      if (config.audit_pricing) {
        for (int probe = 0; probe < 2 && !local.empty(); ++probe) {
          const Candidate& c = local[audit_rng.uniform_int(0, static_cast<int>(local.size()) - 1)];
          const double direct =
              reduced_cost(behavior_column(c.to_behavior(), emp.offer_sets()), sol.duals);
          audit_error = std::max(audit_error, std::abs(direct - c.cost));
        }
      }
      std::move(local.begin(), local.end(), std::back_inserter(candidates));
    }

    if (candidates.empty()) {
      result.stop_reason = "no_candidates";
      result.iterations = iter;
      break;
    }
    const bool has_negative = std::any_of(candidates.begin(), candidates.end(), [](const Candidate& c) {
      return c.cost < -kNegativeCostTol;
    });
    if (!has_negative) {
      result.stop_reason = "no_negative_cost";
      result.iterations = iter;
      break;
    }

    const int n_candidates = static_cast<int>(candidates.size());
    const int bound = config.gamma * max_i * (max_p + 1);
    SelectionResult selection = config.selection == SelectionRule::Cost
                                    ? select_cost(std::move(candidates), config.delta)
                                    : select_dominance(std::move(candidates), config.delta);
    if (selection.entering.empty()) {
      result.stop_reason = "no_negative_cost";
      result.iterations = iter;
      break;
    }
    for (const auto& key : selection.pruned_keys) tree.mark_pruned(key);

    std::vector<double> warm = sol.weights;
    for (const Candidate& c : selection.entering) {
      const int node_id = tree.find_or_create(c.ranked, c.indifference, c.parent_node);
      const int model_index = static_cast<int>(behaviors.size());
      behaviors.push_back(c.to_behavior());
      view.add_behavior(behaviors.back());
      tree.register_behavior(node_id, c.level, model_index);
      warm.push_back(0.0);
    }

    const double prev_loglik = loglik;
    try {
      sol = solve_master(config.loss, view, emp, config.solver, &warm);
    } catch (const SolverError& e) {
      throw SolverError("gpt::fit (iteration " + std::to_string(iter) + "): " + e.what(),
                        e.iterations);
    }
    loglik = log_likelihood(sol.fitted, emp, config.solver.epsilon);

    result.trace.push_back({iter, sol.objective, loglik, n_candidates, bound,
                            static_cast<int>(selection.entering.size()), view.n_columns(),
                            audit_error});
    result.iterations = iter;

    if (stop_check(prev_loglik, loglik, static_cast<int>(selection.entering.size()),
                   config.significance)) {
      result.stop_reason = "likelihood";
      break;
    }
  }

  // Keep behaviors with meaningful mass.
  std::vector<Behavior> kept;
  std::vector<double> kept_w;
  double norm = 0.0;
  for (std::size_t k = 0; k < behaviors.size(); ++k) {
    if (sol.weights[k] > 1e-9) {
      kept.push_back(behaviors[k]);
      kept_w.push_back(sol.weights[k]);
      norm += sol.weights[k];
    }
  }
  for (double& w : kept_w) w /= norm;
  result.model = ChoiceModel(std::move(kept), std::move(kept_w));
  result.model.seed = config.rng_seed;
  result.objective = sol.objective;
  result.loglik = loglik;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace gsp

#endif  // GSP_GPT_HPP
