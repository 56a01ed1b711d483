#ifndef GSP_MASTER_HPP
#define GSP_MASTER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gsp/choice_matrix.hpp"
#include "gsp/core.hpp"
#include "gsp/lp.hpp"

namespace gsp {

enum class LossKind { L1, KL };

inline const char* to_string(LossKind k) { return k == LossKind::L1 ? "l1" : "kl"; }

struct SolverOptions {
  double kl_tol = 1e-9;      // relative objective change per EM sweep
  long kl_max_iters = 10000;
  long lp_max_iters = 200000;
  double epsilon = 1e-10;    // clipping inside logarithms and gradient denominators
};

struct SolverError : std::runtime_error {
  long iterations;
  SolverError(const std::string& what, long iters)
      : std::runtime_error(what + " (iterations: " + std::to_string(iters) + ")"),
        iterations(iters) {}
};

// Dual prices of the restricted master: alpha per (item, offer set) cell
// with j in S_m, and nu for the convexity constraint.  A candidate
// column a prices as c(sigma) = -alpha^T a - nu.
struct DualSolution {
  std::vector<OfferSet> offer_sets;
  std::vector<std::vector<double>> alpha;  // aligned with each set's sorted items
  double nu = 0.0;

  double at(ProductId j, int m) const {
    const int pos = offer_sets[m].position(j);
    return pos < 0 ? 0.0 : alpha[m][pos];
  }
};

struct MasterSolution {
  std::vector<double> weights;
  ShareTable fitted;
  double objective = 0.0;
  DualSolution duals;
  LossKind loss_kind = LossKind::KL;
  long iterations = 0;
  bool converged = true;
};

// Reduced cost c(sigma) = -alpha^T a - nu.
//
// Accumulated as a per-set subtotal added to a running total, set by set;
// NodePricer uses the same grouping so incremental and direct pricing
// agree bit for bit.
inline double reduced_cost(const ChoiceColumn& column, const DualSolution& duals) {
  double total = 0.0;
  for (int m = 0; m < column.n_sets(); ++m) {
    double subtotal = 0.0;
    for (const auto& [item, a] : column.by_set[m]) {
      subtotal += duals.at(item, m) * a;
    }
    total += subtotal;
  }
  return -total - duals.nu;
}

namespace detail {

inline double clipped_log(double x, double eps) { return std::log(std::max(x, eps)); }

// Active-row layout for the KL objective: only cells with v > 0 enter the
// loss and the EM update.
struct KlRows {
  std::vector<double> w;      // (T_S / T) * v_r
  std::vector<double> log_v;  // log v_r
  std::vector<std::vector<int>> row_of;  // per set, per item position; -1 if v == 0
  int n_rows = 0;

  static KlRows build(const EmpiricalDistribution& emp) {
    KlRows rows;
    const auto& sets = emp.offer_sets();
    rows.row_of.resize(sets.size());
    for (std::size_t m = 0; m < sets.size(); ++m) {
      const auto& probs = emp.shares.row(static_cast<int>(m));
      rows.row_of[m].assign(probs.size(), -1);
      const double weight = static_cast<double>(emp.counts[m]) / static_cast<double>(emp.total);
      for (std::size_t pos = 0; pos < probs.size(); ++pos) {
        if (probs[pos] <= 0.0) continue;
        rows.row_of[m][pos] = rows.n_rows++;
        rows.w.push_back(weight * probs[pos]);
        rows.log_v.push_back(std::log(probs[pos]));
      }
    }
    return rows;
  }
};

struct KlEmResult {
  std::vector<double> lambda;
  std::vector<double> x_rows;
  double objective = 0.0;
  long iterations = 0;
  bool converged = false;
};

inline double kl_objective(const KlRows& rows, const std::vector<double>& x_rows, double eps) {
  double obj = 0.0;
  for (int r = 0; r < rows.n_rows; ++r) {
    obj += rows.w[r] * (rows.log_v[r] - clipped_log(x_rows[r], eps));
  }
  return obj;
}

// Multiplicative EM updates for min_lambda KL(v || A lambda) over the
// simplex.  Monotone and simplex-feasible by construction.  Columns are
// sparse lists of (active row, probability).
inline KlEmResult kl_em_solve(const KlRows& rows,
                              const std::vector<std::vector<std::pair<int, double>>>& cols,
                              std::vector<double> lambda, const SolverOptions& opt) {
  const int n_cols = static_cast<int>(cols.size());
  KlEmResult result;
  std::vector<double> x(rows.n_rows), g(rows.n_rows);

  auto compute_x = [&]() {
    std::fill(x.begin(), x.end(), 0.0);
    for (int k = 0; k < n_cols; ++k) {
      const double lk = lambda[k];
      if (lk == 0.0) continue;
      for (const auto& [r, a] : cols[k]) x[r] += lk * a;
    }
  };

  compute_x();
  double obj = kl_objective(rows, x, opt.epsilon);
  long iter = 0;
  for (; iter < opt.kl_max_iters; ++iter) {
    for (int r = 0; r < rows.n_rows; ++r) g[r] = rows.w[r] / std::max(x[r], opt.epsilon);
    double norm = 0.0;
    for (int k = 0; k < n_cols; ++k) {
      double s = 0.0;
      for (const auto& [r, a] : cols[k]) s += a * g[r];
      lambda[k] *= s;
      norm += lambda[k];
    }
    if (norm <= 0.0) break;
    for (double& lk : lambda) lk /= norm;

    compute_x();
    const double next = kl_objective(rows, x, opt.epsilon);
    const bool done = std::abs(obj - next) <= opt.kl_tol * std::max(1.0, std::abs(obj));
    obj = next;
    if (done) {
      result.converged = true;
      ++iter;
      break;
    }
  }
  result.lambda = std::move(lambda);
  result.x_rows = std::move(x);
  result.objective = obj;
  result.iterations = iter;
  return result;
}

inline ShareTable fitted_shares(const ChoiceMatrixView& view, const std::vector<double>& lambda) {
  ShareTable x(view.offer_sets);
  for (int k = 0; k < view.n_columns(); ++k) {
    const double lk = lambda[k];
    if (lk == 0.0) continue;
    const ChoiceColumn& col = view.columns[k];
    for (int m = 0; m < col.n_sets(); ++m) {
      for (const auto& [item, a] : col.by_set[m]) {
        x.set(item, m, x.at(item, m) + lk * a);
      }
    }
  }
  return x;
}

}  // namespace detail

// L1 restricted master, solved as a linear program via the standard
// split |e| = e+ + e- with x - v = e+ - e-.  Duals come from the optimal
// basis; deterministic pivoting makes ties reproducible.
inline MasterSolution solve_l1(const ChoiceMatrixView& view, const EmpiricalDistribution& emp,
                               const SolverOptions& opt = {}) {
  if (view.n_columns() == 0) throw std::invalid_argument("solve_l1: no columns");
  const auto& sets = emp.offer_sets();

  // All offered cells are LP rows, including those with v == 0.
  std::vector<double> v;
  std::vector<std::pair<int, int>> row_cell;  // (set, position)
  for (std::size_t m = 0; m < sets.size(); ++m) {
    const auto& probs = emp.shares.row(static_cast<int>(m));
    for (std::size_t pos = 0; pos < probs.size(); ++pos) {
      row_cell.emplace_back(static_cast<int>(m), static_cast<int>(pos));
      v.push_back(probs[pos]);
    }
  }
  const int n_rows = static_cast<int>(v.size());

  std::vector<std::vector<double>> dense_cols(view.n_columns(), std::vector<double>(n_rows, 0.0));
  {
    std::vector<std::vector<int>> row_at(sets.size());
    for (std::size_t m = 0; m < sets.size(); ++m) row_at[m].assign(sets[m].items().size(), -1);
    for (int r = 0; r < n_rows; ++r) row_at[row_cell[r].first][row_cell[r].second] = r;
    for (int k = 0; k < view.n_columns(); ++k) {
      const ChoiceColumn& col = view.columns[k];
      for (int m = 0; m < col.n_sets(); ++m) {
        for (const auto& [item, a] : col.by_set[m]) {
          dense_cols[k][row_at[m][sets[m].position(item)]] = a;
        }
      }
    }
  }

  detail::L1MasterLp lp(dense_cols, v);
  detail::L1LpResult lp_result = lp.solve(opt.lp_max_iters);
  if (!lp_result.optimal) {
    throw SolverError("solve_l1: simplex did not converge", lp_result.iterations);
  }

  MasterSolution sol;
  sol.loss_kind = LossKind::L1;
  sol.weights = lp_result.lambda;
  sol.fitted = detail::fitted_shares(view, sol.weights);
  sol.objective = lp_result.objective;
  sol.iterations = lp_result.iterations;
  sol.converged = true;

  sol.duals.offer_sets = sets;
  sol.duals.alpha.resize(sets.size());
  for (std::size_t m = 0; m < sets.size(); ++m) {
    sol.duals.alpha[m].assign(sets[m].items().size(), 0.0);
  }
  for (int r = 0; r < n_rows; ++r) {
    sol.duals.alpha[row_cell[r].first][row_cell[r].second] = lp_result.y[r];
  }
  sol.duals.nu = lp_result.y[n_rows];
  return sol;
}

// KL restricted master solved by EM.  Duals follow the convex extension
// of the LP formalism: alpha is the negative loss gradient in x and nu
// prices the best in-model column to zero, so candidates with c < 0 are
// exactly descent directions.
inline MasterSolution solve_kl(const ChoiceMatrixView& view, const EmpiricalDistribution& emp,
                               const SolverOptions& opt = {},
                               const std::vector<double>* warm_start = nullptr) {
  const int n_cols = view.n_columns();
  if (n_cols == 0) throw std::invalid_argument("solve_kl: no columns");
  const auto& sets = emp.offer_sets();

  detail::KlRows rows = detail::KlRows::build(emp);
  std::vector<std::vector<std::pair<int, double>>> cols(n_cols);
  for (int k = 0; k < n_cols; ++k) {
    const ChoiceColumn& col = view.columns[k];
    for (int m = 0; m < col.n_sets(); ++m) {
      for (const auto& [item, a] : col.by_set[m]) {
        const int r = rows.row_of[m][sets[m].position(item)];
        if (r >= 0) cols[k].emplace_back(r, a);
      }
    }
  }

  // Multiplicative updates keep zero weights at zero, so a warm start is
  // padded and floored; new columns climb from the floor.
  std::vector<double> lambda0(n_cols, 1.0 / n_cols);
  std::vector<double> padded;
  if (warm_start != nullptr) {
    padded.assign(n_cols, 0.0);
    std::copy(warm_start->begin(), warm_start->end(), padded.begin());
    const double floor_w = 1e-6 / n_cols;
    double norm = 0.0;
    for (int k = 0; k < n_cols; ++k) {
      lambda0[k] = std::max(padded[k], floor_w);
      norm += lambda0[k];
    }
    for (double& lk : lambda0) lk /= norm;
  }

  detail::KlEmResult em = detail::kl_em_solve(rows, cols, lambda0, opt);

  // Restricted-master monotonicity guard: the previous optimum padded with
  // zeros is feasible here, so never return anything worse.
  if (warm_start != nullptr) {
    std::vector<double> x_prev(rows.n_rows, 0.0);
    for (int k = 0; k < n_cols; ++k) {
      if (padded[k] == 0.0) continue;
      for (const auto& [r, a] : cols[k]) x_prev[r] += padded[k] * a;
    }
    const double prev_obj = detail::kl_objective(rows, x_prev, opt.epsilon);
    if (prev_obj < em.objective) {
      em.lambda = padded;
      em.x_rows = std::move(x_prev);
      em.objective = prev_obj;
    }
  }

  MasterSolution sol;
  sol.loss_kind = LossKind::KL;
  sol.weights = em.lambda;
  sol.fitted = detail::fitted_shares(view, sol.weights);
  sol.objective = em.objective;
  sol.iterations = em.iterations;
  sol.converged = em.converged;

  sol.duals.offer_sets = sets;
  sol.duals.alpha.resize(sets.size());
  for (std::size_t m = 0; m < sets.size(); ++m) {
    const auto& probs = emp.shares.row(static_cast<int>(m));
    sol.duals.alpha[m].assign(probs.size(), 0.0);
    for (std::size_t pos = 0; pos < probs.size(); ++pos) {
      const int r = rows.row_of[m][pos];
      if (r >= 0) sol.duals.alpha[m][pos] = rows.w[r] / std::max(em.x_rows[r], opt.epsilon);
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_cols; ++k) {
    double total = 0.0;
    const ChoiceColumn& col = view.columns[k];
    for (int m = 0; m < col.n_sets(); ++m) {
      double subtotal = 0.0;
      for (const auto& [item, a] : col.by_set[m]) {
        subtotal += sol.duals.alpha[m][sets[m].position(item)] * a;
      }
      total += subtotal;
    }
    best = std::max(best, total);
  }
  sol.duals.nu = -best;
  return sol;
}

inline MasterSolution solve_master(LossKind loss, const ChoiceMatrixView& view,
                                   const EmpiricalDistribution& emp, const SolverOptions& opt = {},
                                   const std::vector<double>* warm_start = nullptr) {
  return loss == LossKind::L1 ? solve_l1(view, emp, opt) : solve_kl(view, emp, opt, warm_start);
}

// Transaction log-likelihood sum_S T_S sum_{j in S} v_{j,S} log x_{j,S},
// with the same clipping as the KL objective so that
// L_KL(a) - L_KL(b) = -(LL(a) - LL(b)) / T holds exactly.
inline double log_likelihood(const ShareTable& x, const EmpiricalDistribution& emp,
                             double eps = 1e-10) {
  double ll = 0.0;
  for (int m = 0; m < emp.n_sets(); ++m) {
    const auto& probs = emp.shares.row(m);
    const auto& fitted = x.row(m);
    double inner = 0.0;
    for (std::size_t pos = 0; pos < probs.size(); ++pos) {
      if (probs[pos] <= 0.0) continue;
      inner += probs[pos] * detail::clipped_log(fitted[pos], eps);
    }
    ll += static_cast<double>(emp.counts[m]) * inner;
  }
  return ll;
}

// Per-node pricing state for the growing preference tree: the restriction
// of (P, I) to every offer set together with the dual mass of each item.
// A child behavior (P + item, I \ {item}, level) prices in O(M) by reusing
// the parent's per-set terms wherever the moved item is not offered.
class NodePricer {
 public:
  NodePricer(std::vector<ProductId> ranked, std::vector<ProductId> indifference,
             const DualSolution& duals)
      : ranked_(std::move(ranked)), indifference_(std::move(indifference)), duals_(&duals) {
    std::sort(indifference_.begin(), indifference_.end());
    const int n_sets = static_cast<int>(duals.offer_sets.size());
    alpha_ranked_.resize(n_sets);
    i_items_.resize(n_sets);
    alpha_i_.resize(n_sets);
    alpha0_.resize(n_sets);
    for (int m = 0; m < n_sets; ++m) {
      const OfferSet& s = duals.offer_sets[m];
      for (ProductId j : ranked_) {
        if (s.contains(j)) alpha_ranked_[m].push_back(duals.alpha[m][s.position(j)]);
      }
      for (ProductId j : indifference_) {
        if (s.contains(j)) {
          i_items_[m].push_back(j);
          alpha_i_[m].push_back(duals.alpha[m][s.position(j)]);
        }
      }
      alpha0_[m] = duals.alpha[m][s.position(kNoPurchase)];
    }
    const int max_level = static_cast<int>(ranked_.size()) + 1;
    parent_q_.resize(max_level);
    for (int level = 1; level <= max_level; ++level) {
      parent_q_[level - 1].resize(n_sets);
      for (int m = 0; m < n_sets; ++m) parent_q_[level - 1][m] = parent_q(m, level);
    }
  }

  const std::vector<ProductId>& ranked() const { return ranked_; }
  const std::vector<ProductId>& indifference() const { return indifference_; }

  // Reduced cost of the node's own behavior (P, I, level).
  double level_cost(int level) const {
    double total = 0.0;
    for (std::size_t m = 0; m < alpha0_.size(); ++m) {
      total += parent_q_[level - 1][m];
    }
    return -total - duals_->nu;
  }

  // Reduced cost of the child (P + item, I \ {item}, level); item must
  // belong to the node's indifference set and 1 <= level <= |P| + 1.
  double child_cost(ProductId item, int level) const {
    double total = 0.0;
    for (std::size_t m = 0; m < alpha0_.size(); ++m) {
      const auto& items = i_items_[m];
      const auto it = std::lower_bound(items.begin(), items.end(), item);
      if (it == items.end() || *it != item) {
        total += parent_q_[level - 1][m];  // item not offered: same choice as parent
        continue;
      }
      const int pos = static_cast<int>(it - items.begin());
      const int len = static_cast<int>(alpha_ranked_[m].size());
      const int child_i = static_cast<int>(items.size()) - 1;
      double q;
      if (level <= len) {
        q = alpha_ranked_[m][level - 1];
      } else if (level == len + 1) {
        q = alpha_i_[m][pos];
      } else if (child_i > 0 && level <= len + 1 + child_i) {
        const double inv = 1.0 / static_cast<double>(child_i);
        double acc = 0.0;
        for (std::size_t j = 0; j < items.size(); ++j) {
          if (static_cast<int>(j) == pos) continue;
          acc += alpha_i_[m][j] * inv;
        }
        q = acc;
      } else {
        q = alpha0_[m];
      }
      total += q;
    }
    return -total - duals_->nu;
  }

 private:
  double parent_q(int m, int level) const {
    const int len = static_cast<int>(alpha_ranked_[m].size());
    const int n_i = static_cast<int>(i_items_[m].size());
    if (level <= len) return alpha_ranked_[m][level - 1];
    if (n_i > 0 && level <= len + n_i) {
      const double inv = 1.0 / static_cast<double>(n_i);
      double acc = 0.0;
      for (double a : alpha_i_[m]) acc += a * inv;
      return acc;
    }
    return alpha0_[m];
  }

  std::vector<ProductId> ranked_;
  std::vector<ProductId> indifference_;
  const DualSolution* duals_;
  std::vector<std::vector<double>> alpha_ranked_;      // per set: alpha of P_S in order
  std::vector<std::vector<ProductId>> i_items_;        // per set: I_S sorted
  std::vector<std::vector<double>> alpha_i_;           // per set: alpha of I_S
  std::vector<double> alpha0_;                         // per set: alpha of the 0 option
  std::vector<std::vector<double>> parent_q_;          // [level-1][set]
};

// Reduced cost of `child` from its parent's cached cost terms; exactly
// equal to reduced_cost(behavior_column(child, .), duals).
inline double incremental_reduced_cost(const NodePricer& parent_cost_terms,
                                       const Behavior& child) {
  const auto& p_ranked = parent_cost_terms.ranked();
  const auto& c_ranked = child.ranked();
  if (c_ranked.size() != p_ranked.size() + 1 ||
      !std::equal(p_ranked.begin(), p_ranked.end(), c_ranked.begin())) {
    throw std::invalid_argument("incremental_reduced_cost: child does not extend parent");
  }
  return parent_cost_terms.child_cost(c_ranked.back(), child.level());
}

}  // namespace gsp

#endif  // GSP_MASTER_HPP
