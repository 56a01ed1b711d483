#ifndef GSP_ENUMERATIVE_RB_HPP
#define GSP_ENUMERATIVE_RB_HPP

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gsp/choice_matrix.hpp"
#include "gsp/core.hpp"
#include "gsp/master.hpp"

namespace gsp {

struct CapExceededError : std::runtime_error {
  long long required;
  long long cap;
  CapExceededError(long long req, long long cap_)
      : std::runtime_error("enumerative_rb: " + std::to_string(req) +
                           " rankings exceed the enumeration cap of " + std::to_string(cap_)),
        required(req), cap(cap_) {}
};

struct RbConfig {
  double threshold = 0.008;     // LoR level separating irrational instances
  long long cap = 10'000'000;   // refuse enumerations larger than this
  SolverOptions solver;
};

struct RationalityReport {
  double lor = 0.0;
  long long n_columns = 0;         // enumerated rankings
  long long n_unique_columns = 0;  // distinct choice columns among them
  bool is_irrational = false;      // lor > threshold
  long iterations = 0;
  bool converged = false;
};

namespace detail {

// Number of products missing from the fullest-missing offer set; rankings
// only need m+1 strictly ranked products since lower ranks are never
// chosen (at most m products are ever unavailable).
inline int max_missing(const std::vector<OfferSet>& sets, const ProductCatalog& catalog) {
  int m = 0;
  for (const OfferSet& s : sets) {
    for (ProductId j : s.items()) {
      if (!catalog.contains(j)) {
        throw std::invalid_argument("enumerative_rb: offer set item outside catalog");
      }
    }
    m = std::max(m, catalog.n_products - s.size());
  }
  return m;
}

inline long long ranking_count(int n, int length, long long cap) {
  long long count = 1;
  for (int t = 0; t < length; ++t) {
    count *= (n - t);
    if (count > cap) throw CapExceededError(count, cap);
  }
  return count;
}

}  // namespace detail

// All rational behaviors needed for an exact RUM fit on the given offer
// sets: one behavior per ordered sequence of min(m+1, N) distinct
// products, with the remaining products indifferent and level 1.  Every
// fully-ranked preference induces the same columns as exactly one of
// these.  Sequences are emitted in lexicographic order.
inline std::vector<Behavior> enumerate_rankings(const std::vector<OfferSet>& offer_sets,
                                                const ProductCatalog& catalog,
                                                long long cap = 10'000'000) {
  const int n = catalog.n_products;
  const int length = std::min(detail::max_missing(offer_sets, catalog) + 1, n);
  detail::ranking_count(n, length, cap);

  std::vector<Behavior> out;
  std::vector<ProductId> prefix;
  std::vector<bool> used(n, false);
  auto emit = [&](auto&& self) -> void {
    if (static_cast<int>(prefix.size()) == length) {
      std::vector<ProductId> indiff;
      for (ProductId j = 0; j < n; ++j) {
        if (!used[j]) indiff.push_back(j);
      }
      out.emplace_back(prefix, std::move(indiff), 1);
      return;
    }
    for (ProductId j = 0; j < n; ++j) {
      if (used[j]) continue;
      used[j] = true;
      prefix.push_back(j);
      self(self);
      prefix.pop_back();
      used[j] = false;
    }
  };
  emit(emit);
  return out;
}

namespace detail {

struct SignatureHash {
  std::size_t operator()(const std::vector<std::int32_t>& sig) const {
    std::size_t h = 1469598103934665603ULL;
    for (std::int32_t s : sig) {
      h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(s));
      h *= 1099511628211ULL;
    }
    return h;
  }
};

// EM specialization for point-mass columns (each enumerated ranking
// chooses exactly one item per offer set).  Columns are given as CSR
// lists of active-row ids.
struct PointEmResult {
  std::vector<double> lambda;
  double objective = 0.0;
  long iterations = 0;
  bool converged = false;
};

inline PointEmResult point_mass_em(const KlRows& rows, const std::vector<std::int64_t>& offsets,
                                   const std::vector<std::int32_t>& row_ids,
                                   const SolverOptions& opt) {
  const int n_cols = static_cast<int>(offsets.size()) - 1;
  std::vector<double> x(rows.n_rows), g(rows.n_rows);

  auto compute_x = [&](const std::vector<double>& lam) {
    std::fill(x.begin(), x.end(), 0.0);
    for (int k = 0; k < n_cols; ++k) {
      const double lk = lam[k];
      if (lk == 0.0) continue;
      for (std::int64_t i = offsets[k]; i < offsets[k + 1]; ++i) x[row_ids[i]] += lk;
    }
  };
  auto objective_of = [&](const std::vector<double>& lam) {
    compute_x(lam);
    return kl_objective(rows, x, opt.epsilon);
  };
  // one multiplicative sweep: out = normalized in .* (A^T g(in))
  auto em_sweep = [&](const std::vector<double>& in, std::vector<double>& out) {
    compute_x(in);
    for (int r = 0; r < rows.n_rows; ++r) g[r] = rows.w[r] / std::max(x[r], opt.epsilon);
    double norm = 0.0;
    for (int k = 0; k < n_cols; ++k) {
      double s = 0.0;
      for (std::int64_t i = offsets[k]; i < offsets[k + 1]; ++i) s += g[row_ids[i]];
      out[k] = in[k] * s;
      norm += out[k];
    }
    if (norm > 0.0) {
      for (double& lk : out) lk /= norm;
    }
  };

  // Squared-extrapolation acceleration: two EM sweeps give a secant
  // direction to jump along; the jump is kept only when it improves on
  // the plain double sweep, so the objective stays monotone and the
  // worst case degenerates to ordinary EM.
  std::vector<double> lambda(n_cols, 1.0 / n_cols);
  std::vector<double> l1(n_cols), l2(n_cols), accel(n_cols);
  PointEmResult result;
  double obj = objective_of(lambda);
  long iter = 0;
  while (iter < opt.kl_max_iters) {
    em_sweep(lambda, l1);
    em_sweep(l1, l2);
    iter += 2;

    double rr = 0.0, vv = 0.0;
    for (int k = 0; k < n_cols; ++k) {
      const double r = l1[k] - lambda[k];
      const double v = l2[k] - 2.0 * l1[k] + lambda[k];
      rr += r * r;
      vv += v * v;
    }
    double next;
    if (vv > 1e-300) {
      const double alpha = std::min(-1.0, -std::sqrt(rr / vv));
      double norm = 0.0;
      for (int k = 0; k < n_cols; ++k) {
        const double r = l1[k] - lambda[k];
        const double v = l2[k] - 2.0 * l1[k] + lambda[k];
        accel[k] = std::max(lambda[k] - 2.0 * alpha * r + alpha * alpha * v, 1e-30);
        norm += accel[k];
      }
      for (double& lk : accel) lk /= norm;
      const double obj_accel = objective_of(accel);
      const double obj_plain = objective_of(l2);
      if (obj_accel <= obj_plain) {
        lambda.swap(accel);
        next = obj_accel;
      } else {
        lambda.swap(l2);
        next = obj_plain;
      }
    } else {
      lambda.swap(l2);
      next = objective_of(lambda);
    }

    const bool done = std::abs(obj - next) <= opt.kl_tol * std::max(1.0, std::abs(obj));
    obj = next;
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.lambda = std::move(lambda);
  result.objective = obj;
  result.iterations = iter;
  return result;
}

}  // namespace detail

struct RbFit {
  ChoiceModel model;
  double objective = 0.0;
  long long n_columns = 0;
  long iterations = 0;
  bool converged = false;
};

// The enumerative rank-based model itself (RB-R): EM over the full set of
// enumerated rankings, keeping behaviors with meaningful weight.  Memory
// and time grow with N!/(N-m-1)!, so this is meant for instances within
// the enumeration cap; use loss_of_rationality for the objective alone.
inline RbFit fit_rb(const EmpiricalDistribution& emp, const ProductCatalog& catalog,
                    const RbConfig& config = {}) {
  const std::vector<Behavior> behaviors =
      enumerate_rankings(emp.offer_sets(), catalog, config.cap);
  const auto& sets = emp.offer_sets();
  const int n_sets = static_cast<int>(sets.size());
  detail::KlRows rows = detail::KlRows::build(emp);

  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> row_ids;
  row_ids.reserve(behaviors.size() * n_sets);
  for (const Behavior& b : behaviors) {
    for (int m = 0; m < n_sets; ++m) {
      ProductId choice = -1;
      for (ProductId j : b.ranked()) {
        if (sets[m].contains(j)) {
          choice = j;
          break;
        }
      }
      if (choice < 0) continue;  // cannot happen: |P| = max-missing + 1
      const int r = rows.row_of[m][sets[m].position(choice)];
      if (r >= 0) row_ids.push_back(static_cast<std::int32_t>(r));
    }
    offsets.push_back(static_cast<std::int64_t>(row_ids.size()));
  }

  detail::PointEmResult em = detail::point_mass_em(rows, offsets, row_ids, config.solver);

  RbFit fit;
  fit.objective = em.objective;
  fit.n_columns = static_cast<long long>(behaviors.size());
  fit.iterations = em.iterations;
  fit.converged = em.converged;

  std::vector<Behavior> kept;
  std::vector<double> kept_w;
  double norm = 0.0;
  for (std::size_t k = 0; k < behaviors.size(); ++k) {
    if (em.lambda[k] > 1e-9) {
      kept.push_back(behaviors[k]);
      kept_w.push_back(em.lambda[k]);
      norm += em.lambda[k];
    }
  }
  for (double& w : kept_w) w /= norm;
  fit.model = ChoiceModel(std::move(kept), std::move(kept_w));
  return fit;
}

// Loss of Rationality: the optimal KL objective of the master problem
// over all enumerated rational rankings.  Positive LoR certifies choice
// data no RUM model can explain.
//
// Rankings sharing the same choice column are collapsed before the fit
// (aggregating their weights leaves the optimum unchanged), and subtrees
// of the sequence enumeration whose choices are already determined on
// every offer set are cut, since all completions repeat the same column.
inline RationalityReport loss_of_rationality(const EmpiricalDistribution& emp,
                                             const ProductCatalog& catalog,
                                             const RbConfig& config = {}) {
  const auto& sets = emp.offer_sets();
  if (sets.empty()) throw std::invalid_argument("loss_of_rationality: empty instance");
  const int n = catalog.n_products;
  const int length = std::min(detail::max_missing(sets, catalog) + 1, n);
  const long long count = detail::ranking_count(n, length, config.cap);
  const int n_sets = static_cast<int>(sets.size());

  detail::KlRows rows = detail::KlRows::build(emp);

  // active-row id of (set, item), or -1 when v == 0 there
  std::vector<std::vector<std::int32_t>> row_lookup(n_sets, std::vector<std::int32_t>(n, -1));
  std::vector<std::uint64_t> set_mask(n_sets, 0);
  for (int m = 0; m < n_sets; ++m) {
    for (ProductId j : sets[m].items()) {
      set_mask[m] |= std::uint64_t{1} << j;
      row_lookup[m][j] = static_cast<std::int32_t>(rows.row_of[m][sets[m].position(j)]);
    }
  }

  std::unordered_map<std::vector<std::int32_t>, std::int32_t, detail::SignatureHash> unique;
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> row_ids;

  // chosen item per set for the current prefix (-1: not yet determined)
  std::vector<std::vector<std::int32_t>> chosen(length + 1, std::vector<std::int32_t>(n_sets, -1));
  std::vector<std::int32_t> sig(n_sets);
  std::vector<bool> used(n, false);

  auto record_leaf = [&](int depth) {
    for (int m = 0; m < n_sets; ++m) {
      const std::int32_t item = chosen[depth][m];
      sig[m] = item < 0 ? -1 : row_lookup[m][item];
    }
    auto [it, inserted] = unique.try_emplace(sig, static_cast<std::int32_t>(unique.size()));
    if (inserted) {
      for (std::int32_t r : sig) {
        if (r >= 0) row_ids.push_back(r);
      }
      offsets.push_back(static_cast<std::int64_t>(row_ids.size()));
    }
  };

  auto descend = [&](auto&& self, int depth, int undecided) -> void {
    if (depth == length || undecided == 0) {
      record_leaf(depth);
      return;
    }
    for (ProductId j = 0; j < n; ++j) {
      if (used[j]) continue;
      used[j] = true;
      int next_undecided = undecided;
      for (int m = 0; m < n_sets; ++m) {
        std::int32_t c = chosen[depth][m];
        if (c < 0 && (set_mask[m] >> j & 1)) {
          c = j;
          --next_undecided;
        }
        chosen[depth + 1][m] = c;
      }
      self(self, depth + 1, next_undecided);
      used[j] = false;
    }
  };
  descend(descend, 0, n_sets);

  detail::PointEmResult em = detail::point_mass_em(rows, offsets, row_ids, config.solver);

  RationalityReport report;
  report.lor = em.objective;
  report.n_columns = count;
  report.n_unique_columns = static_cast<long long>(unique.size());
  report.is_irrational = em.objective > config.threshold;
  report.iterations = em.iterations;
  report.converged = em.converged;
  return report;
}

}  // namespace gsp

#endif  // GSP_ENUMERATIVE_RB_HPP
