#ifndef GSP_LP_HPP
#define GSP_LP_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gsp::detail {

// Result of the L1 restricted-master linear program
//
//   min  sum_r (e+_r + e-_r)
//   s.t. sum_k a_{k,r} lambda_k - e+_r + e-_r = v_r   (rows r = 0..R-1)
//        sum_k lambda_k = 1                           (row R)
//        lambda, e+, e- >= 0.
//
// y holds the R row duals followed by the dual of the convexity row (nu).
struct L1LpResult {
  std::vector<double> lambda;
  std::vector<double> y;
  double objective = 0.0;
  long iterations = 0;
  bool optimal = false;
};

// Dense revised primal simplex with an explicit basis inverse.
//
// The starting basis {lambda_0} + one residual variable per row is always
// feasible, so no phase-1 is needed.  Pivoting is Dantzig with
// lowest-index tie-breaks (deterministic); after a long degenerate stall
// it falls back to Bland's rule, which guarantees termination.
class L1MasterLp {
 public:
  // lambda_cols: K dense columns of length R (choice probabilities per row).
  L1MasterLp(const std::vector<std::vector<double>>& lambda_cols, const std::vector<double>& v)
      : cols_(lambda_cols), v_(v), k_(static_cast<int>(lambda_cols.size())),
        r_(static_cast<int>(v.size())), m_(r_ + 1) {
    if (k_ == 0) throw std::invalid_argument("L1MasterLp: need at least one column");
    for (const auto& col : cols_) {
      if (static_cast<int>(col.size()) != r_) {
        throw std::invalid_argument("L1MasterLp: column/row size mismatch");
      }
    }
  }

  L1LpResult solve(long max_iters = 200000) {
    init_basis();
    L1LpResult result;
    long iter = 0;
    const long bland_after = 40L * (m_ + n_vars());
    int since_refactor = 0;
    while (iter < max_iters) {
      compute_duals();
      const int entering = price(iter > bland_after);
      if (entering < 0) {
        result.optimal = true;
        break;
      }
      std::vector<double> w = ftran(entering);
      const int leave_pos = ratio_test(w);
      if (leave_pos < 0) {
        // Objective is bounded below by zero, so this only happens under
        // severe numerical degradation.
        refactorize();
        compute_duals();
        if (price(true) < 0) {
          result.optimal = true;
          break;
        }
        throw std::runtime_error("L1MasterLp: unbounded pivot direction");
      }
      pivot(entering, leave_pos, w);
      ++iter;
      if (++since_refactor >= 256) {
        refactorize();
        since_refactor = 0;
      }
    }
    refactorize();
    compute_duals();

    result.iterations = iter;
    result.lambda.assign(k_, 0.0);
    result.objective = 0.0;
    for (int i = 0; i < m_; ++i) {
      const int var = basis_[i];
      const double value = std::max(0.0, xb_[i]);
      if (var < k_) {
        result.lambda[var] = value;
      } else {
        result.objective += value;
      }
    }
    result.y = y_;
    return result;
  }

 private:
  int n_vars() const { return k_ + 2 * r_; }
  bool is_lambda(int var) const { return var < k_; }
  bool is_eplus(int var) const { return var >= k_ && var < k_ + r_; }
  int e_row(int var) const { return is_eplus(var) ? var - k_ : var - k_ - r_; }
  double cost(int var) const { return var < k_ ? 0.0 : 1.0; }

  // Column of variable `var` written into out[0..m_-1].
  void column_of(int var, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (is_lambda(var)) {
      for (int r = 0; r < r_; ++r) out[r] = cols_[var][r];
      out[r_] = 1.0;
    } else if (is_eplus(var)) {
      out[e_row(var)] = -1.0;
    } else {
      out[e_row(var)] = 1.0;
    }
  }

  void init_basis() {
    basis_.assign(m_, -1);
    in_basis_.assign(n_vars(), false);
    xb_.assign(m_, 0.0);
    binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);

    basis_[r_] = 0;  // lambda_0
    in_basis_[0] = true;
    for (int r = 0; r < r_; ++r) {
      const double resid = v_[r] - cols_[0][r];
      const int var = resid >= 0.0 ? k_ + r_ + r : k_ + r;  // e- : e+
      basis_[r] = var;
      in_basis_[var] = true;
      xb_[r] = std::abs(resid);
    }
    xb_[r_] = 1.0;
    refactorize();
  }

  // Rebuild the basis inverse by Gauss-Jordan with partial pivoting and
  // recompute the basic solution from it.
  void refactorize() {
    const int n = m_;
    std::vector<double> a(static_cast<std::size_t>(n) * 2 * n, 0.0);
    std::vector<double> col(n);
    for (int j = 0; j < n; ++j) {
      column_of(basis_[j], col);
      for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * 2 * n + j] = col[i];
    }
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * 2 * n + n + i] = 1.0;

    for (int piv = 0; piv < n; ++piv) {
      int best = piv;
      double best_abs = std::abs(a[static_cast<std::size_t>(piv) * 2 * n + piv]);
      for (int i = piv + 1; i < n; ++i) {
        const double cand = std::abs(a[static_cast<std::size_t>(i) * 2 * n + piv]);
        if (cand > best_abs) {
          best = i;
          best_abs = cand;
        }
      }
      if (best_abs < 1e-12) throw std::runtime_error("L1MasterLp: singular basis");
      if (best != piv) {
        for (int j = 0; j < 2 * n; ++j) {
          std::swap(a[static_cast<std::size_t>(piv) * 2 * n + j],
                    a[static_cast<std::size_t>(best) * 2 * n + j]);
        }
      }
      const double inv_p = 1.0 / a[static_cast<std::size_t>(piv) * 2 * n + piv];
      for (int j = 0; j < 2 * n; ++j) a[static_cast<std::size_t>(piv) * 2 * n + j] *= inv_p;
      for (int i = 0; i < n; ++i) {
        if (i == piv) continue;
        const double factor = a[static_cast<std::size_t>(i) * 2 * n + piv];
        if (factor == 0.0) continue;
        for (int j = 0; j < 2 * n; ++j) {
          a[static_cast<std::size_t>(i) * 2 * n + j] -=
              factor * a[static_cast<std::size_t>(piv) * 2 * n + j];
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        binv_[static_cast<std::size_t>(i) * n + j] = a[static_cast<std::size_t>(i) * 2 * n + n + j];
      }
    }
    // xb = B^-1 b with b = [v; 1]
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      const double* row = &binv_[static_cast<std::size_t>(i) * n];
      for (int r = 0; r < r_; ++r) acc += row[r] * v_[r];
      acc += row[r_];
      xb_[i] = acc < 0.0 && acc > -1e-9 ? 0.0 : acc;
    }
  }

  void compute_duals() {
    y_.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      const double c = cost(basis_[i]);
      if (c == 0.0) continue;
      const double* row = &binv_[static_cast<std::size_t>(i) * m_];
      for (int j = 0; j < m_; ++j) y_[j] += c * row[j];
    }
  }

  double reduced_cost_of(int var) const {
    if (is_lambda(var)) {
      double acc = y_[r_];
      const std::vector<double>& col = cols_[var];
      for (int r = 0; r < r_; ++r) acc += y_[r] * col[r];
      return -acc;
    }
    return is_eplus(var) ? 1.0 + y_[e_row(var)] : 1.0 - y_[e_row(var)];
  }

  // Entering variable, or -1 at optimality.
  int price(bool bland) const {
    constexpr double kTol = 1e-9;
    int best = -1;
    double best_value = -kTol;
    for (int var = 0; var < n_vars(); ++var) {
      if (in_basis_[var]) continue;
      const double d = reduced_cost_of(var);
      if (d < best_value) {
        best = var;
        best_value = d;
        if (bland) return best;
      }
    }
    return best;
  }

  std::vector<double> ftran(int var) const {
    std::vector<double> col(m_), w(m_, 0.0);
    column_of(var, const_cast<std::vector<double>&>(col));
    for (int i = 0; i < m_; ++i) {
      double acc = 0.0;
      const double* row = &binv_[static_cast<std::size_t>(i) * m_];
      for (int j = 0; j < m_; ++j) acc += row[j] * col[j];
      w[i] = acc;
    }
    return w;
  }

  int ratio_test(const std::vector<double>& w) const {
    constexpr double kPivTol = 1e-10;
    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m_; ++i) {
      if (w[i] <= kPivTol) continue;
      const double ratio = std::max(0.0, xb_[i]) / w[i];
      if (ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && (leave < 0 || basis_[i] < basis_[leave]))) {
        leave = i;
        best_ratio = ratio;
      }
    }
    return leave;
  }

  void pivot(int entering, int leave_pos, const std::vector<double>& w) {
    const double theta = std::max(0.0, xb_[leave_pos]) / w[leave_pos];
    for (int i = 0; i < m_; ++i) {
      if (i == leave_pos) continue;
      xb_[i] -= theta * w[i];
      if (xb_[i] < 0.0 && xb_[i] > -1e-9) xb_[i] = 0.0;
    }
    xb_[leave_pos] = theta;

    const double inv_pivot = 1.0 / w[leave_pos];
    double* prow = &binv_[static_cast<std::size_t>(leave_pos) * m_];
    for (int j = 0; j < m_; ++j) prow[j] *= inv_pivot;
    for (int i = 0; i < m_; ++i) {
      if (i == leave_pos || w[i] == 0.0) continue;
      double* row = &binv_[static_cast<std::size_t>(i) * m_];
      const double factor = w[i];
      for (int j = 0; j < m_; ++j) row[j] -= factor * prow[j];
    }

    in_basis_[basis_[leave_pos]] = false;
    in_basis_[entering] = true;
    basis_[leave_pos] = entering;
  }

  const std::vector<std::vector<double>>& cols_;
  std::vector<double> v_;
  int k_, r_, m_;

  std::vector<int> basis_;
  std::vector<bool> in_basis_;
  std::vector<double> xb_;
  std::vector<double> binv_;
  std::vector<double> y_;
};

}  // namespace gsp::detail

#endif  // GSP_LP_HPP
