#ifndef GSP_HALO_MNL_HPP
#define GSP_HALO_MNL_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gsp/choice_matrix.hpp"
#include "gsp/core.hpp"

namespace gsp {

// Pairwise interaction matrix of the Halo-MNL model: diagonal entries are
// item-specific utilities, off-diagonal u_{k,i} is the effect of product k
// on product i.  u_{0,0} is the identification anchor and stays 0 in
// fitted models.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;
  explicit InteractionMatrix(int n, double fill = 0.0)
      : n_(n), u_(static_cast<std::size_t>(n) * n, fill) {
    if (n < 1) throw std::invalid_argument("InteractionMatrix: n must be positive");
  }

  int n() const { return n_; }
  double operator()(int k, int i) const { return u_[static_cast<std::size_t>(k) * n_ + i]; }
  double& operator()(int k, int i) { return u_[static_cast<std::size_t>(k) * n_ + i]; }
  const std::vector<double>& data() const { return u_; }
  std::vector<double>& data() { return u_; }

 private:
  int n_ = 0;
  std::vector<double> u_;
};

// P(i|S) = exp(u_ii + sum_{k not in S} u_ki) / sum_{j in S} exp(...).
// The interaction sum runs over the products absent from the offer set,
// as printed in the source formulation.  Returned probabilities align
// with `items` and sum to 1.
inline std::vector<double> halo_probability(const InteractionMatrix& u,
                                            const std::vector<ProductId>& items) {
  if (items.empty()) throw std::invalid_argument("halo_probability: empty offer set");
  std::vector<bool> offered(u.n(), false);
  for (ProductId j : items) {
    if (j < 0 || j >= u.n()) throw std::invalid_argument("halo_probability: item outside matrix");
    offered[j] = true;
  }
  std::vector<double> eta(items.size());
  for (std::size_t idx = 0; idx < items.size(); ++idx) {
    const ProductId i = items[idx];
    double e = u(i, i);
    for (int k = 0; k < u.n(); ++k) {
      if (!offered[k]) e += u(k, i);
    }
    eta[idx] = e;
  }
  const double peak = *std::max_element(eta.begin(), eta.end());
  double total = 0.0;
  std::vector<double> p(items.size());
  for (std::size_t idx = 0; idx < items.size(); ++idx) {
    p[idx] = std::exp(eta[idx] - peak);
    total += p[idx];
  }
  for (double& pi : p) pi /= total;
  return p;
}

inline std::vector<double> halo_probability(const InteractionMatrix& u, const OfferSet& s) {
  return halo_probability(u, s.items());
}

// sum_S T_S sum_j v_{j,S} log P(j|S; u)
inline double halo_loglik(const InteractionMatrix& u, const EmpiricalDistribution& emp) {
  const auto& sets = emp.offer_sets();
  double ll = 0.0;
  for (int m = 0; m < static_cast<int>(sets.size()); ++m) {
    const std::vector<double> p = halo_probability(u, sets[m].items());
    double inner = 0.0;
    for (std::size_t idx = 0; idx < p.size(); ++idx) {
      const double v = emp.shares.row(m)[idx];
      if (v > 0.0) inner += v * std::log(p[idx]);
    }
    ll += static_cast<double>(emp.counts[m]) * inner;
  }
  return ll;
}

// Analytic gradient of halo_loglik: the softmax pull T_S (v_j - P(j|S))
// lands on u_jj for j in S and on u_kj for every absent k.
inline InteractionMatrix halo_loglik_gradient(const InteractionMatrix& u,
                                              const EmpiricalDistribution& emp) {
  const auto& sets = emp.offer_sets();
  InteractionMatrix grad(u.n(), 0.0);
  for (int m = 0; m < static_cast<int>(sets.size()); ++m) {
    const auto& items = sets[m].items();
    const std::vector<double> p = halo_probability(u, items);
    const double t_s = static_cast<double>(emp.counts[m]);
    for (std::size_t idx = 0; idx < items.size(); ++idx) {
      const double pull = t_s * (emp.shares.row(m)[idx] - p[idx]);
      const ProductId i = items[idx];
      grad(i, i) += pull;
      for (int k = 0; k < u.n(); ++k) {
        if (!sets[m].contains(k)) grad(k, i) += pull;
      }
    }
  }
  return grad;
}

struct HaloFitOptions {
  double grad_tol = 1e-6;  // max-norm of the (unnormalized) log-likelihood gradient
  long max_iters = 5000;
};

struct HaloFitResult {
  InteractionMatrix u;
  double loglik = 0.0;      // sum_S T_S sum_j v_{j,S} log P(j|S)
  double train_kl = 0.0;    // KL objective of the fitted probabilities
  long iterations = 0;
  bool converged = false;
  double grad_max = 0.0;    // final gradient max-norm
  std::vector<double> loglik_trace;  // accepted iterates, non-decreasing
};

// Maximum-likelihood fit by first-order ascent from u = 0 with an
// adaptive trial step and backtracking; u_00 is pinned at 0.  Saturated
// instances drive some utilities toward infinity, which the growing step
// follows until the gradient test fires.
inline HaloFitResult fit_halo(const EmpiricalDistribution& emp, int n_products,
                              const HaloFitOptions& opt = {}) {
  const auto& sets = emp.offer_sets();
  const int n = n_products;
  for (const OfferSet& s : sets) {
    if (s.items().back() >= n) throw std::invalid_argument("fit_halo: item outside catalog");
  }
  const double t_total = static_cast<double>(emp.total);

  // ascent on f(u) = LL(u) / T with u_00 pinned
  auto objective = [&](const InteractionMatrix& u) { return halo_loglik(u, emp) / t_total; };
  auto gradient = [&](const InteractionMatrix& u) {
    InteractionMatrix g = halo_loglik_gradient(u, emp);
    for (double& gi : g.data()) gi /= t_total;
    g(0, 0) = 0.0;  // identification anchor
    return g;
  };

  InteractionMatrix u(n, 0.0);
  InteractionMatrix grad = gradient(u);
  double f = objective(u);
  double step = 1.0;

  HaloFitResult result;
  result.loglik_trace.push_back(f * t_total);
  long iter = 0;
  double grad_max = 0.0;
  InteractionMatrix prev_u = u;
  InteractionMatrix prev_grad = grad;
  bool have_prev = false;
  for (; iter < opt.max_iters; ++iter) {
    grad_max = 0.0;
    for (double g : grad.data()) grad_max = std::max(grad_max, std::abs(g));
    if (grad_max * t_total < opt.grad_tol) {
      result.converged = true;
      break;
    }
    double grad_sq = 0.0;
    for (double g : grad.data()) grad_sq += g * g;

    // Alternating Barzilai-Borwein trial steps; saturated likelihoods
    // drive some utilities toward infinity and the spectral step follows
    // the drift where a fixed schedule crawls.
    if (have_prev) {
      double ss = 0.0, sy = 0.0, yy = 0.0;
      for (std::size_t i = 0; i < u.data().size(); ++i) {
        const double s = u.data()[i] - prev_u.data()[i];
        const double y = prev_grad.data()[i] - grad.data()[i];
        ss += s * s;
        sy += s * y;
        yy += y * y;
      }
      if (sy > 1e-16) {
        const double bb = iter % 2 == 0 ? ss / sy : sy / std::max(yy, 1e-300);
        step = std::min(bb, 1e8);
      }
    }
    prev_u = u;
    prev_grad = grad;

    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      InteractionMatrix trial = u;
      for (std::size_t i = 0; i < trial.data().size(); ++i) {
        trial.data()[i] += step * grad.data()[i];
      }
      const double f_trial = objective(trial);
      if (f_trial >= f + 1e-4 * step * grad_sq) {
        u = std::move(trial);
        f = f_trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step underflow: nothing left to gain
    result.loglik_trace.push_back(f * t_total);
    step *= 2.0;
    grad = gradient(u);
    have_prev = true;
  }

  f = objective(u);
  grad = gradient(u);
  grad_max = 0.0;
  for (double g : grad.data()) grad_max = std::max(grad_max, std::abs(g));

  result.u = std::move(u);
  result.loglik = f * t_total;
  result.iterations = iter;
  result.grad_max = grad_max * t_total;
  if (result.grad_max < opt.grad_tol) result.converged = true;

  double kl = 0.0;
  for (int m = 0; m < static_cast<int>(sets.size()); ++m) {
    const std::vector<double> p = halo_probability(result.u, sets[m].items());
    const double weight = static_cast<double>(emp.counts[m]) / t_total;
    for (std::size_t idx = 0; idx < sets[m].items().size(); ++idx) {
      const double v = emp.shares.row(m)[idx];
      if (v > 0.0) kl += weight * v * std::log(v / p[idx]);
    }
  }
  result.train_kl = kl;
  return result;
}

// Row-major CSV with a one-line header carrying N.
inline void save_interaction_csv(std::ostream& os, const InteractionMatrix& u) {
  os << u.n() << "\n";
  char buffer[64];
  for (int k = 0; k < u.n(); ++k) {
    for (int i = 0; i < u.n(); ++i) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", u(k, i));
      os << (i == 0 ? "" : ",") << buffer;
    }
    os << "\n";
  }
}

inline void save_interaction_csv(const std::string& path, const InteractionMatrix& u) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_interaction_csv: cannot open " + path);
  save_interaction_csv(os, u);
}

inline InteractionMatrix load_interaction_csv(std::istream& is) {
  int n = 0;
  if (!(is >> n) || n < 1) throw std::runtime_error("load_interaction_csv: bad header");
  InteractionMatrix u(n, 0.0);
  std::string line;
  std::getline(is, line);  // rest of header line
  for (int k = 0; k < n; ++k) {
    if (!std::getline(is, line)) throw std::runtime_error("load_interaction_csv: truncated");
    std::stringstream ss(line);
    std::string cell;
    for (int i = 0; i < n; ++i) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("load_interaction_csv: short row");
      u(k, i) = std::stod(cell);
    }
  }
  return u;
}

inline InteractionMatrix load_interaction_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_interaction_csv: cannot open " + path);
  return load_interaction_csv(is);
}

}  // namespace gsp

#endif  // GSP_HALO_MNL_HPP
