#ifndef GSP_CHOICE_MATRIX_HPP
#define GSP_CHOICE_MATRIX_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gsp/core.hpp"

namespace gsp {

// Probabilities over the items of a fixed collection of offer sets,
// stored aligned with each set's sorted item list.  Used for empirical
// frequencies, model predictions and ground-truth probabilities alike.
class ShareTable {
 public:
  ShareTable() = default;
  explicit ShareTable(std::vector<OfferSet> sets) : sets_(std::move(sets)) {
    probs_.resize(sets_.size());
    for (std::size_t m = 0; m < sets_.size(); ++m) {
      probs_[m].assign(sets_[m].items().size(), 0.0);
    }
  }

  const std::vector<OfferSet>& offer_sets() const { return sets_; }
  int n_sets() const { return static_cast<int>(sets_.size()); }

  double at(ProductId j, int m) const {
    const int pos = sets_[m].position(j);
    return pos < 0 ? 0.0 : probs_[m][pos];
  }
  void set(ProductId j, int m, double p) {
    const int pos = sets_[m].position(j);
    if (pos < 0) throw std::invalid_argument("ShareTable: item not in offer set");
    probs_[m][pos] = p;
  }

  std::vector<double>& row(int m) { return probs_[m]; }
  const std::vector<double>& row(int m) const { return probs_[m]; }

 private:
  std::vector<OfferSet> sets_;
  std::vector<std::vector<double>> probs_;
};

// Observed choice frequencies v_{j,S} over the M training offer sets,
// with per-set transaction counts.
struct EmpiricalDistribution {
  ShareTable shares;
  std::vector<long> counts;  // T_S per offer set
  long total = 0;            // T

  const std::vector<OfferSet>& offer_sets() const { return shares.offer_sets(); }
  int n_sets() const { return shares.n_sets(); }
  double v(ProductId j, int m) const { return shares.at(j, m); }
};

// One behavior's choice probabilities across all training offer sets
// (a column of the choice matrix A).  Entries are stored per offer set,
// sparse, in ascending item order; items absent from a set carry zero.
struct ChoiceColumn {
  std::vector<std::vector<std::pair<ProductId, double>>> by_set;

  int n_sets() const { return static_cast<int>(by_set.size()); }

  double at(ProductId j, int m) const {
    for (const auto& [item, p] : by_set[m]) {
      if (item == j) return p;
    }
    return 0.0;
  }
};

inline ChoiceColumn behavior_column(const Behavior& behavior,
                                    const std::vector<OfferSet>& offer_sets) {
  ChoiceColumn column;
  column.by_set.resize(offer_sets.size());
  for (std::size_t m = 0; m < offer_sets.size(); ++m) {
    auto dist = choice_distribution(behavior, offer_sets[m]);
    auto& entries = column.by_set[m];
    entries.reserve(dist.size());
    for (const auto& [item, p] : dist) entries.emplace_back(item, p);  // map is sorted
  }
  return column;
}

// Columns of A for a set of behaviors, aligned with the M training offer
// sets.  Dense views are only ever materialized inside the master solver.
struct ChoiceMatrixView {
  std::vector<ChoiceColumn> columns;
  std::vector<OfferSet> offer_sets;

  ChoiceMatrixView() = default;
  ChoiceMatrixView(const std::vector<Behavior>& behaviors, std::vector<OfferSet> sets)
      : offer_sets(std::move(sets)) {
    columns.reserve(behaviors.size());
    for (const Behavior& b : behaviors) columns.push_back(behavior_column(b, offer_sets));
  }

  void add_behavior(const Behavior& b) {
    columns.push_back(behavior_column(b, offer_sets));
  }

  int n_columns() const { return static_cast<int>(columns.size()); }
};

// x = A * lambda: the mixture's predicted choice probabilities.
inline ShareTable predict(const ChoiceModel& model, const std::vector<OfferSet>& offer_sets) {
  model.validate();
  ShareTable x(offer_sets);
  for (std::size_t k = 0; k < model.behaviors.size(); ++k) {
    const double w = model.weights[k];
    if (w == 0.0) continue;
    for (std::size_t m = 0; m < offer_sets.size(); ++m) {
      auto dist = choice_distribution(model.behaviors[k], offer_sets[m]);
      for (const auto& [item, p] : dist) {
        x.set(item, static_cast<int>(m), x.at(item, static_cast<int>(m)) + w * p);
      }
    }
  }
  return x;
}

// Empirical probabilities v_{j,S} from raw transactions.  Offer sets are
// deduplicated by canonical sorted item list and ordered lexicographically.
inline EmpiricalDistribution empirical(const std::vector<Transaction>& transactions) {
  if (transactions.empty()) {
    throw std::invalid_argument("empirical: no transactions");
  }
  std::map<OfferSet, std::map<ProductId, long>> tally;
  for (const Transaction& t : transactions) {
    tally[t.offer_set][t.chosen] += 1;
  }
  std::vector<OfferSet> sets;
  sets.reserve(tally.size());
  for (const auto& [s, _] : tally) sets.push_back(s);

  EmpiricalDistribution emp;
  emp.shares = ShareTable(sets);
  emp.counts.resize(sets.size(), 0);
  for (std::size_t m = 0; m < sets.size(); ++m) {
    long t_s = 0;
    for (const auto& [item, c] : tally[sets[m]]) t_s += c;
    emp.counts[m] = t_s;
    emp.total += t_s;
    for (const auto& [item, c] : tally[sets[m]]) {
      emp.shares.set(item, static_cast<int>(m),
                     static_cast<double>(c) / static_cast<double>(t_s));
    }
  }
  return emp;
}

}  // namespace gsp

#endif  // GSP_CHOICE_MATRIX_HPP
