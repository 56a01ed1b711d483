#ifndef GSP_EVAL_HPP
#define GSP_EVAL_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gsp/choice_matrix.hpp"
#include "gsp/core.hpp"
#include "gsp/datagen.hpp"
#include "gsp/enumerative_rb.hpp"
#include "gsp/gpt.hpp"
#include "gsp/halo_mnl.hpp"
#include "gsp/random.hpp"

namespace gsp {

// Expected L1 prediction error over a randomly drawn offer set:
// (1/|S_test|) sum_S sum_{i in S} |x_{i,S} - v_{i,S}|.
inline double l1_random(const ShareTable& x, const ShareTable& v) {
  if (v.n_sets() == 0) throw std::invalid_argument("l1_random: no test sets");
  if (x.offer_sets() != v.offer_sets()) {
    throw std::invalid_argument("l1_random: tables cover different offer sets");
  }
  double total = 0.0;
  for (int m = 0; m < v.n_sets(); ++m) {
    const auto& xr = x.row(m);
    const auto& vr = v.row(m);
    for (std::size_t pos = 0; pos < vr.size(); ++pos) total += std::abs(xr[pos] - vr[pos]);
  }
  return total / v.n_sets();
}

// Transaction-weighted variant: (1/|T_test|) sum_S T_S sum_i |x - v|.
inline double l1_weighted(const ShareTable& x, const EmpiricalDistribution& v, long t_test) {
  if (v.n_sets() == 0) throw std::invalid_argument("l1_weighted: no test sets");
  if (x.offer_sets() != v.offer_sets()) {
    throw std::invalid_argument("l1_weighted: tables cover different offer sets");
  }
  long total_count = 0;
  for (long c : v.counts) total_count += c;
  if (total_count != t_test) {
    throw std::invalid_argument("l1_weighted: transaction count mismatch");
  }
  double total = 0.0;
  for (int m = 0; m < v.n_sets(); ++m) {
    const auto& xr = x.row(m);
    const auto& vr = v.shares.row(m);
    double set_err = 0.0;
    for (std::size_t pos = 0; pos < vr.size(); ++pos) set_err += std::abs(xr[pos] - vr[pos]);
    total += static_cast<double>(v.counts[m]) * set_err;
  }
  return total / static_cast<double>(t_test);
}

enum class Method { GptR, GptI, GptIc, RbR, HaloMnl };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::GptR: return "gpt-r";
    case Method::GptI: return "gpt-i";
    case Method::GptIc: return "gpt-ic";
    case Method::RbR: return "rb-r";
    case Method::HaloMnl: return "halo-mnl";
  }
  return "?";
}

inline Method parse_method(const std::string& name) {
  if (name == "gpt-r") return Method::GptR;
  if (name == "gpt-i") return Method::GptI;
  if (name == "gpt-ic") return Method::GptIc;
  if (name == "rb-r") return Method::RbR;
  if (name == "halo-mnl") return Method::HaloMnl;
  throw std::invalid_argument("unknown method: " + name);
}

struct MethodSpec {
  Method method = Method::GptIc;
  GptConfig gpt;          // loss, gamma, delta, significance, seed, ...
  RbConfig rb;
  HaloFitOptions halo;

  static MethodSpec make(Method m) {
    MethodSpec spec;
    spec.method = m;
    switch (m) {
      case Method::GptR: spec.gpt = gpt_r_config(); break;
      case Method::GptI: spec.gpt = gpt_i_config(); break;
      case Method::GptIc: spec.gpt = gpt_ic_config(); break;
      default: break;
    }
    return spec;
  }
};

// A fitted method together with its prediction rule.
struct TrainedMethod {
  Method method = Method::GptIc;
  ChoiceModel model;         // gpt-* and rb-r
  InteractionMatrix halo_u;  // halo-mnl
  double train_objective = 0.0;
  long iterations = 0;

  ShareTable predict_on(const std::vector<OfferSet>& sets) const {
    if (method == Method::HaloMnl) {
      ShareTable x(sets);
      for (std::size_t m = 0; m < sets.size(); ++m) {
        const std::vector<double> p = halo_probability(halo_u, sets[m].items());
        x.row(static_cast<int>(m)) = p;
      }
      return x;
    }
    return predict(model, sets);
  }
};

inline TrainedMethod train_method(const MethodSpec& spec, const std::vector<Transaction>& txns,
                                  int n_products) {
  const EmpiricalDistribution emp = empirical(txns);
  const ProductCatalog catalog(n_products);
  TrainedMethod trained;
  trained.method = spec.method;
  switch (spec.method) {
    case Method::GptR:
    case Method::GptI:
    case Method::GptIc: {
      const FitResult r = fit(emp, catalog, spec.gpt);
      trained.model = r.model;
      trained.train_objective = r.objective;
      trained.iterations = r.iterations;
      break;
    }
    case Method::RbR: {
      const RbFit r = fit_rb(emp, catalog, spec.rb);
      trained.model = r.model;
      trained.train_objective = r.objective;
      trained.iterations = r.iterations;
      break;
    }
    case Method::HaloMnl: {
      const HaloFitResult r = fit_halo(emp, n_products, spec.halo);
      trained.halo_u = r.u;
      trained.train_objective = r.train_kl;
      trained.iterations = r.iterations;
      break;
    }
  }
  return trained;
}

struct FoldResult {
  int fold = 0;
  double l1 = 0.0;
  long t_test = 0;
  int m_test = 0;
  double train_objective = 0.0;
  double wall_seconds = 0.0;
};

struct EvaluationReport {
  std::string method;
  std::vector<FoldResult> folds;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double wall_seconds = 0.0;
};

namespace detail {

inline void summarize(EvaluationReport& report) {
  std::vector<double> errs;
  for (const FoldResult& f : report.folds) errs.push_back(f.l1);
  if (errs.empty()) return;
  std::sort(errs.begin(), errs.end());
  double sum = 0.0;
  for (double e : errs) sum += e;
  report.mean = sum / errs.size();
  const std::size_t h = errs.size() / 2;
  report.median = errs.size() % 2 == 1 ? errs[h] : 0.5 * (errs[h - 1] + errs[h]);
  report.max = errs.back();
}

}  // namespace detail

// Assortment-level cross-validation: the distinct assortments are
// shuffled with the run seed and split into n_folds nearly equal
// collections; each experiment trains on the complement's transactions
// and scores the transaction-weighted L1 error on the held-out fold.
inline EvaluationReport crossval(const std::vector<Transaction>& transactions, int n_folds,
                                 const MethodSpec& spec, int n_products, std::uint64_t seed) {
  if (n_folds < 2) throw std::invalid_argument("crossval: need at least two folds");
  std::set<OfferSet> distinct;
  for (const Transaction& t : transactions) distinct.insert(t.offer_set);
  if (static_cast<int>(distinct.size()) < n_folds) {
    throw std::invalid_argument("crossval: fewer distinct assortments than folds");
  }
  std::vector<OfferSet> sets(distinct.begin(), distinct.end());
  RandomEngine rng(seed);
  rng.shuffle(sets);

  const int base = static_cast<int>(sets.size()) / n_folds;
  const int extra = static_cast<int>(sets.size()) % n_folds;

  const auto t_start = std::chrono::steady_clock::now();
  EvaluationReport report;
  report.method = to_string(spec.method);
  int cursor = 0;
  for (int fold = 0; fold < n_folds; ++fold) {
    const int size = base + (fold < extra ? 1 : 0);
    std::set<OfferSet> held(sets.begin() + cursor, sets.begin() + cursor + size);
    cursor += size;

    std::vector<Transaction> train, test;
    for (const Transaction& t : transactions) {
      (held.count(t.offer_set) > 0 ? test : train).push_back(t);
    }
    if (train.empty()) throw std::invalid_argument("crossval: a training fold is empty");
    if (test.empty()) continue;  // no transactions landed on this fold's assortments

    const auto f_start = std::chrono::steady_clock::now();
    MethodSpec fold_spec = spec;
    fold_spec.gpt.rng_seed = seed ^ (0xabcd1234ULL + static_cast<std::uint64_t>(fold) * 7919ULL);
    const TrainedMethod trained = train_method(fold_spec, train, n_products);

    const EmpiricalDistribution emp_test = empirical(test);
    const ShareTable x = trained.predict_on(emp_test.offer_sets());

    FoldResult fr;
    fr.fold = fold;
    fr.l1 = l1_weighted(x, emp_test, emp_test.total);
    fr.t_test = emp_test.total;
    fr.m_test = emp_test.n_sets();
    fr.train_objective = trained.train_objective;
    fr.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - f_start).count();
    report.folds.push_back(fr);
  }
  detail::summarize(report);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

// One purchase event from the raw retail feed.
struct RetailRecord {
  std::string week;
  std::string store;
  std::string upc;
  std::string vendor;
};

// IRI-style preprocessing: items are keyed by vendor code, the top_k most
// frequent vendors become products 1..top_k by descending frequency (ties
// broken lexicographically) and everything else aggregates into the
// no-purchase option 0.  Each transaction's offer set is the set of
// products sold at least once in its (week, store) pair, plus option 0.
inline std::vector<Transaction> preprocess_retail(const std::vector<RetailRecord>& records,
                                                  int top_k = 9,
                                                  std::ostream* warnings = nullptr) {
  if (records.empty()) throw std::invalid_argument("preprocess_retail: no records");
  std::map<std::string, long> vendor_count;
  for (const RetailRecord& r : records) vendor_count[r.vendor] += 1;

  std::vector<std::pair<std::string, long>> ranked(vendor_count.begin(), vendor_count.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(ranked.size()) < top_k) {
    if (warnings != nullptr) {
      *warnings << "preprocess_retail: only " << ranked.size() << " distinct vendors, using all\n";
    }
    top_k = static_cast<int>(ranked.size());
  }
  std::map<std::string, ProductId> vendor_id;
  for (int i = 0; i < top_k; ++i) vendor_id[ranked[i].first] = i + 1;

  auto id_of = [&](const std::string& vendor) {
    auto it = vendor_id.find(vendor);
    return it == vendor_id.end() ? kNoPurchase : it->second;
  };

  std::map<std::pair<std::string, std::string>, std::set<ProductId>> sold;
  for (const RetailRecord& r : records) {
    sold[{r.week, r.store}].insert(id_of(r.vendor));
  }
  std::map<std::pair<std::string, std::string>, OfferSet> assortment;
  for (const auto& [key, ids] : sold) {
    assortment.emplace(key, OfferSet(std::vector<ProductId>(ids.begin(), ids.end())));
  }

  std::vector<Transaction> out;
  out.reserve(records.size());
  for (const RetailRecord& r : records) {
    out.emplace_back(assortment.at({r.week, r.store}), id_of(r.vendor));
  }
  return out;
}

}  // namespace gsp

#endif  // GSP_EVAL_HPP
