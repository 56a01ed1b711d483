#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "gsp/choice_matrix.hpp"
#include "gsp/datagen.hpp"
#include "gsp/enumerative_rb.hpp"
#include "gsp/random.hpp"

using namespace gsp;

namespace {

bool same_column(const ChoiceColumn& a, const ChoiceColumn& b, const std::vector<OfferSet>& sets) {
  for (std::size_t m = 0; m < sets.size(); ++m) {
    for (ProductId j : sets[m].items()) {
      if (std::abs(a.at(j, static_cast<int>(m)) - b.at(j, static_cast<int>(m))) > 1e-12) {
        return false;
      }
    }
  }
  return true;
}

double kl_of(const ShareTable& x, const EmpiricalDistribution& emp) {
  double total = 0.0;
  for (int m = 0; m < emp.n_sets(); ++m) {
    const double w = static_cast<double>(emp.counts[m]) / emp.total;
    for (std::size_t pos = 0; pos < emp.shares.row(m).size(); ++pos) {
      const double v = emp.shares.row(m)[pos];
      if (v > 0.0) total += w * v * std::log(v / std::max(x.row(m)[pos], 1e-10));
    }
  }
  return total;
}

}  // namespace

TEST_CASE("enumerate_rankings emits the minimal prefix length", "[rb]") {
  SECTION("nothing missing: singleton prefixes") {
    const std::vector<OfferSet> sets{OfferSet({1, 2})};  // = {0,1,2}, all of N=3
    const auto behaviors = enumerate_rankings(sets, ProductCatalog(3));
    REQUIRE(behaviors.size() == 3);
    for (const auto& b : behaviors) {
      REQUIRE(b.ranked().size() == 1);
      REQUIRE(b.indifference().size() == 2);
      REQUIRE(b.level() == 1);
    }
  }
  SECTION("one product missing: ordered pairs") {
    const std::vector<OfferSet> sets{OfferSet({1, 2}), OfferSet({1})};  // {0,1} misses one
    const auto behaviors = enumerate_rankings(sets, ProductCatalog(3));
    REQUIRE(behaviors.size() == 6);
    for (const auto& b : behaviors) REQUIRE(b.ranked().size() == 2);
  }
  SECTION("cap arithmetic") {
    // N=10 with 9 products missing: 10!/0! = 3,628,800 fits the default cap
    REQUIRE(detail::ranking_count(10, 10, 10'000'000) == 3'628'800);
    REQUIRE_THROWS_AS(detail::ranking_count(10, 10, 1'000'000), CapExceededError);
    const std::vector<OfferSet> sets{OfferSet(std::vector<ProductId>{})};  // {0}: m = N-1
    REQUIRE_THROWS_AS(enumerate_rankings(sets, ProductCatalog(10), 1'000'000), CapExceededError);
  }
}

TEST_CASE("every full ranking matches exactly one enumerated behavior", "[rb]") {
  const std::vector<OfferSet> sets{OfferSet({1}), OfferSet({2}), OfferSet({1, 2})};
  const ProductCatalog catalog(3);
  const auto behaviors = enumerate_rankings(sets, catalog);
  REQUIRE(behaviors.size() == 6);

  std::vector<ProductId> perm{0, 1, 2};
  std::sort(perm.begin(), perm.end());
  do {
    const ChoiceColumn full = behavior_column(Behavior(perm, {}, 1), sets);
    // exactly one emitted behavior carries this ranking's prefix, and it
    // induces the same columns
    int prefix_matches = 0;
    for (const auto& b : behaviors) {
      if (std::equal(b.ranked().begin(), b.ranked().end(), perm.begin())) {
        ++prefix_matches;
        REQUIRE(same_column(full, behavior_column(b, sets), sets));
      }
    }
    REQUIRE(prefix_matches == 1);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("loss of rationality is zero for RUM-generated data", "[rb]") {
  // a single rational behavior generates the data
  const Behavior gen({3, 1, 2}, {0}, 1);
  const std::vector<OfferSet> sets{OfferSet({1, 2, 3}), OfferSet({1, 2}), OfferSet({2, 3}),
                                   OfferSet({1, 3})};
  std::vector<Transaction> txns;
  for (const OfferSet& s : sets) {
    for (const auto& [item, p] : choice_distribution(gen, s)) {
      for (int i = 0; i < static_cast<int>(p * 12 + 0.5); ++i) txns.emplace_back(s, item);
    }
  }
  const RationalityReport report = loss_of_rationality(empirical(txns), ProductCatalog(4));
  REQUIRE(report.lor <= 1e-6);
  REQUIRE_FALSE(report.is_irrational);
}

TEST_CASE("loss of rationality is positive on the worked example", "[rb]") {
  const EmpiricalDistribution emp = fixtures::camera_empirical();
  const RationalityReport report = loss_of_rationality(emp, fixtures::camera_catalog());
  REQUIRE(report.lor > 1e-4);       // regularity violated: share of 2 rises .50 -> .57
  REQUIRE(report.n_columns == 12);  // one product missing: 4*3 ordered pairs

  SECTION("the RB-R fit reaches the same objective") {
    const RbFit fit = fit_rb(emp, fixtures::camera_catalog());
    REQUIRE(fit.objective == Catch::Approx(report.lor).margin(1e-6));
    REQUIRE(fit.n_columns == 12);
  }
  SECTION("exact probabilities from the generating model give the same LoR") {
    const ChoiceModel gt(fixtures::camera_behaviors(), fixtures::camera_weights());
    const ShareTable x = predict(gt, emp.offer_sets());
    std::vector<Transaction> txns;
    for (int m = 0; m < emp.n_sets(); ++m) {
      const auto& items = emp.offer_sets()[m].items();
      for (std::size_t pos = 0; pos < items.size(); ++pos) {
        const int count = static_cast<int>(x.row(m)[pos] * 100 + 0.5);
        for (int i = 0; i < count; ++i) txns.emplace_back(emp.offer_sets()[m], items[pos]);
      }
    }
    const RationalityReport again =
        loss_of_rationality(empirical(txns), fixtures::camera_catalog());
    REQUIRE(again.lor == Catch::Approx(report.lor).margin(1e-10));
  }
  SECTION("LoR is invariant to duplicated transactions") {
    std::vector<Transaction> tripled;
    for (int rep = 0; rep < 3; ++rep) {
      for (const Transaction& t : fixtures::camera_transactions()) tripled.push_back(t);
    }
    const RationalityReport scaled =
        loss_of_rationality(empirical(tripled), fixtures::camera_catalog());
    REQUIRE(scaled.lor == Catch::Approx(report.lor).margin(1e-10));
  }
}

TEST_CASE("LoR lower-bounds every explicit rational model", "[rb]") {
  RandomEngine rng(31);
  const int n = 5;
  for (int trial = 0; trial < 5; ++trial) {
    // synthetic data from a mildly irrational source
    GroundTruth gt = gen_gsp_instance(n, 6, 40, 3, rng);
    const std::vector<OfferSet> sets = gen_offer_sets(n, 6, rng);
    const EmpiricalDistribution emp = empirical(sample_transactions(gt, sets, 600, rng));
    const double lor = loss_of_rationality(emp, ProductCatalog(n)).lor;

    for (int probe = 0; probe < 10; ++probe) {
      std::vector<Behavior> rankings;
      for (int k = 0; k < 4; ++k) {
        std::vector<ProductId> products(n);
        for (int j = 0; j < n; ++j) products[j] = j;
        rng.shuffle(products);
        rankings.emplace_back(products, std::vector<ProductId>{}, 1);
      }
      const ChoiceModel rational(rankings, rng.simplex(4));
      REQUIRE(kl_of(predict(rational, emp.offer_sets()), emp) >= lor - 1e-9);
    }
  }
}

TEST_CASE("RB-R fitted predictions satisfy regularity on nested offer sets", "[rb]") {
  const EmpiricalDistribution emp = fixtures::camera_empirical();
  const RbFit fit = fit_rb(emp, fixtures::camera_catalog());
  const int n = 4;
  // exhaustive over nested pairs in the 4-product catalog
  for (unsigned mask = 1; mask < (1u << (n - 1)); ++mask) {
    std::vector<ProductId> items;
    for (int j = 1; j < n; ++j) {
      if (mask >> (j - 1) & 1) items.push_back(j);
    }
    const OfferSet small(items);
    const ShareTable ps = predict(fit.model, {small});
    for (ProductId extra = 1; extra < n; ++extra) {
      if (small.contains(extra)) continue;
      std::vector<ProductId> grown = items;
      grown.push_back(extra);
      const OfferSet large(grown);
      const ShareTable pl = predict(fit.model, {large});
      for (ProductId j : small.items()) {
        REQUIRE(pl.at(j, 0) <= ps.at(j, 0) + 1e-9);
      }
    }
  }
}

TEST_CASE("loss_of_rationality rejects items outside the catalog", "[rb]") {
  const EmpiricalDistribution emp = fixtures::camera_empirical();
  REQUIRE_THROWS_AS(loss_of_rationality(emp, ProductCatalog(3)), std::invalid_argument);
}
