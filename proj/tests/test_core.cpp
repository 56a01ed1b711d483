#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "gsp/core.hpp"
#include "gsp/random.hpp"

using namespace gsp;

namespace {

// Independent oracle for the spurious-interaction count: enumerate every
// (target, booster-set) pair and check behaviorally that the boosters'
// joint presence makes the target chosen while it is not chosen alone.
// Only valid for behaviors that do not rank the no-purchase option.
unsigned long long spurious_oracle(const Behavior& b) {
  const auto& ranked = b.ranked();
  const int level = b.level();
  unsigned long long count = 0;
  for (int r = level; r <= static_cast<int>(ranked.size()); ++r) {
    const ProductId target = ranked[r - 1];
    const std::vector<ProductId> higher(ranked.begin(), ranked.begin() + r - 1);
    const int h = static_cast<int>(higher.size());
    for (unsigned mask = 0; mask < (1u << h); ++mask) {
      if (__builtin_popcount(mask) != level - 1) continue;
      std::vector<ProductId> with = {target};
      for (int i = 0; i < h; ++i) {
        if (mask >> i & 1) with.push_back(higher[i]);
      }
      auto boosted = choice_distribution(b, OfferSet(with));
      auto alone = choice_distribution(b, OfferSet({target}));
      const bool chosen_boosted = boosted.count(target) > 0 && boosted[target] == 1.0;
      const bool chosen_alone = alone.count(target) > 0;
      if (chosen_boosted && !chosen_alone) ++count;
    }
  }
  return count;
}

double total_mass(const std::map<ProductId, double>& dist) {
  double total = 0.0;
  for (const auto& [j, p] : dist) total += p;
  return total;
}

Behavior random_behavior(RandomEngine& rng, int n, bool rational_only) {
  std::vector<ProductId> products(n);
  for (int j = 0; j < n; ++j) products[j] = j;
  rng.shuffle(products);
  const int p_len = rng.uniform_int(0, n - 1);
  const int i_len = rng.uniform_int(0, n - p_len);
  std::vector<ProductId> ranked(products.begin(), products.begin() + p_len);
  std::vector<ProductId> indiff(products.begin() + p_len, products.begin() + p_len + i_len);
  const int level = rational_only ? 1 : rng.uniform_int(1, p_len + 1);
  return Behavior(std::move(ranked), std::move(indiff), level);
}

}  // namespace

TEST_CASE("offer sets are canonical and always contain the no-purchase option", "[core]") {
  OfferSet s({5, 2, 1});
  REQUIRE(s.items() == std::vector<ProductId>{0, 1, 2, 5});
  REQUIRE(s.contains(0));
  REQUIRE(s == OfferSet({1, 2, 5, 0}));
  REQUIRE_THROWS_AS(OfferSet({-1, 2}), std::invalid_argument);
}

TEST_CASE("transaction chosen item must be offered", "[core]") {
  REQUIRE_NOTHROW(Transaction(OfferSet({1, 2}), 1));
  REQUIRE_NOTHROW(Transaction(OfferSet({1, 2}), 0));
  REQUIRE_THROWS_AS(Transaction(OfferSet({1, 2}), 3), std::invalid_argument);
}

TEST_CASE("behavior invariants", "[core]") {
  REQUIRE_NOTHROW(Behavior({2, 3, 5}, {1, 4}, 2));
  REQUIRE_THROWS_AS(Behavior({2, 3}, {3}, 1), std::invalid_argument);  // overlap
  REQUIRE_THROWS_AS(Behavior({2, 3}, {}, 4), std::invalid_argument);   // level > |P|+1
  REQUIRE_THROWS_AS(Behavior({2, 3}, {}, 0), std::invalid_argument);
  REQUIRE(Behavior({2}, {}, 1).rational());
  REQUIRE_FALSE(Behavior({2, 3}, {}, 2).rational());
}

TEST_CASE("catalog needs at least two products", "[core]") {
  REQUIRE_THROWS_AS(ProductCatalog(1), std::invalid_argument);
  REQUIRE(ProductCatalog(4).contains(0));
  REQUIRE_FALSE(ProductCatalog(4).contains(4));
}

TEST_CASE("restrict keeps order and drops unavailable products", "[core]") {
  const Behavior b({2, 3, 5}, {1, 4}, 1);

  auto [p1, i1] = restrict(b, OfferSet({2, 5, 1}));
  REQUIRE(p1 == std::vector<ProductId>{2, 5});
  REQUIRE(i1 == std::vector<ProductId>{1});

  auto [p3, i3] = restrict(b, OfferSet({1}));
  REQUIRE(p3.empty());
  REQUIRE(i3 == std::vector<ProductId>{1});

  const Behavior empty({}, {}, 1);
  auto [pe, ie] = restrict(empty, OfferSet({2, 5, 1}));
  REQUIRE(pe.empty());
  REQUIRE(ie.empty());
}

TEST_CASE("restrict is idempotent", "[core]") {
  RandomEngine rng(20240401);
  for (int trial = 0; trial < 50; ++trial) {
    const Behavior b = random_behavior(rng, 6, true);
    std::vector<ProductId> items;
    for (int j = 1; j < 6; ++j) {
      if (rng.uniform01() < 0.5) items.push_back(j);
    }
    const OfferSet s(items);
    auto [p_s, i_s] = restrict(b, s);
    auto [p_2, i_2] = restrict(Behavior(p_s, i_s, 1), s);
    REQUIRE(p_2 == p_s);
    REQUIRE(i_2 == i_s);
  }
}

TEST_CASE("choice distribution follows the level semantics", "[core]") {
  const Behavior c1({2, 3, 5}, {1, 4}, 1);
  const Behavior c2({2, 3, 5}, {1, 4}, 2);

  SECTION("strictly ranked choice") {
    auto d = choice_distribution(c1, OfferSet({2, 5, 1}));
    REQUIRE(d == std::map<ProductId, double>{{2, 1.0}});
    auto d2 = choice_distribution(c2, OfferSet({2, 5, 1}));
    REQUIRE(d2 == std::map<ProductId, double>{{5, 1.0}});
  }
  SECTION("uniform choice from the indifference set") {
    auto d = choice_distribution(c2, OfferSet({2, 1, 4}));
    REQUIRE(d.size() == 2);
    REQUIRE(d[1] == 0.5);
    REQUIRE(d[4] == 0.5);
  }
  SECTION("leaving without purchase lands on option 0") {
    auto d = choice_distribution(c2, OfferSet({1}));
    REQUIRE(d == std::map<ProductId, double>{{0, 1.0}});
  }
  SECTION("level-1 falls through to the indifference set") {
    auto d = choice_distribution(c1, OfferSet({1}));
    REQUIRE(d == std::map<ProductId, double>{{1, 1.0}});
    auto d4 = choice_distribution(c1, OfferSet({1, 4}));
    REQUIRE(d4[1] == 0.5);
    REQUIRE(d4[4] == 0.5);
  }
  SECTION("no-purchase can be ranked: regularity violation for option 0") {
    const Behavior b({3, 0, 1, 2}, {}, 2);
    auto small = choice_distribution(b, OfferSet({0, 1, 2}));
    REQUIRE(small == std::map<ProductId, double>{{1, 1.0}});
    auto large = choice_distribution(b, OfferSet({0, 1, 2, 3}));
    REQUIRE(large == std::map<ProductId, double>{{0, 1.0}});
  }
  SECTION("empty behavior is a forced no-purchase") {
    auto d = choice_distribution(Behavior({}, {}, 1), OfferSet({1, 2}));
    REQUIRE(d == std::map<ProductId, double>{{0, 1.0}});
  }
}

TEST_CASE("choice distribution is a probability distribution on the offer set", "[core]") {
  RandomEngine rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Behavior b = random_behavior(rng, 7, false);
    std::vector<ProductId> items;
    for (int j = 1; j < 7; ++j) {
      if (rng.uniform01() < 0.5) items.push_back(j);
    }
    const OfferSet s(items);
    auto dist = choice_distribution(b, s);
    REQUIRE(total_mass(dist) == Catch::Approx(1.0).margin(1e-12));
    for (const auto& [j, p] : dist) {
      REQUIRE(s.contains(j));
      REQUIRE(p > 0.0);
    }
  }
}

TEST_CASE("rational behaviors satisfy regularity (exhaustive, N=6)", "[core]") {
  RandomEngine rng(99);
  const int n = 6;
  for (int trial = 0; trial < 40; ++trial) {
    const Behavior b = random_behavior(rng, n, true);
    for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
      std::vector<ProductId> items;
      for (int j = 1; j < n; ++j) {
        if (mask >> (j - 1) & 1) items.push_back(j);
      }
      const OfferSet s(items);
      auto base = choice_distribution(b, s);
      for (ProductId extra = 1; extra < n; ++extra) {
        if (s.contains(extra)) continue;
        std::vector<ProductId> grown = items;
        grown.push_back(extra);
        auto larger = choice_distribution(b, OfferSet(grown));
        for (ProductId j : s.items()) {
          const double before = base.count(j) ? base[j] : 0.0;
          const double after = larger.count(j) ? larger[j] : 0.0;
          REQUIRE(after <= before + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("spurious interaction count: closed form", "[core]") {
  // |P|=5, i=2: 1+2+3+4 = 10 interactions of degree 2
  REQUIRE(spurious_interaction_count(Behavior({1, 2, 3, 4, 5}, {}, 2)) == 10ULL);
  // |P|=2, i=2: a single possible booster
  REQUIRE(spurious_interaction_count(Behavior({1, 2}, {}, 2)) == 1ULL);
  // |P|=4, i=3: C(2,2) + C(3,2) = 4
  REQUIRE(spurious_interaction_count(Behavior({1, 2, 3, 4}, {}, 3)) == 4ULL);
  // empty sum when i-1 > |P|-1
  REQUIRE(spurious_interaction_count(Behavior({1, 2}, {3}, 3)) == 0ULL);
  // the formula evaluated at i=1 yields |P|
  REQUIRE(spurious_interaction_count(Behavior({1, 2, 3}, {}, 1)) == 3ULL);
}

TEST_CASE("spurious interaction count matches the brute-force oracle", "[core]") {
  // exhaustive over ranked sequences from {1..6}, 2 <= i <= |P|
  std::vector<ProductId> prefix;
  std::vector<bool> used(7, false);
  long checked = 0;
  auto recurse = [&](auto&& self) -> void {
    if (prefix.size() >= 2) {
      for (int level = 2; level <= static_cast<int>(prefix.size()); ++level) {
        const Behavior b(prefix, {}, level);
        REQUIRE(spurious_interaction_count(b) == spurious_oracle(b));
        ++checked;
      }
    }
    if (prefix.size() == 6) return;
    for (ProductId j = 1; j <= 6; ++j) {
      if (used[j]) continue;
      used[j] = true;
      prefix.push_back(j);
      self(self);
      prefix.pop_back();
      used[j] = false;
    }
  };
  recurse(recurse);
  REQUIRE(checked > 5000);

  // behaviors with nonempty indifference sets count the same
  const Behavior with_indiff({2, 4, 6}, {1, 3}, 2);
  REQUIRE(spurious_interaction_count(with_indiff) == spurious_oracle(with_indiff));
}

TEST_CASE("choice model weight validation", "[core]") {
  std::vector<Behavior> bs{Behavior({1}, {}, 1), Behavior({2}, {}, 1)};
  REQUIRE_NOTHROW(ChoiceModel(bs, {0.5, 0.5}));
  REQUIRE_THROWS_AS(ChoiceModel(bs, {0.6, 0.5}), std::invalid_argument);
  REQUIRE_THROWS_AS(ChoiceModel(bs, {-0.1, 1.1}), std::invalid_argument);
  REQUIRE_THROWS_AS(ChoiceModel(bs, {1.0}), std::invalid_argument);
}
