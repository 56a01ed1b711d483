#ifndef GSP_TESTS_FIXTURES_HPP
#define GSP_TESTS_FIXTURES_HPP

#include <vector>

#include "gsp/choice_matrix.hpp"
#include "gsp/core.hpp"

namespace fixtures {

// The camera experiment: three models priced low/mid/high, offered as
// {1,2} and then {1,2,3}, with the observed shares
//   S1: .50 / .50        S2: .22 / .57 / .21
// The share of model 2 rises when model 3 appears, so no RUM model fits.
inline gsp::ProductCatalog camera_catalog() { return gsp::ProductCatalog(4); }

inline std::vector<gsp::OfferSet> camera_offer_sets() {
  return {gsp::OfferSet({1, 2}), gsp::OfferSet({1, 2, 3})};
}

// The four customer types that explain the camera shares exactly:
// full rankings with levels (1,1,1,2).
inline std::vector<gsp::Behavior> camera_behaviors() {
  return {
      gsp::Behavior({1, 3, 2}, {}, 1),
      gsp::Behavior({2, 3, 1}, {}, 1),
      gsp::Behavior({3, 2, 1}, {}, 1),
      gsp::Behavior({3, 2, 1}, {}, 2),
  };
}

inline std::vector<double> camera_weights() { return {0.22, 0.29, 0.21, 0.28}; }

// 100 * scale transactions per offer set matching the observed shares
// exactly; larger samples give the likelihood-ratio stopping test the
// power the exact fit deserves.
inline std::vector<gsp::Transaction> camera_transactions(int scale = 1) {
  std::vector<gsp::Transaction> txns;
  const auto sets = camera_offer_sets();
  auto add = [&](const gsp::OfferSet& s, gsp::ProductId j, int count) {
    for (int i = 0; i < count * scale; ++i) txns.emplace_back(s, j);
  };
  add(sets[0], 1, 50);
  add(sets[0], 2, 50);
  add(sets[1], 1, 22);
  add(sets[1], 2, 57);
  add(sets[1], 3, 21);
  return txns;
}

inline gsp::EmpiricalDistribution camera_empirical(int scale = 1) {
  return gsp::empirical(camera_transactions(scale));
}

// The magazine-subscription decoy experiment: three types reproducing
//   S1 = {1,3}:   .68 / .32      S2 = {1,2,3}:  .16 / 0 / .84
inline gsp::ChoiceModel economist_model() {
  std::vector<gsp::Behavior> behaviors = {
      gsp::Behavior({3, 1, 2}, {}, 1),
      gsp::Behavior({2, 1, 3}, {}, 2),
      gsp::Behavior({2, 3, 1}, {}, 2),
  };
  return gsp::ChoiceModel(std::move(behaviors), {0.16, 0.16, 0.68});
}

inline std::vector<gsp::OfferSet> economist_offer_sets() {
  return {gsp::OfferSet({1, 3}), gsp::OfferSet({1, 2, 3})};
}

}  // namespace fixtures

#endif  // GSP_TESTS_FIXTURES_HPP
