#ifndef GSP_DATAGEN_HPP
#define GSP_DATAGEN_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gsp/core.hpp"
#include "gsp/halo_mnl.hpp"
#include "gsp/random.hpp"

namespace gsp {

enum class Symmetry { Symmetric, Asymmetric };

struct HaloSegment {
  InteractionMatrix u;
  double weight;
};

// A GSP customer type: a full ranking over all N products and a level.
struct GspType {
  std::vector<ProductId> ranking;
  int level;
  double weight;
};

struct GroundTruth {
  enum class Kind { HaloMnl, Gsp };
  Kind kind = Kind::Gsp;
  int n_products = 0;
  std::vector<HaloSegment> segments;  // HaloMnl
  std::vector<GspType> types;         // Gsp
};

// Number of offer sets containing the no-purchase option with |S| >= 3:
// subsets of {1..N-1} of size >= 2.
inline long long eligible_offer_set_count(int n_products) {
  if (n_products < 3) return 0;
  long long count = (1LL << (n_products - 1)) - 1 - (n_products - 1);
  return count;
}

// M distinct offer sets, each containing option 0 and at least two other
// products, drawn uniformly without replacement from the eligible family.
inline std::vector<OfferSet> gen_offer_sets(int n_products, int m, RandomEngine& rng) {
  if (n_products < 3 || n_products > 26) {
    throw std::invalid_argument("gen_offer_sets: n_products must lie in [3, 26]");
  }
  const long long eligible = eligible_offer_set_count(n_products);
  if (m < 1 || m > eligible) {
    throw std::invalid_argument("gen_offer_sets: M exceeds the eligible offer-set count (" +
                                std::to_string(eligible) + ")");
  }
  std::vector<std::uint32_t> masks;  // over products 1..N-1
  masks.reserve(eligible);
  const std::uint32_t full = (1u << (n_products - 1)) - 1;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    if (__builtin_popcount(mask) >= 2) masks.push_back(mask);
  }
  // partial Fisher-Yates: the first m entries are a uniform sample
  for (int i = 0; i < m; ++i) {
    const int j = rng.uniform_int(i, static_cast<int>(masks.size()) - 1);
    std::swap(masks[i], masks[j]);
  }
  std::vector<OfferSet> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) {
    std::vector<ProductId> items{kNoPurchase};
    for (int j = 1; j < n_products; ++j) {
      if (masks[i] >> (j - 1) & 1) items.push_back(j);
    }
    out.emplace_back(std::move(items));
  }
  return out;
}

namespace detail {

inline int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

}  // namespace detail

// Halo-MNL ground truth: per segment, diagonal utilities ~ Unif[-1,1] and
// a fraction of unordered non-0 product pairs receiving a -1 interaction
// (both directions when symmetric, one uniformly chosen direction
// otherwise).  Segment weights are uniform on the simplex.
inline GroundTruth gen_halo_instance(int n_products, int n_segments, int interaction_pct,
                                     Symmetry symmetry, RandomEngine& rng) {
  if (n_segments < 1) throw std::invalid_argument("gen_halo_instance: need >= 1 segment");
  if (interaction_pct < 0 || interaction_pct > 100) {
    throw std::invalid_argument("gen_halo_instance: interaction_pct outside [0, 100]");
  }
  GroundTruth gt;
  gt.kind = GroundTruth::Kind::HaloMnl;
  gt.n_products = n_products;

  std::vector<std::pair<int, int>> pairs;  // unordered pairs of non-0 products
  for (int a = 1; a < n_products; ++a) {
    for (int b = a + 1; b < n_products; ++b) pairs.emplace_back(a, b);
  }
  const int n_interacting =
      detail::round_half_up(interaction_pct / 100.0 * static_cast<double>(pairs.size()));

  const std::vector<double> weights = rng.simplex(n_segments);
  for (int seg = 0; seg < n_segments; ++seg) {
    InteractionMatrix u(n_products, 0.0);
    for (int j = 0; j < n_products; ++j) u(j, j) = rng.uniform(-1.0, 1.0);
    std::vector<std::pair<int, int>> chosen = pairs;
    for (int i = 0; i < n_interacting; ++i) {
      const int j = rng.uniform_int(i, static_cast<int>(chosen.size()) - 1);
      std::swap(chosen[i], chosen[j]);
    }
    for (int i = 0; i < n_interacting; ++i) {
      const auto [a, b] = chosen[i];
      if (symmetry == Symmetry::Symmetric) {
        u(a, b) = -1.0;
        u(b, a) = -1.0;
      } else if (rng.uniform01() < 0.5) {
        u(a, b) = -1.0;
      } else {
        u(b, a) = -1.0;
      }
    }
    gt.segments.push_back({std::move(u), weights[seg]});
  }
  return gt;
}

// GSP ground truth: K uniformly random full rankings; ceil(pct * K / 100)
// of them are irrational with level drawn uniformly from
// {2, ..., max(2, i_max + 1)}; the rest are rational.  Type weights are
// uniform on the simplex.
inline GroundTruth gen_gsp_instance(int n_products, int k_types, int irrational_pct, int i_max,
                                    RandomEngine& rng) {
  if (k_types < 1) throw std::invalid_argument("gen_gsp_instance: need >= 1 type");
  if (irrational_pct < 0 || irrational_pct > 100) {
    throw std::invalid_argument("gen_gsp_instance: irrational_pct outside [0, 100]");
  }
  if (i_max < 1 || i_max > n_products - 1) {
    throw std::invalid_argument("gen_gsp_instance: i_max outside [1, N-1]");
  }
  GroundTruth gt;
  gt.kind = GroundTruth::Kind::Gsp;
  gt.n_products = n_products;

  const int n_irrational =
      static_cast<int>(std::ceil(irrational_pct / 100.0 * static_cast<double>(k_types)));
  const int level_hi = std::max(2, i_max + 1);
  const std::vector<double> weights = rng.simplex(k_types);
  for (int k = 0; k < k_types; ++k) {
    std::vector<ProductId> ranking(n_products);
    for (int j = 0; j < n_products; ++j) ranking[j] = j;
    rng.shuffle(ranking);
    const int level = k < n_irrational ? rng.uniform_int(2, level_hi) : 1;
    gt.types.push_back({std::move(ranking), level, weights[k]});
  }
  return gt;
}

// Exact mixture choice probabilities of a ground truth on an offer set,
// aligned with the set's sorted items.  A GSP type with level i picks the
// i-th ranked available item and leaves (chooses option 0) when fewer
// than i of its ranked products are offered.
inline std::vector<double> true_probabilities(const GroundTruth& gt, const OfferSet& offer_set) {
  const auto& items = offer_set.items();
  std::vector<double> p(items.size(), 0.0);
  if (gt.kind == GroundTruth::Kind::HaloMnl) {
    for (const HaloSegment& seg : gt.segments) {
      const std::vector<double> q = halo_probability(seg.u, items);
      for (std::size_t idx = 0; idx < items.size(); ++idx) p[idx] += seg.weight * q[idx];
    }
    return p;
  }
  for (const GspType& type : gt.types) {
    ProductId chosen = kNoPurchase;
    int seen = 0;
    for (ProductId j : type.ranking) {
      if (!offer_set.contains(j)) continue;
      ++seen;
      if (seen == type.level) {
        chosen = j;
        break;
      }
    }
    p[offer_set.position(chosen)] += type.weight;
  }
  return p;
}

// T transactions spread equally over the offer sets (the first T mod M
// sets take one extra), choices i.i.d. from the true probabilities.
inline std::vector<Transaction> sample_transactions(const GroundTruth& gt,
                                                    const std::vector<OfferSet>& offer_sets,
                                                    long t_total, RandomEngine& rng) {
  const long m = static_cast<long>(offer_sets.size());
  if (m == 0 || t_total < m) {
    throw std::invalid_argument("sample_transactions: need at least one transaction per set");
  }
  std::vector<Transaction> out;
  out.reserve(t_total);
  for (long set_idx = 0; set_idx < m; ++set_idx) {
    const OfferSet& s = offer_sets[set_idx];
    const std::vector<double> p = true_probabilities(gt, s);
    const long count = t_total / m + (set_idx < t_total % m ? 1 : 0);
    for (long t = 0; t < count; ++t) {
      out.emplace_back(s, s.items()[rng.categorical(p)]);
    }
  }
  return out;
}

}  // namespace gsp

#endif  // GSP_DATAGEN_HPP
