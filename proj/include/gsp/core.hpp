#ifndef GSP_CORE_HPP
#define GSP_CORE_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gsp {

using ProductId = int;

// The no-purchase option carries the fixed label 0 and belongs to every
// offer set.
inline constexpr ProductId kNoPurchase = 0;

struct ProductCatalog {
  int n_products;

  explicit ProductCatalog(int n) : n_products(n) {
    if (n < 2) throw std::invalid_argument("ProductCatalog: need at least 2 products");
  }

  bool contains(ProductId j) const { return j >= 0 && j < n_products; }
};

// An assortment of products offered to the customer.  Items are stored
// sorted (canonical form for hashing and set identity) and the
// no-purchase option is inserted if the caller omitted it, so a customer
// can always "choose" to leave.
class OfferSet {
 public:
  OfferSet() : items_{kNoPurchase} {}

  explicit OfferSet(std::vector<ProductId> items) : items_(std::move(items)) {
    for (ProductId j : items_) {
      if (j < 0) throw std::invalid_argument("OfferSet: negative product id");
    }
    items_.push_back(kNoPurchase);
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
  }

  const std::vector<ProductId>& items() const { return items_; }
  int size() const { return static_cast<int>(items_.size()); }

  bool contains(ProductId j) const {
    return std::binary_search(items_.begin(), items_.end(), j);
  }

  // Position of item j in the sorted item list, or -1 if not offered.
  int position(ProductId j) const {
    auto it = std::lower_bound(items_.begin(), items_.end(), j);
    if (it == items_.end() || *it != j) return -1;
    return static_cast<int>(it - items_.begin());
  }

  bool operator==(const OfferSet& other) const { return items_ == other.items_; }
  bool operator!=(const OfferSet& other) const { return items_ != other.items_; }
  bool operator<(const OfferSet& other) const { return items_ < other.items_; }

 private:
  std::vector<ProductId> items_;
};

struct Transaction {
  OfferSet offer_set;
  ProductId chosen;

  Transaction(OfferSet s, ProductId c) : offer_set(std::move(s)), chosen(c) {
    if (!offer_set.contains(chosen)) {
      throw std::invalid_argument("Transaction: chosen item not offered");
    }
  }
};

// A partially-ranked preference with irrationality: a strictly ranked
// sequence of products, an indifference set of equally ranked products
// below them, and a level.  Faced with an offer set the customer picks
// the available alternative at position `level` of the restricted
// ranking; with level 1 this is the classic rational rank-based
// behavior, level >= 2 skips preferred available options.
class Behavior {
 public:
  Behavior(std::vector<ProductId> ranked, std::vector<ProductId> indifference, int level)
      : ranked_(std::move(ranked)), indifference_(std::move(indifference)), level_(level) {
    std::sort(indifference_.begin(), indifference_.end());
    validate();
  }

  const std::vector<ProductId>& ranked() const { return ranked_; }
  const std::vector<ProductId>& indifference() const { return indifference_; }  // sorted
  int level() const { return level_; }
  bool rational() const { return level_ == 1; }

  bool operator==(const Behavior& o) const {
    return level_ == o.level_ && ranked_ == o.ranked_ && indifference_ == o.indifference_;
  }

  // Lexicographic (|ranked|, ranked, level, indifference): the tie-break
  // order used for deterministic candidate selection.
  bool operator<(const Behavior& o) const {
    if (ranked_.size() != o.ranked_.size()) return ranked_.size() < o.ranked_.size();
    if (ranked_ != o.ranked_) return ranked_ < o.ranked_;
    if (level_ != o.level_) return level_ < o.level_;
    return indifference_ < o.indifference_;
  }

 private:
  void validate() const {
    if (level_ < 1 || level_ > static_cast<int>(ranked_.size()) + 1) {
      throw std::invalid_argument("Behavior: level out of range [1, |ranked|+1]");
    }
    std::vector<ProductId> all = ranked_;
    all.insert(all.end(), indifference_.begin(), indifference_.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i] < 0) throw std::invalid_argument("Behavior: negative product id");
      if (i > 0 && all[i] == all[i - 1]) {
        throw std::invalid_argument("Behavior: ranked/indifference sets overlap");
      }
    }
  }

  std::vector<ProductId> ranked_;
  std::vector<ProductId> indifference_;
  int level_;
};

// A finite mixture of behaviors with weights on the probability simplex.
struct ChoiceModel {
  std::vector<Behavior> behaviors;
  std::vector<double> weights;
  std::optional<std::uint64_t> seed;  // generator seed for fitted models

  ChoiceModel() = default;
  ChoiceModel(std::vector<Behavior> b, std::vector<double> w)
      : behaviors(std::move(b)), weights(std::move(w)) {
    validate();
  }

  void validate() const {
    if (behaviors.size() != weights.size()) {
      throw std::invalid_argument("ChoiceModel: behaviors/weights size mismatch");
    }
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("ChoiceModel: negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("ChoiceModel: weights must sum to 1");
    }
  }
};

namespace detail {

// Restriction of a raw (ranked, indifference) pair to an offer set.
inline std::pair<std::vector<ProductId>, std::vector<ProductId>> restrict_seq(
    const std::vector<ProductId>& ranked, const std::vector<ProductId>& indifference,
    const OfferSet& offer_set) {
  std::vector<ProductId> p_s;
  p_s.reserve(ranked.size());
  for (ProductId j : ranked) {
    if (offer_set.contains(j)) p_s.push_back(j);
  }
  std::vector<ProductId> i_s;
  i_s.reserve(indifference.size());
  for (ProductId j : indifference) {
    if (offer_set.contains(j)) i_s.push_back(j);
  }
  return {std::move(p_s), std::move(i_s)};
}

}  // namespace detail

// P_S(sigma) and I_S(sigma): the ranked sequence (order preserved) and the
// indifference set with unavailable products removed.
inline std::pair<std::vector<ProductId>, std::vector<ProductId>> restrict(
    const Behavior& behavior, const OfferSet& offer_set) {
  return detail::restrict_seq(behavior.ranked(), behavior.indifference(), offer_set);
}

// The choice distribution of a single behavior on an offer set.
//
// With (P_S, I_S) the restriction: mass 1 on the level-th item of P_S when
// level <= |P_S|; uniform over I_S when |P_S| < level <= |P_S| + |I_S|;
// otherwise the customer leaves, which is represented as choosing the
// no-purchase option.
inline std::map<ProductId, double> choice_distribution(const Behavior& behavior,
                                                       const OfferSet& offer_set) {
  auto [p_s, i_s] = restrict(behavior, offer_set);
  const int level = behavior.level();
  std::map<ProductId, double> dist;
  if (level <= static_cast<int>(p_s.size())) {
    dist[p_s[level - 1]] = 1.0;
  } else if (!i_s.empty() && level <= static_cast<int>(p_s.size() + i_s.size())) {
    const double mass = 1.0 / static_cast<double>(i_s.size());
    for (ProductId j : i_s) dist[j] = mass;
  } else {
    dist[kNoPurchase] = 1.0;
  }
  return dist;
}

namespace detail {

inline unsigned long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0ULL;
  if (k > n - k) k = n - k;
  unsigned long long result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<unsigned long long>(n - k + i) / static_cast<unsigned long long>(i);
  }
  return result;
}

}  // namespace detail

// Upper bound on the number of positive interactions of degree `level` a
// choice model based on this behavior may extrapolate:
// sum_{j=i-1}^{|P|-1} C(j, i-1).  Zero when the sum is empty.
inline unsigned long long spurious_interaction_count(const Behavior& behavior) {
  const int p = static_cast<int>(behavior.ranked().size());
  const int i = behavior.level();
  unsigned long long total = 0;
  for (int j = i - 1; j <= p - 1; ++j) {
    total += detail::binomial(j, i - 1);
  }
  return total;
}

}  // namespace gsp

#endif  // GSP_CORE_HPP
