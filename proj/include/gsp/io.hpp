#ifndef GSP_IO_HPP
#define GSP_IO_HPP

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gsp/core.hpp"
#include "gsp/datagen.hpp"
#include "gsp/eval.hpp"
#include "gsp/halo_mnl.hpp"
#include "gsp/version.hpp"

namespace gsp {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return is;
}

}  // namespace detail

// ---- offer sets: CSV `offer_set_id,items` with semicolon-joined ids ----

inline void save_offer_sets_csv(const std::string& path, const std::vector<OfferSet>& sets) {
  std::ofstream os = detail::open_out(path);
  os << "offer_set_id,items\n";
  for (std::size_t m = 0; m < sets.size(); ++m) {
    os << m << ",";
    const auto& items = sets[m].items();
    for (std::size_t i = 0; i < items.size(); ++i) os << (i == 0 ? "" : ";") << items[i];
    os << "\n";
  }
}

inline std::vector<OfferSet> load_offer_sets_csv(const std::string& path) {
  std::ifstream is = detail::open_in(path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("offer_set_id,", 0) != 0) {
    throw std::runtime_error("offer sets CSV: bad header in " + path);
  }
  std::vector<OfferSet> sets;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("offer sets CSV: bad row: " + line);
    const std::size_t id = std::stoul(line.substr(0, comma));
    if (id != sets.size()) throw std::runtime_error("offer sets CSV: ids must be consecutive");
    std::vector<ProductId> items;
    std::stringstream ss(line.substr(comma + 1));
    std::string cell;
    while (std::getline(ss, cell, ';')) items.push_back(std::stoi(cell));
    sets.emplace_back(std::move(items));
  }
  if (sets.empty()) throw std::runtime_error("offer sets CSV: no rows in " + path);
  return sets;
}

// ---- transactions: CSV `offer_set_id,chosen` ----

inline void save_transactions_csv(const std::string& path,
                                  const std::vector<Transaction>& transactions,
                                  const std::vector<OfferSet>& sets) {
  std::ofstream os = detail::open_out(path);
  os << "offer_set_id,chosen\n";
  for (const Transaction& t : transactions) {
    int id = -1;
    for (std::size_t m = 0; m < sets.size(); ++m) {
      if (sets[m] == t.offer_set) {
        id = static_cast<int>(m);
        break;
      }
    }
    if (id < 0) throw std::runtime_error("save_transactions_csv: offer set not in the set file");
    os << id << "," << t.chosen << "\n";
  }
}

inline std::vector<Transaction> load_transactions_csv(const std::string& path,
                                                      const std::vector<OfferSet>& sets) {
  std::ifstream is = detail::open_in(path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("offer_set_id,", 0) != 0) {
    throw std::runtime_error("transactions CSV: bad header in " + path);
  }
  std::vector<Transaction> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("transactions CSV: bad row: " + line);
    const std::size_t id = std::stoul(line.substr(0, comma));
    if (id >= sets.size()) throw std::runtime_error("transactions CSV: offer_set_id out of range");
    out.emplace_back(sets[id], std::stoi(line.substr(comma + 1)));
  }
  if (out.empty()) throw std::runtime_error("transactions CSV: no rows in " + path);
  return out;
}

// ---- raw retail feed: CSV `week,store,upc,vendor` ----

inline std::vector<RetailRecord> load_retail_csv(const std::string& path) {
  std::ifstream is = detail::open_in(path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("week,store,upc,vendor", 0) != 0) {
    throw std::runtime_error("retail CSV: bad header in " + path);
  }
  std::vector<RetailRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    RetailRecord r;
    if (!std::getline(ss, r.week, ',') || !std::getline(ss, r.store, ',') ||
        !std::getline(ss, r.upc, ',') || !std::getline(ss, r.vendor, ',')) {
      throw std::runtime_error("retail CSV: bad row: " + line);
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) throw std::runtime_error("retail CSV: no rows in " + path);
  return out;
}

// ---- models and ground truths: JSON with a format-version field ----

inline nlohmann::json model_to_json(const ChoiceModel& model, int n_products) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["library_version"] = GSP_VERSION_STRING;
  j["kind"] = "gsp";
  j["n_products"] = n_products;
  if (model.seed.has_value()) j["seed"] = *model.seed;
  nlohmann::json behaviors = nlohmann::json::array();
  for (std::size_t k = 0; k < model.behaviors.size(); ++k) {
    const Behavior& b = model.behaviors[k];
    behaviors.push_back({{"ranked", b.ranked()},
                         {"indifference", b.indifference()},
                         {"level", b.level()},
                         {"weight", model.weights[k]}});
  }
  j["behaviors"] = std::move(behaviors);
  return j;
}

inline std::pair<ChoiceModel, int> model_from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != kModelFormatVersion) {
    throw std::runtime_error("model JSON: unsupported format version");
  }
  if (j.at("kind").get<std::string>() != "gsp") {
    throw std::runtime_error("model JSON: expected kind 'gsp'");
  }
  std::vector<Behavior> behaviors;
  std::vector<double> weights;
  for (const auto& bj : j.at("behaviors")) {
    behaviors.emplace_back(bj.at("ranked").get<std::vector<ProductId>>(),
                           bj.at("indifference").get<std::vector<ProductId>>(),
                           bj.at("level").get<int>());
    weights.push_back(bj.at("weight").get<double>());
  }
  ChoiceModel model(std::move(behaviors), std::move(weights));
  if (j.contains("seed")) model.seed = j.at("seed").get<std::uint64_t>();
  return {std::move(model), j.at("n_products").get<int>()};
}

inline void save_model_json(const std::string& path, const ChoiceModel& model, int n_products) {
  std::ofstream os = detail::open_out(path);
  os << model_to_json(model, n_products).dump(2) << "\n";
}

inline std::pair<ChoiceModel, int> load_model_json(const std::string& path) {
  std::ifstream is = detail::open_in(path);
  nlohmann::json j;
  is >> j;
  return model_from_json(j);
}

inline void save_halo_model_json(const std::string& path, const InteractionMatrix& u) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["library_version"] = GSP_VERSION_STRING;
  j["kind"] = "halo_mnl";
  j["n_products"] = u.n();
  j["u"] = u.data();
  std::ofstream os = detail::open_out(path);
  os << j.dump(2) << "\n";
}

inline InteractionMatrix load_halo_model_json(const std::string& path) {
  std::ifstream is = detail::open_in(path);
  nlohmann::json j;
  is >> j;
  if (j.at("kind").get<std::string>() != "halo_mnl") {
    throw std::runtime_error("model JSON: expected kind 'halo_mnl'");
  }
  const int n = j.at("n_products").get<int>();
  InteractionMatrix u(n);
  u.data() = j.at("u").get<std::vector<double>>();
  if (u.data().size() != static_cast<std::size_t>(n) * n) {
    throw std::runtime_error("model JSON: u has wrong size");
  }
  return u;
}

inline void save_ground_truth_json(const std::string& path, const GroundTruth& gt) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["library_version"] = GSP_VERSION_STRING;
  j["ground_truth"] = true;
  j["n_products"] = gt.n_products;
  if (gt.kind == GroundTruth::Kind::Gsp) {
    j["kind"] = "gsp";
    nlohmann::json behaviors = nlohmann::json::array();
    for (const GspType& t : gt.types) {
      behaviors.push_back({{"ranked", t.ranking},
                           {"indifference", std::vector<ProductId>{}},
                           {"level", t.level},
                           {"weight", t.weight}});
    }
    j["behaviors"] = std::move(behaviors);
  } else {
    j["kind"] = "halo_mnl_mixture";
    nlohmann::json segments = nlohmann::json::array();
    for (const HaloSegment& s : gt.segments) {
      segments.push_back({{"weight", s.weight}, {"u", s.u.data()}});
    }
    j["segments"] = std::move(segments);
  }
  std::ofstream os = detail::open_out(path);
  os << j.dump(2) << "\n";
}

inline GroundTruth load_ground_truth_json(const std::string& path) {
  std::ifstream is = detail::open_in(path);
  nlohmann::json j;
  is >> j;
  GroundTruth gt;
  gt.n_products = j.at("n_products").get<int>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gsp") {
    gt.kind = GroundTruth::Kind::Gsp;
    for (const auto& bj : j.at("behaviors")) {
      GspType t;
      t.ranking = bj.at("ranked").get<std::vector<ProductId>>();
      t.level = bj.at("level").get<int>();
      t.weight = bj.at("weight").get<double>();
      if (static_cast<int>(t.ranking.size()) != gt.n_products) {
        throw std::runtime_error("ground truth JSON: GSP types need full rankings");
      }
      gt.types.push_back(std::move(t));
    }
  } else if (kind == "halo_mnl_mixture") {
    gt.kind = GroundTruth::Kind::HaloMnl;
    for (const auto& sj : j.at("segments")) {
      HaloSegment s;
      s.weight = sj.at("weight").get<double>();
      s.u = InteractionMatrix(gt.n_products);
      s.u.data() = sj.at("u").get<std::vector<double>>();
      if (s.u.data().size() != static_cast<std::size_t>(gt.n_products) * gt.n_products) {
        throw std::runtime_error("ground truth JSON: segment matrix has wrong size");
      }
      gt.segments.push_back(std::move(s));
    }
  } else {
    throw std::runtime_error("ground truth JSON: unknown kind " + kind);
  }
  return gt;
}

}  // namespace gsp

#endif  // GSP_IO_HPP
