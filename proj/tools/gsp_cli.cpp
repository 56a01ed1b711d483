// Command-line front end: synthetic data generation, estimation,
// rationality diagnosis and evaluation as reproducible runs.
//
// Exit codes: 0 success, 2 bad configuration or malformed input,
// 3 solver failure, 4 enumeration cap exceeded.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gsp/gsp.hpp"

namespace {

using nlohmann::json;

double env_double(const char* name, double fallback) {
  const char* raw = std::getenv(name);
  return raw == nullptr ? fallback : std::stod(raw);
}

long env_long(const char* name, long fallback) {
  const char* raw = std::getenv(name);
  return raw == nullptr ? fallback : std::stol(raw);
}

bool deterministic_timing() {
  const char* raw = std::getenv("GSP_DETERMINISTIC_TIMING");
  return raw != nullptr && std::string(raw) == "1";
}

double elapsed_or_zero(std::chrono::steady_clock::time_point start) {
  if (deterministic_timing()) return 0.0;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

gsp::SolverOptions solver_from_env() {
  gsp::SolverOptions opt;
  opt.kl_tol = env_double("GSP_KL_TOL", opt.kl_tol);
  opt.kl_max_iters = env_long("GSP_KL_MAX_ITERS", opt.kl_max_iters);
  opt.lp_max_iters = env_long("GSP_LP_MAX_ITERS", opt.lp_max_iters);
  opt.epsilon = env_double("GSP_EPSILON", opt.epsilon);
  return opt;
}

gsp::HaloFitOptions halo_from_env() {
  gsp::HaloFitOptions opt;
  opt.grad_tol = env_double("GSP_HALO_GRAD_TOL", opt.grad_tol);
  opt.max_iters = env_long("GSP_HALO_MAX_ITERS", opt.max_iters);
  return opt;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

int infer_n_products(const std::vector<gsp::OfferSet>& sets, int requested) {
  if (requested > 0) return requested;
  int max_item = 1;
  for (const auto& s : sets) max_item = std::max(max_item, s.items().back());
  return max_item + 1;
}

// ---- generate ----

struct GenerateArgs {
  std::string gt_kind = "gsp";
  int n = 10, m = 20;
  long t = 3000;
  std::uint64_t seed = 0;
  int k = 10, irrational_pct = 0, imax = 1;
  int segments = 1, interaction_pct = 0;
  std::string symmetry = "symmetric";
  std::string out_dir = ".";
};

int run_generate(const GenerateArgs& a) {
  gsp::RandomEngine rng(a.seed);
  gsp::GroundTruth gt;
  if (a.gt_kind == "gsp") {
    gt = gsp::gen_gsp_instance(a.n, a.k, a.irrational_pct, a.imax, rng);
  } else {
    const gsp::Symmetry sym =
        a.symmetry == "asymmetric" ? gsp::Symmetry::Asymmetric : gsp::Symmetry::Symmetric;
    gt = gsp::gen_halo_instance(a.n, a.segments, a.interaction_pct, sym, rng);
  }
  const std::vector<gsp::OfferSet> sets = gsp::gen_offer_sets(a.n, a.m, rng);
  const std::vector<gsp::Transaction> txns = gsp::sample_transactions(gt, sets, a.t, rng);

  gsp::save_ground_truth_json(a.out_dir + "/ground_truth.json", gt);
  gsp::save_offer_sets_csv(a.out_dir + "/offer_sets.csv", sets);
  gsp::save_transactions_csv(a.out_dir + "/transactions.csv", txns, sets);
  std::cout << "generated " << txns.size() << " transactions over " << sets.size()
            << " offer sets (seed " << a.seed << ") in " << a.out_dir << "\n";
  return 0;
}

// ---- estimate ----

struct EstimateArgs {
  std::string method = "gpt-ic";
  std::string loss = "kl";
  std::string transactions;
  std::string offer_sets;
  int n = 0;
  std::string out = "model.json";
  std::string report;
  std::string matrix_csv;
  std::uint64_t seed = 0;
  int gamma = 10, delta = 20, max_iterations = 200;
  double significance = 0.05;
  long long cap = 10'000'000;
};

int run_estimate(const EstimateArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const gsp::Method method = gsp::parse_method(a.method);
  const gsp::LossKind loss = a.loss == "l1" ? gsp::LossKind::L1 : gsp::LossKind::KL;
  if (method == gsp::Method::RbR && loss == gsp::LossKind::L1) {
    throw std::invalid_argument("rb-r minimizes the KL objective; --loss l1 is not valid");
  }

  const auto sets = gsp::load_offer_sets_csv(a.offer_sets);
  const auto txns = gsp::load_transactions_csv(a.transactions, sets);
  const int n = infer_n_products(sets, a.n);
  const gsp::EmpiricalDistribution emp = gsp::empirical(txns);
  const gsp::ProductCatalog catalog(n);

  json report;
  report["command"] = "estimate";
  report["library_version"] = GSP_VERSION_STRING;
  report["config"] = {{"method", a.method},   {"loss", a.loss},
                      {"n_products", n},      {"seed", a.seed},
                      {"gamma", a.gamma},     {"delta", a.delta},
                      {"significance", a.significance}, {"max_iterations", a.max_iterations},
                      {"cap", a.cap},         {"transactions", a.transactions},
                      {"offer_sets", a.offer_sets}};

  switch (method) {
    case gsp::Method::GptR:
    case gsp::Method::GptI:
    case gsp::Method::GptIc: {
      gsp::GptConfig config = method == gsp::Method::GptR   ? gsp::gpt_r_config()
                              : method == gsp::Method::GptI ? gsp::gpt_i_config()
                                                            : gsp::gpt_ic_config();
      config.loss = loss;
      config.gamma = a.gamma;
      config.delta = a.delta;
      config.significance = a.significance;
      config.max_iterations = a.max_iterations;
      config.rng_seed = a.seed;
      config.solver = solver_from_env();
      const gsp::FitResult fit = gsp::fit(emp, catalog, config);
      gsp::save_model_json(a.out, fit.model, n);
      report["objective"] = fit.objective;
      report["loglik"] = fit.loglik;
      report["iterations"] = fit.iterations;
      report["stop_reason"] = fit.stop_reason;
      report["n_behaviors"] = fit.model.behaviors.size();
      break;
    }
    case gsp::Method::RbR: {
      gsp::RbConfig config;
      config.cap = a.cap;
      config.solver = solver_from_env();
      const gsp::RbFit fit = gsp::fit_rb(emp, catalog, config);
      gsp::save_model_json(a.out, fit.model, n);
      report["objective"] = fit.objective;
      report["iterations"] = fit.iterations;
      report["n_columns"] = fit.n_columns;
      report["n_behaviors"] = fit.model.behaviors.size();
      break;
    }
    case gsp::Method::HaloMnl: {
      const gsp::HaloFitResult fit = gsp::fit_halo(emp, n, halo_from_env());
      if (!fit.converged) {
        std::cerr << "warning: halo-mnl ascent stopped with gradient max-norm " << fit.grad_max
                  << "\n";
      }
      gsp::save_halo_model_json(a.out, fit.u);
      if (!a.matrix_csv.empty()) gsp::save_interaction_csv(a.matrix_csv, fit.u);
      report["objective"] = fit.train_kl;
      report["loglik"] = fit.loglik;
      report["iterations"] = fit.iterations;
      report["converged"] = fit.converged;
      report["grad_max"] = fit.grad_max;
      break;
    }
  }

  report["wall_seconds"] = elapsed_or_zero(start);
  if (!a.report.empty()) write_json(a.report, report);
  std::cout << "estimated " << a.method << ": objective " << report["objective"].get<double>()
            << ", model written to " << a.out << "\n";
  return 0;
}

// ---- lor ----

struct LorArgs {
  std::string transactions;
  std::string offer_sets;
  int n = 0;
  double threshold = 0.008;
  long long cap = 10'000'000;
  std::string out;
};

int run_lor(const LorArgs& a) {
  const auto sets = gsp::load_offer_sets_csv(a.offer_sets);
  const auto txns = gsp::load_transactions_csv(a.transactions, sets);
  const int n = infer_n_products(sets, a.n);

  gsp::RbConfig config;
  config.threshold = a.threshold;
  config.cap = a.cap;
  config.solver = solver_from_env();
  const gsp::RationalityReport report =
      gsp::loss_of_rationality(gsp::empirical(txns), gsp::ProductCatalog(n), config);

  std::cout << "LoR: " << report.lor << " (threshold " << a.threshold << ") -> "
            << (report.is_irrational ? "irrational" : "rational") << "\n";
  if (!a.out.empty()) {
    json j;
    j["command"] = "lor";
    j["library_version"] = GSP_VERSION_STRING;
    j["config"] = {{"threshold", a.threshold}, {"cap", a.cap}, {"n_products", n},
                   {"transactions", a.transactions}, {"offer_sets", a.offer_sets}};
    j["lor"] = report.lor;
    j["is_irrational"] = report.is_irrational;
    j["n_columns"] = report.n_columns;
    j["n_unique_columns"] = report.n_unique_columns;
    j["iterations"] = report.iterations;
    write_json(a.out, j);
  }
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  // synthetic scoring
  std::string model;
  std::string ground_truth;
  std::string train_sets;
  // cross-validation
  bool crossval = false;
  std::string transactions;
  std::string offer_sets;
  std::string method = "gpt-ic";
  std::string loss = "kl";
  int folds = 5;
  int n = 0;
  std::uint64_t seed = 0;
  int gamma = 10, delta = 20, max_iterations = 200;
  double significance = 0.05;
  long long cap = 10'000'000;
  std::string out;
  std::string csv;
  std::string label;
};

gsp::ShareTable predictions_from_model_file(const std::string& path,
                                            const std::vector<gsp::OfferSet>& sets) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open model file: " + path);
  json j;
  is >> j;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gsp") {
    const auto [model, n] = gsp::model_from_json(j);
    return gsp::predict(model, sets);
  }
  if (kind == "halo_mnl") {
    const gsp::InteractionMatrix u = gsp::load_halo_model_json(path);
    gsp::ShareTable x(sets);
    for (std::size_t m = 0; m < sets.size(); ++m) {
      x.row(static_cast<int>(m)) = gsp::halo_probability(u, sets[m].items());
    }
    return x;
  }
  throw std::runtime_error("evaluate: cannot predict from model kind " + kind);
}

void append_csv_row(const std::string& path, const std::string& label, const std::string& method,
                    double mean, double median, double max) {
  const bool fresh = !std::ifstream(path).good();
  std::ofstream os(path, std::ios::app);
  if (!os) throw std::runtime_error("cannot open for appending: " + path);
  char buffer[160];
  if (fresh) os << "label,method,mean,median,max\n";
  std::snprintf(buffer, sizeof(buffer), "%s,%s,%.6f,%.6f,%.6f", label.c_str(), method.c_str(),
                mean, median, max);
  os << buffer << "\n";
}

int run_evaluate(const EvaluateArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  if (a.crossval) {
    const auto sets = gsp::load_offer_sets_csv(a.offer_sets);
    const auto txns = gsp::load_transactions_csv(a.transactions, sets);
    const int n = infer_n_products(sets, a.n);

    gsp::MethodSpec spec = gsp::MethodSpec::make(gsp::parse_method(a.method));
    spec.gpt.loss = a.loss == "l1" ? gsp::LossKind::L1 : gsp::LossKind::KL;
    if (spec.method == gsp::Method::RbR && spec.gpt.loss == gsp::LossKind::L1) {
      throw std::invalid_argument("rb-r minimizes the KL objective; --loss l1 is not valid");
    }
    spec.gpt.gamma = a.gamma;
    spec.gpt.delta = a.delta;
    spec.gpt.significance = a.significance;
    spec.gpt.max_iterations = a.max_iterations;
    spec.gpt.solver = solver_from_env();
    spec.rb.cap = a.cap;
    spec.rb.solver = solver_from_env();
    spec.halo = halo_from_env();

    gsp::EvaluationReport report = gsp::crossval(txns, a.folds, spec, n, a.seed);

    json j;
    j["command"] = "evaluate";
    j["mode"] = "crossval";
    j["library_version"] = GSP_VERSION_STRING;
    j["config"] = {{"method", a.method}, {"loss", a.loss},   {"folds", a.folds},
                   {"n_products", n},    {"seed", a.seed},   {"gamma", a.gamma},
                   {"delta", a.delta},   {"cap", a.cap},     {"transactions", a.transactions},
                   {"offer_sets", a.offer_sets}};
    json folds = json::array();
    for (const auto& f : report.folds) {
      folds.push_back({{"fold", f.fold},
                       {"l1", f.l1},
                       {"t_test", f.t_test},
                       {"m_test", f.m_test},
                       {"train_objective", f.train_objective},
                       {"wall_seconds", deterministic_timing() ? 0.0 : f.wall_seconds}});
    }
    j["folds"] = std::move(folds);
    j["mean"] = report.mean;
    j["median"] = report.median;
    j["max"] = report.max;
    j["wall_seconds"] = elapsed_or_zero(start);
    if (!a.out.empty()) write_json(a.out, j);
    if (!a.csv.empty()) {
      append_csv_row(a.csv, a.label.empty() ? "crossval" : a.label, a.method, report.mean,
                     report.median, report.max);
    }
    std::cout << "crossval " << a.method << ": mean " << report.mean << ", median "
              << report.median << ", max " << report.max << " over " << report.folds.size()
              << " folds\n";
    return 0;
  }

  // synthetic scoring against the ground truth on unseen offer sets
  if (a.model.empty() || a.ground_truth.empty() || a.train_sets.empty()) {
    throw std::invalid_argument(
        "evaluate: either use --crossval or provide --model, --ground-truth and --train-sets");
  }
  const gsp::GroundTruth gt = gsp::load_ground_truth_json(a.ground_truth);
  const auto train = gsp::load_offer_sets_csv(a.train_sets);
  const std::set<gsp::OfferSet> train_keys(train.begin(), train.end());

  gsp::RandomEngine rng(0);
  std::vector<gsp::OfferSet> all =
      gsp::gen_offer_sets(gt.n_products, gsp::eligible_offer_set_count(gt.n_products), rng);
  std::sort(all.begin(), all.end());
  std::vector<gsp::OfferSet> test;
  for (const auto& s : all) {
    if (train_keys.count(s) == 0) test.push_back(s);
  }
  if (test.empty()) throw std::invalid_argument("evaluate: no unseen offer sets left");

  gsp::ShareTable truth(test);
  for (std::size_t m = 0; m < test.size(); ++m) {
    truth.row(static_cast<int>(m)) = gsp::true_probabilities(gt, test[m]);
  }
  const gsp::ShareTable x = predictions_from_model_file(a.model, test);
  const double err = gsp::l1_random(x, truth);

  std::vector<double> per_set(test.size(), 0.0);
  for (std::size_t m = 0; m < test.size(); ++m) {
    for (std::size_t pos = 0; pos < test[m].items().size(); ++pos) {
      per_set[m] += std::abs(x.row(static_cast<int>(m))[pos] - truth.row(static_cast<int>(m))[pos]);
    }
  }
  std::vector<double> sorted = per_set;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted.size() % 2 == 1
                            ? sorted[sorted.size() / 2]
                            : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);

  json j;
  j["command"] = "evaluate";
  j["mode"] = "synthetic";
  j["library_version"] = GSP_VERSION_STRING;
  j["config"] = {{"model", a.model},
                 {"ground_truth", a.ground_truth},
                 {"train_sets", a.train_sets},
                 {"n_products", gt.n_products}};
  j["n_test_sets"] = test.size();
  j["l1_random"] = err;
  j["median_per_set"] = median;
  j["max_per_set"] = sorted.back();
  json rows = json::array();
  for (std::size_t m = 0; m < test.size(); ++m) {
    json items = json::array();
    for (gsp::ProductId item : test[m].items()) items.push_back(item);
    rows.push_back({{"items", std::move(items)}, {"l1", per_set[m]}});
  }
  j["per_set"] = std::move(rows);
  j["wall_seconds"] = elapsed_or_zero(start);
  if (!a.out.empty()) write_json(a.out, j);
  if (!a.csv.empty()) {
    append_csv_row(a.csv, a.label.empty() ? "synthetic" : a.label, a.model, err, median,
                   sorted.back());
  }
  std::cout << "synthetic evaluation: expected L1 " << err << " over " << test.size()
            << " unseen offer sets\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized stochastic preference estimation toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* cmd_gen = app.add_subcommand("generate", "generate a synthetic instance");
  cmd_gen->add_option("--gt", gen.gt_kind, "ground-truth family")
      ->check(CLI::IsMember({"gsp", "halo"}));
  cmd_gen->add_option("--n", gen.n, "number of products including option 0");
  cmd_gen->add_option("--m", gen.m, "number of training offer sets");
  cmd_gen->add_option("--t", gen.t, "number of transactions");
  cmd_gen->add_option("--seed", gen.seed, "random seed");
  cmd_gen->add_option("--k", gen.k, "GSP: number of customer types");
  cmd_gen->add_option("--irrational-pct", gen.irrational_pct, "GSP: % of irrational types");
  cmd_gen->add_option("--imax", gen.imax, "GSP: maximum irrationality parameter");
  cmd_gen->add_option("--segments", gen.segments, "halo: number of customer segments");
  cmd_gen->add_option("--interaction-pct", gen.interaction_pct, "halo: % of interacting pairs");
  cmd_gen->add_option("--symmetry", gen.symmetry, "halo: interaction symmetry")
      ->check(CLI::IsMember({"symmetric", "asymmetric"}));
  cmd_gen->add_option("--out-dir", gen.out_dir, "output directory");

  EstimateArgs est;
  CLI::App* cmd_est = app.add_subcommand("estimate", "fit a choice model to transactions");
  cmd_est->add_option("--method", est.method, "estimator")
      ->check(CLI::IsMember({"gpt-r", "gpt-i", "gpt-ic", "rb-r", "halo-mnl"}));
  cmd_est->add_option("--loss", est.loss, "training loss for gpt-*")
      ->check(CLI::IsMember({"l1", "kl"}));
  cmd_est->add_option("--transactions", est.transactions, "transactions CSV")->required();
  cmd_est->add_option("--offer-sets", est.offer_sets, "offer sets CSV")->required();
  cmd_est->add_option("--n", est.n, "number of products (0 = infer)");
  cmd_est->add_option("--out", est.out, "output model JSON");
  cmd_est->add_option("--report", est.report, "output report JSON");
  cmd_est->add_option("--matrix-csv", est.matrix_csv, "halo-mnl: also write the matrix CSV");
  cmd_est->add_option("--seed", est.seed, "random seed");
  cmd_est->add_option("--gamma", est.gamma, "behaviors sampled per iteration");
  cmd_est->add_option("--delta", est.delta, "columns added per iteration");
  cmd_est->add_option("--significance", est.significance, "stopping-test significance");
  cmd_est->add_option("--max-iterations", est.max_iterations, "GPT iteration cap");
  cmd_est->add_option("--cap", est.cap, "rb-r enumeration cap");

  LorArgs lor;
  CLI::App* cmd_lor = app.add_subcommand("lor", "loss of rationality of an instance");
  cmd_lor->add_option("--transactions", lor.transactions, "transactions CSV")->required();
  cmd_lor->add_option("--offer-sets", lor.offer_sets, "offer sets CSV")->required();
  cmd_lor->add_option("--n", lor.n, "number of products (0 = infer)");
  cmd_lor->add_option("--threshold", lor.threshold, "irrationality threshold");
  cmd_lor->add_option("--cap", lor.cap, "enumeration cap");
  cmd_lor->add_option("--out", lor.out, "output report JSON");

  EvaluateArgs ev;
  CLI::App* cmd_ev = app.add_subcommand("evaluate", "score a model or run cross-validation");
  cmd_ev->add_option("--model", ev.model, "model JSON (synthetic mode)");
  cmd_ev->add_option("--ground-truth", ev.ground_truth, "ground truth JSON (synthetic mode)");
  cmd_ev->add_option("--train-sets", ev.train_sets, "training offer sets CSV (synthetic mode)");
  cmd_ev->add_flag("--crossval", ev.crossval, "assortment cross-validation mode");
  cmd_ev->add_option("--transactions", ev.transactions, "transactions CSV (crossval)");
  cmd_ev->add_option("--offer-sets", ev.offer_sets, "offer sets CSV (crossval)");
  cmd_ev->add_option("--method", ev.method, "estimator (crossval)")
      ->check(CLI::IsMember({"gpt-r", "gpt-i", "gpt-ic", "rb-r", "halo-mnl"}));
  cmd_ev->add_option("--loss", ev.loss, "training loss for gpt-*")
      ->check(CLI::IsMember({"l1", "kl"}));
  cmd_ev->add_option("--folds", ev.folds, "number of folds");
  cmd_ev->add_option("--n", ev.n, "number of products (0 = infer)");
  cmd_ev->add_option("--seed", ev.seed, "random seed");
  cmd_ev->add_option("--gamma", ev.gamma, "behaviors sampled per iteration");
  cmd_ev->add_option("--delta", ev.delta, "columns added per iteration");
  cmd_ev->add_option("--significance", ev.significance, "stopping-test significance");
  cmd_ev->add_option("--max-iterations", ev.max_iterations, "GPT iteration cap");
  cmd_ev->add_option("--cap", ev.cap, "rb-r enumeration cap");
  cmd_ev->add_option("--out", ev.out, "output report JSON");
  cmd_ev->add_option("--csv", ev.csv, "append a summary row to this CSV");
  cmd_ev->add_option("--label", ev.label, "label for the CSV row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_gen->parsed()) return run_generate(gen);
    if (cmd_est->parsed()) return run_estimate(est);
    if (cmd_lor->parsed()) return run_lor(lor);
    if (cmd_ev->parsed()) return run_evaluate(ev);
  } catch (const gsp::CapExceededError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const gsp::SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
