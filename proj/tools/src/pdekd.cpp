#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdekd/baselines.hpp"
#include "pdekd/bundle.hpp"
#include "pdekd/metrics.hpp"
#include "pdekd/selection.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string safe_name(std::string s) {
  for (char& c : s)
    if (c == '*' || c == '^' || c == '/') c = '_';
  return s;
}

void write_run_json(const std::string& dir, const std::string& command,
                    const json& effective) {
  json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["config"] = effective;
  fs::create_directories(dir);
  std::ofstream(dir + "/run.json") << j.dump(2) << "\n";
}

json options_json(const pdekd::DiscoverOptions& opt) {
  json j;
  const pdekd::ConfigFile cfg = opt.to_config();
  for (const auto& [k, v] : cfg.entries()) j[k] = v;
  return j;
}

/// Overlays an explicit config file onto the bundle's per-target defaults:
/// keys present in the file win, everything else keeps the bundle value.
pdekd::DiscoverOptions merge_options(const pdekd::DiscoverOptions& base,
                                     const std::string& config_path) {
  pdekd::ConfigFile file = pdekd::ConfigFile::parse_file(config_path);
  pdekd::ConfigFile merged = base.to_config();
  for (const auto& [k, v] : file.entries()) merged.set(k, v);
  // from_config rejects unknown keys, including any typo from the file
  return pdekd::DiscoverOptions::from_config(merged);
}

struct DiscoverOutcome {
  pdekd::DiscoveredPDE pde;
  pdekd::MetricsReport metrics;
};

DiscoverOutcome run_discovery(const pdekd::DatasetBundle& bundle,
                              const pdekd::BundleTarget& target,
                              const pdekd::DiscoverOptions& opt) {
  pdekd::TermLibrary train = pdekd::bundle_library(bundle.train, opt);
  pdekd::TermLibrary dev = pdekd::bundle_library(bundle.dev, opt);
  pdekd::TermLibrary test = pdekd::bundle_library(bundle.test, opt);

  DiscoverOutcome out;
  if (opt.method == "kernel") {
    pdekd::KernelGraph graph = pdekd::build_kernel_graph(train, opt.kernel);
    pdekd::ReconstructionSpec recon;
    recon.enabled = opt.kernel.beta > 0;
    out.pde = pdekd::discover(train, graph, opt.selection, opt.kernel, &dev,
                              recon);
  } else {
    pdekd::CoefficientField field;
    if (opt.method == "pointwise") {
      field = pdekd::fit_pointwise(train, opt.baseline);
    } else if (opt.method == "average") {
      pdekd::KernelGraph graph =
          pdekd::build_uniform_graph(train, opt.baseline.radius);
      field = pdekd::fit_local_average(train, graph, opt.baseline, opt.kernel);
    } else {
      field = pdekd::fit_coarsened(train, opt.baseline);
    }
    out.pde.terms = field.term_names;
    out.pde.train_mae = pdekd::fitting_error(field, train);
    out.pde.dev_mae = pdekd::fitting_error(field, dev);
    out.pde.equation = pdekd::render_equation(train, field);
    out.pde.field = std::move(field);
  }

  out.metrics.recall = pdekd::recall(out.pde.terms, target.truth.terms);
  out.metrics.precision = pdekd::precision(out.pde.terms, target.truth.terms);
  out.metrics.coef_mae = pdekd::coefficient_error(
      out.pde.field, target.truth, pdekd::CoefErrorKind::mae);
  out.metrics.coef_rel = pdekd::coefficient_error(
      out.pde.field, target.truth, pdekd::CoefErrorKind::relative,
      &out.metrics.warnings);
  out.metrics.fit_train = out.pde.train_mae;
  out.metrics.fit_dev = out.pde.dev_mae;
  out.metrics.fit_test = pdekd::fitting_error(out.pde.field, test);
  return out;
}

void save_result(const std::string& dir, const std::string& dataset,
                 const std::string& method, const std::string& target_field,
                 const DiscoverOutcome& out) {
  fs::create_directories(dir);
  const pdekd::CoefficientField& f = out.pde.field;

  std::ofstream csv(dir + "/coefficients.csv");
  csv.precision(17);
  csv << "x,y";
  for (const auto& n : f.term_names) csv << "," << safe_name(n);
  csv << "\n";
  for (Eigen::Index b = 0; b < f.Xi.rows(); ++b) {
    csv << f.block_coords[static_cast<std::size_t>(b)][0] << ","
        << f.block_coords[static_cast<std::size_t>(b)][1];
    for (Eigen::Index c = 0; c < f.Xi.cols(); ++c) csv << "," << f.Xi(b, c);
    csv << "\n";
  }

  json j;
  j["dataset"] = dataset;
  j["method"] = method;
  j["target"] = target_field;
  j["terms"] = f.term_names;
  j["equation"] = out.pde.equation;
  j["fit_train"] = out.metrics.fit_train;
  j["fit_dev"] = out.metrics.fit_dev;
  j["fit_test"] = out.metrics.fit_test;
  j["recall"] = out.metrics.recall;
  j["precision"] = out.metrics.precision;
  j["coef_mae"] = out.metrics.coef_mae;
  j["coef_rel"] = out.metrics.coef_rel;
  j["coefficients_csv"] = "coefficients.csv";
  json trace = json::array();
  for (const auto& step : out.pde.trace) {
    json s;
    s["removed"] = step.removed;
    s["aic"] = step.aic;
    s["train_mae"] = step.train_mae;
    s["dev_mae"] = std::isfinite(step.dev_mae) ? json(step.dev_mae) : json();
    trace.push_back(s);
  }
  j["trace"] = trace;
  std::ofstream(dir + "/result.json") << j.dump(2) << "\n";
}

struct LoadedResult {
  pdekd::CoefficientField field;
  json meta;
};

LoadedResult load_result(const std::string& path) {
  const std::string jpath =
      fs::is_directory(path) ? path + "/result.json" : path;
  std::ifstream in(jpath);
  if (!in) throw pdekd::Error("cannot open result '" + jpath + "'");
  LoadedResult r;
  r.meta = json::parse(in);
  const fs::path dir = fs::path(jpath).parent_path();
  const std::string csv_path =
      (dir / r.meta.at("coefficients_csv").get<std::string>()).string();
  std::ifstream csv(csv_path);
  if (!csv) throw pdekd::Error("cannot open '" + csv_path + "'");

  r.field.term_names = r.meta.at("terms").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < r.field.term_names.size(); ++i)
    r.field.active.push_back(static_cast<int>(i));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != r.field.term_names.size() + 2)
      throw pdekd::FormatError("coefficient CSV column count mismatch");
    rows.push_back(row);
  }
  r.field.Xi.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(r.field.term_names.size()));
  for (std::size_t b = 0; b < rows.size(); ++b) {
    r.field.block_coords.push_back({rows[b][0], rows[b][1]});
    for (std::size_t c = 0; c < r.field.term_names.size(); ++c)
      r.field.Xi(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c)) =
          rows[b][c + 2];
  }
  r.field.W = r.field.Xi;
  return r;
}

int cmd_generate(const std::string& name, const std::string& out, double noise,
                 std::size_t samples, std::uint64_t seed) {
  pdekd::DatasetBundle b = pdekd::gen_noisy_benchmark(name, noise, samples,
                                                      seed);
  pdekd::save_bundle(b, out);
  json cfg;
  cfg["name"] = name;
  cfg["noise"] = noise;
  cfg["samples"] = b.samples;
  cfg["seed"] = seed;
  write_run_json(out, "generate", cfg);
  std::cout << "wrote bundle '" << b.name << "' to " << out << ": train "
            << b.train.size() << ", dev " << b.dev.size() << ", test "
            << b.test.size() << " samples";
  std::cout << ", targets";
  for (const auto& t : b.targets) std::cout << " " << t.options.target;
  std::cout << "\n";
  return 0;
}

int cmd_discover(const std::string& dataset, const std::string& config,
                 const std::string& target, const std::string& method,
                 const std::string& out_dir) {
  pdekd::DatasetBundle bundle = pdekd::load_bundle(dataset);
  const pdekd::BundleTarget& tg =
      target.empty() ? bundle.targets.front() : bundle.target(target);
  pdekd::DiscoverOptions opt =
      config.empty() ? tg.options : merge_options(tg.options, config);
  if (!method.empty()) opt.method = method;
  if (opt.method != "kernel" && opt.method != "pointwise" &&
      opt.method != "average" && opt.method != "coarsen")
    throw pdekd::ConfigError("method", "unknown method '" + opt.method + "'");

  DiscoverOutcome out = run_discovery(bundle, tg, opt);
  const std::string dir =
      out_dir.empty()
          ? dataset + "/result_" + tg.options.target + "_" + opt.method
          : out_dir;
  save_result(dir, dataset, opt.method, tg.options.target, out);
  write_run_json(dir, "discover", options_json(opt));
  std::cout << out.pde.equation << "\n";
  std::cout << "terms:";
  for (const auto& t : out.pde.terms) std::cout << " " << t;
  std::cout << "\nfit mae train/dev/test: " << out.metrics.fit_train << " / "
            << out.metrics.fit_dev << " / " << out.metrics.fit_test << "\n";
  std::cout << "result written to " << dir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& result_path, const std::string& truth_path,
                 const std::string& out_path) {
  LoadedResult res = load_result(result_path);
  pdekd::GroundTruth truth = pdekd::load_truth_json(truth_path);
  if (res.meta.contains("target") &&
      res.meta.at("target").get<std::string>() != truth.target_field)
    throw pdekd::ValidationError(
        "result and truth describe different target fields");

  pdekd::MetricsReport rep;
  rep.recall = pdekd::recall(res.field.term_names, truth.terms);
  rep.precision = pdekd::precision(res.field.term_names, truth.terms);
  rep.coef_mae = pdekd::coefficient_error(res.field, truth,
                                          pdekd::CoefErrorKind::mae);
  rep.coef_rel = pdekd::coefficient_error(
      res.field, truth, pdekd::CoefErrorKind::relative, &rep.warnings);
  rep.fit_train = res.meta.value("fit_train", 0.0);
  rep.fit_dev = res.meta.value("fit_dev", 0.0);
  rep.fit_test = res.meta.value("fit_test", 0.0);

  const std::string text = rep.to_json();
  std::cout << text << "\n";
  if (!out_path.empty()) std::ofstream(out_path) << text << "\n";
  return 0;
}

int cmd_sweep(const std::string& dataset, std::vector<double> radii,
              std::vector<double> gammas, const std::string& target,
              const std::string& out_csv) {
  if (radii.empty()) radii = {2, 5, 10};
  if (gammas.empty()) gammas = {0.03, 0.1, 0.3, 1.0};
  pdekd::DatasetBundle bundle = pdekd::load_bundle(dataset);
  const pdekd::BundleTarget& tg =
      target.empty() ? bundle.targets.front() : bundle.target(target);

  std::ostringstream table;
  table.precision(10);
  table << "r,gamma,recall,coef_mae,coef_rel,fit_test,status\n";
  for (double r : radii)
    for (double g : gammas) {
      pdekd::DiscoverOptions opt = tg.options;
      opt.kernel.radius = r;
      opt.kernel.gamma = g;
      opt.method = "kernel";
      table << r << "," << g << ",";
      try {
        DiscoverOutcome out = run_discovery(bundle, tg, opt);
        table << out.metrics.recall << "," << out.metrics.coef_mae << ","
              << out.metrics.coef_rel << "," << out.metrics.fit_test << ",ok";
      } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), ',', ';');
        table << ",,," << "error: " << msg;
      }
      table << "\n";
      std::cout << "sweep cell r=" << r << " gamma=" << g << " done\n";
    }

  std::cout << table.str();
  if (!out_csv.empty()) {
    if (fs::path(out_csv).has_parent_path())
      fs::create_directories(fs::path(out_csv).parent_path());
    std::ofstream(out_csv) << table.str();
  }
  return 0;
}

/// Synthetic fit-time benchmark: B blocks on a square lattice, fixed term
/// count and samples per block; reports median-of-3 wall time per size and
/// the log-log scaling exponent.
int cmd_bench(std::vector<long> sizes, const std::string& out_csv) {
  if (sizes.empty()) sizes = {256, 512, 1024, 2048};
  std::ostringstream table;
  table << "blocks,seconds\n";
  std::vector<double> log_b, log_t;
  for (long B : sizes) {
    const int side = static_cast<int>(std::ceil(std::sqrt(double(B))));
    const int p = 6, per_block = 12;
    std::mt19937_64 rng(42);
    std::normal_distribution<double> normal(0.0, 1.0);

    pdekd::TermLibrary lib;
    for (int i = 0; i < p; ++i) {
      pdekd::TermDescriptor d;
      d.name = "f" + std::to_string(i);
      lib.terms.push_back(d);
    }
    const long n = B * per_block;
    lib.design.resize(n, p);
    lib.target.resize(n);
    lib.x.resize(n);
    lib.y.resize(n);
    lib.t.resize(n);
    lib.target_field.assign(n, 0.0);
    lib.block_index.resize(n);
    lib.n_blocks = static_cast<int>(B);
    lib.block_coords.resize(B);
    Eigen::MatrixXd w_true(B, p);
    for (int i = 0; i < B * p; ++i) w_true(i / p, i % p) = normal(rng);
    for (long b = 0; b < B; ++b)
      lib.block_coords[b] = {double(b % side), double(b / side)};
    for (long j = 0; j < n; ++j) {
      const long b = j / per_block;
      lib.block_index[j] = static_cast<int>(b);
      lib.x[j] = lib.block_coords[b][0];
      lib.y[j] = lib.block_coords[b][1];
      lib.t[j] = double(j % per_block);
      double y = 0;
      for (int c = 0; c < p; ++c) {
        lib.design(j, c) = normal(rng);
        y += lib.design(j, c) * w_true(b, c);
      }
      lib.target(j) = y + 0.01 * normal(rng);
    }

    pdekd::KernelConfig kc;
    kc.radius = 3.0;
    kc.gamma = 1.0;
    kc.dense_threshold = 0;  // always exercise the iterative path
    pdekd::KernelGraph graph = pdekd::build_kernel_graph(lib, kc);
    std::vector<int> active(p);
    for (int i = 0; i < p; ++i) active[i] = i;

    std::vector<double> times;
    for (int rep = 0; rep < 3; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      pdekd::CoefficientField f = pdekd::fit(lib, graph, active, kc);
      auto t1 = std::chrono::steady_clock::now();
      (void)f;
      times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    const double sec = times[1];
    table << B << "," << sec << "\n";
    log_b.push_back(std::log(double(B)));
    log_t.push_back(std::log(std::max(sec, 1e-9)));
    std::cout << "bench " << B << " blocks: " << sec << " s\n";
  }

  std::string exponent = "undefined";
  if (log_b.size() >= 2) {
    const double n = double(log_b.size());
    double sb = 0, st = 0, sbb = 0, sbt = 0;
    for (std::size_t i = 0; i < log_b.size(); ++i) {
      sb += log_b[i];
      st += log_t[i];
      sbb += log_b[i] * log_b[i];
      sbt += log_b[i] * log_t[i];
    }
    const double slope = (n * sbt - sb * st) / (n * sbb - sb * sb);
    std::ostringstream es;
    es.precision(4);
    es << slope;
    exponent = es.str();
  }
  table << "# scaling_exponent," << exponent << "\n";
  std::cout << "scaling exponent: " << exponent << "\n";
  if (!out_csv.empty()) {
    if (fs::path(out_csv).has_parent_path())
      fs::create_directories(fs::path(out_csv).parent_path());
    std::ofstream(out_csv) << table.str();
  }
  return 0;
}

int cmd_plot(const std::string& result_path, const std::string& truth_path,
             const std::string& out_dir) {
  LoadedResult res = load_result(result_path);
  pdekd::GroundTruth truth = pdekd::load_truth_json(truth_path);
  if (truth.coords.empty())
    throw pdekd::ValidationError(
        "plot needs a gridded result: the truth has no spatial coefficient "
        "grid");
  fs::create_directories(out_dir);
  pdekd::export_residuals(res.field, truth, out_dir + "/coef");
  json cfg;
  cfg["result"] = result_path;
  cfg["truth"] = truth_path;
  write_run_json(out_dir, "plot", cfg);
  std::cout << "wrote " << res.field.term_names.size() * 3
            << " CSV grids and SVG heatmaps to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discovery of parametric PDEs from sparse noisy data"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Create a benchmark dataset");
  std::string gen_name, gen_out;
  double gen_noise = 0.0;
  std::size_t gen_samples = 10000;
  std::uint64_t gen_seed = 0;
  gen->add_option("name", gen_name,
                  "burgers | kdv | chafee | hnc1..hnc5")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--noise", gen_noise, "Relative noise level eta");
  gen->add_option("--samples", gen_samples, "Irregular sample count");
  gen->add_option("--seed", gen_seed, "Master seed");

  // discover
  auto* dis = app.add_subcommand("discover", "Run PDE discovery on a bundle");
  std::string dis_dataset, dis_config, dis_target, dis_method, dis_out;
  dis->add_option("dataset", dis_dataset, "Bundle directory")->required();
  dis->add_option("--config", dis_config, "Discover config file");
  dis->add_option("--target", dis_target, "Target field (default: first)");
  dis->add_option("--method", dis_method,
                  "kernel | pointwise | average | coarsen");
  dis->add_option("--out", dis_out, "Result directory");

  // evaluate
  auto* eva = app.add_subcommand("evaluate", "Score a result against truth");
  std::string eva_result, eva_truth, eva_out;
  eva->add_option("result", eva_result, "Result directory or JSON")->required();
  eva->add_option("truth", eva_truth, "truth_<field>.json path")->required();
  eva->add_option("--out", eva_out, "Metrics JSON output path");

  // sweep
  auto* swe = app.add_subcommand("sweep", "Hyperparameter grid sweep");
  std::string swe_dataset, swe_target, swe_out;
  std::vector<double> swe_r, swe_g;
  swe->add_option("dataset", swe_dataset, "Bundle directory")->required();
  swe->add_option("--r", swe_r, "Radius values (default 2 5 10)");
  swe->add_option("--gamma", swe_g, "Gamma values (default 0.03 0.1 0.3 1)");
  swe->add_option("--target", swe_target, "Target field");
  swe->add_option("--out", swe_out, "CSV output path");

  // bench
  auto* ben = app.add_subcommand("bench", "Fit-time scaling benchmark");
  std::vector<long> ben_sizes;
  std::string ben_out;
  ben->add_option("--sizes", ben_sizes, "Block counts (increasing)");
  ben->add_option("--out", ben_out, "CSV output path");

  // plot
  auto* plo = app.add_subcommand("plot", "Export coefficient heatmap data");
  std::string plo_result, plo_truth, plo_out;
  plo->add_option("result", plo_result, "Result directory or JSON")->required();
  plo->add_option("truth", plo_truth, "truth_<field>.json path")->required();
  plo->add_option("--out", plo_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed())
      return cmd_generate(gen_name, gen_out, gen_noise, gen_samples, gen_seed);
    if (dis->parsed())
      return cmd_discover(dis_dataset, dis_config, dis_target, dis_method,
                          dis_out);
    if (eva->parsed()) return cmd_evaluate(eva_result, eva_truth, eva_out);
    if (swe->parsed())
      return cmd_sweep(swe_dataset, swe_r, swe_g, swe_target, swe_out);
    if (ben->parsed()) return cmd_bench(ben_sizes, ben_out);
    if (plo->parsed()) return cmd_plot(plo_result, plo_truth, plo_out);
  } catch (const pdekd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const pdekd::ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
