#include "pdekd/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace pdekd {

namespace {

int worker_count() {
  if (const char* env = std::getenv("PDEKD_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 4;
}

double mean_abs_error(const Eigen::VectorXd& y, const std::vector<double>& pred) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    acc += std::abs(y(i) - pred[static_cast<std::size_t>(i)]);
  return acc / static_cast<double>(y.size());
}

}  // namespace

double aic_score(int active_count, double residual_sq, std::size_t n_samples,
                 AicVariant variant, bool* clamped) {
  if (n_samples == 0) throw ArgumentError("aic_score needs n_samples >= 1");
  double rss = residual_sq;
  if (rss < 1e-300) {
    rss = 1e-300;
    if (clamped) *clamped = true;
  }
  if (variant == AicVariant::paper_literal)
    return 2.0 * active_count - 2.0 * std::log(rss);
  return 2.0 * active_count +
         static_cast<double>(n_samples) *
             std::log(rss / static_cast<double>(n_samples));
}

std::pair<int, CoefficientField> eliminate_one(
    const TermLibrary& lib, const KernelGraph& graph,
    const std::vector<int>& active, const std::vector<int>& prior_indices,
    const SelectionConfig& sel, const KernelConfig& kernel_cfg,
    const ReconstructionSpec& recon, const Eigen::MatrixXd* warm_start) {
  std::vector<int> removable;
  for (std::size_t k = 0; k < active.size(); ++k)
    if (std::find(prior_indices.begin(), prior_indices.end(), active[k]) ==
        prior_indices.end())
      removable.push_back(static_cast<int>(k));
  if (removable.empty())
    throw ArgumentError("no removable term (all active terms are priors)");

  struct Candidate {
    double aic = std::numeric_limits<double>::infinity();
    CoefficientField field;
  };
  std::vector<Candidate> results(removable.size());

  // Candidate ranking tolerates a looser solve than the final fit; the AIC
  // gaps between candidates are orders of magnitude above this residual.
  KernelConfig score_cfg = kernel_cfg;
  score_cfg.solver_tol = std::max(kernel_cfg.solver_tol, 1e-6);

  auto run = [&](std::size_t idx) {
    const int drop_pos = removable[idx];
    std::vector<int> trial = active;
    trial.erase(trial.begin() + drop_pos);
    Eigen::MatrixXd warm;
    const Eigen::MatrixXd* warm_ptr = nullptr;
    if (warm_start && warm_start->cols() == static_cast<int>(active.size())) {
      warm.resize(warm_start->rows(), warm_start->cols() - 1);
      warm << warm_start->leftCols(drop_pos),
          warm_start->rightCols(warm_start->cols() - drop_pos - 1);
      warm_ptr = &warm;
    }
    Candidate c;
    c.field = fit(lib, graph, trial, score_cfg, recon, warm_ptr);
    c.aic = aic_score(static_cast<int>(trial.size()), c.field.diag.rss,
                      lib.sample_count(), sel.aic_variant);
    results[idx] = std::move(c);
  };

  const int workers = std::min<int>(worker_count(),
                                    static_cast<int>(removable.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < removable.size(); ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mx;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= removable.size()) return;
          try {
            run(i);
          } catch (...) {
            std::lock_guard<std::mutex> lk(err_mx);
            if (!err) err = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }

  // argmin AIC; ties resolve to the lowest removed library index, and
  // removable[] is ascending in library order already
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].aic < results[best].aic) best = i;
  return {active[removable[best]], std::move(results[best].field)};
}

std::string render_equation(const TermLibrary& lib,
                            const CoefficientField& field) {
  std::ostringstream os;
  os << lib.target_field_name << "_t = ";
  for (std::size_t i = 0; i < field.term_names.size(); ++i) {
    if (i) os << " + ";
    const auto col = field.Xi.col(static_cast<Eigen::Index>(i));
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().mean());
    if (sd <= 1e-3 * std::max(1e-12, std::abs(mean))) {
      os << mean;
    } else {
      os << "xi_" << (i + 1) << "(x,y)";
    }
    if (field.term_names[i] != "1") os << "*" << field.term_names[i];
  }
  return os.str();
}

DiscoveredPDE discover(const TermLibrary& lib, const KernelGraph& graph,
                       const SelectionConfig& sel,
                       const KernelConfig& kernel_cfg,
                       const TermLibrary* dev_lib,
                       const ReconstructionSpec& recon) {
  const int p = static_cast<int>(lib.term_count());
  if (sel.keep < 1 || sel.keep > p)
    throw ConfigError("L", "must be in [1, p]");
  if (sel.auto_stop && !dev_lib)
    throw ConfigError("auto_stop", "requires a development library");

  std::vector<int> priors;
  for (const auto& name : sel.priors) {
    int idx = lib.term_index(name);
    if (idx < 0) throw ConfigError("priors", "unknown term '" + name + "'");
    priors.push_back(idx);
  }
  if (sel.keep < static_cast<int>(priors.size()))
    throw ConfigError("L", "smaller than the prior term count");

  std::vector<int> active(p);
  for (int i = 0; i < p; ++i) active[i] = i;

  DiscoveredPDE out;
  CoefficientField current = fit(lib, graph, active, kernel_cfg, recon);

  auto eval_maes = [&](const CoefficientField& f, double& train, double& dev) {
    std::vector<double> pr = predict(f, lib);
    train = mean_abs_error(lib.target, pr);
    if (dev_lib) {
      std::vector<double> pd = predict(f, *dev_lib);
      dev = mean_abs_error(dev_lib->target, pd);
    } else {
      dev = std::numeric_limits<double>::quiet_NaN();
    }
  };

  std::vector<int> best_active = active;
  double best_dev = std::numeric_limits<double>::infinity();
  if (sel.auto_stop) {
    double tr, dv;
    eval_maes(current, tr, dv);
    best_dev = dv;
  }

  const int floor_count =
      sel.auto_stop ? std::max<int>(1, static_cast<int>(priors.size()) + 1)
                    : sel.keep;

  while (static_cast<int>(active.size()) > floor_count) {
    auto [removed, refit] =
        eliminate_one(lib, graph, active, priors, sel, kernel_cfg, recon,
                      &current.W);
    active.erase(std::find(active.begin(), active.end(), removed));
    current = std::move(refit);

    EliminationStep step;
    step.removed = lib.terms[removed].name;
    step.aic = aic_score(static_cast<int>(active.size()), current.diag.rss,
                         lib.sample_count(), sel.aic_variant);
    eval_maes(current, step.train_mae, step.dev_mae);
    out.trace.push_back(step);

    if (sel.auto_stop && step.dev_mae < best_dev) {
      best_dev = step.dev_mae;
      best_active = active;
    }
  }

  if (sel.auto_stop) active = best_active;

  // final fit on the surviving set
  current = fit(lib, graph, active, kernel_cfg, recon);
  for (int a : active) out.terms.push_back(lib.terms[a].name);
  eval_maes(current, out.train_mae, out.dev_mae);
  out.field = std::move(current);
  out.equation = render_equation(lib, out.field);
  return out;
}

}  // namespace pdekd
