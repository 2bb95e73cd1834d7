#ifndef PDEKD_METRICS_HPP
#define PDEKD_METRICS_HPP

#include <string>
#include <vector>

#include "pdekd/generators.hpp"
#include "pdekd/kernel_model.hpp"

namespace pdekd {

/// 100 * |discovered ∩ truth| / |truth| on canonical term names. Extra
/// discovered terms do not lower the score.
double recall(const std::vector<std::string>& discovered,
              const std::vector<std::string>& truth);

/// 100 * |discovered ∩ truth| / |discovered|; 0 for an empty discovered set.
double precision(const std::vector<std::string>& discovered,
                 const std::vector<std::string>& truth);

enum class CoefErrorKind { mae, relative };

/// mae: mean over blocks and truth terms of |Xi - xi|; relative: per-term
/// mean|Xi - xi| / mean|xi|, averaged over terms. Discovered terms outside
/// the truth contribute |Xi| against zero. Truth terms that are identically
/// zero are skipped under `relative` (a warning lands in *warnings).
double coefficient_error(const CoefficientField& field,
                         const GroundTruth& truth, CoefErrorKind kind,
                         std::vector<std::string>* warnings = nullptr);

/// Mean |Y - predict(field, lib)| over the library's samples.
double fitting_error(const CoefficientField& field, const TermLibrary& lib);

/// Per active term, writes CSV grids of truth, estimate, and absolute
/// residual under `path` (prefix), plus an SVG heatmap triplet per term.
void export_residuals(const CoefficientField& field, const GroundTruth& truth,
                      const std::string& path);

struct MetricsReport {
  double recall = 0.0;
  double precision = 0.0;
  double coef_mae = 0.0;
  double coef_rel = 0.0;
  double fit_train = 0.0;
  double fit_dev = 0.0;
  double fit_test = 0.0;
  std::vector<std::string> warnings;

  std::string to_json() const;
};

}  // namespace pdekd

#endif
