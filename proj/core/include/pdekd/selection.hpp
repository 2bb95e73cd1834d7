#ifndef PDEKD_SELECTION_HPP
#define PDEKD_SELECTION_HPP

#include <optional>
#include <string>
#include <vector>

#include "pdekd/kernel_model.hpp"

namespace pdekd {

enum class AicVariant { paper_literal, standard };

struct SelectionConfig {
  int keep = 1;                     // L, terms to retain
  std::vector<std::string> priors;  // protected term names
  AicVariant aic_variant = AicVariant::standard;
  bool auto_stop = false;  // pick the iterate minimizing dev fitting error
};

/// paper-literal: 2|M| - 2 ln(RSS); standard: 2|M| + n ln(RSS/n).
/// RSS is clamped at 1e-300 before the logarithm; a clamp sets *clamped.
double aic_score(int active_count, double residual_sq, std::size_t n_samples,
                 AicVariant variant, bool* clamped = nullptr);

struct EliminationStep {
  std::string removed;
  double aic = 0.0;
  double train_mae = 0.0;
  double dev_mae = 0.0;  // NaN when no dev library was given
};

struct DiscoveredPDE {
  std::vector<std::string> terms;  // surviving term names, library order
  CoefficientField field;
  std::vector<EliminationStep> trace;
  std::string equation;
  double train_mae = 0.0;
  double dev_mae = 0.0;
};

/// One backward-elimination step: refits every candidate set missing one
/// removable term, scores each by AIC, removes the argmin (ties break to the
/// lowest library index).
std::pair<int, CoefficientField> eliminate_one(
    const TermLibrary& lib, const KernelGraph& graph,
    const std::vector<int>& active, const std::vector<int>& prior_indices,
    const SelectionConfig& sel, const KernelConfig& kernel_cfg,
    const ReconstructionSpec& recon = {},
    const Eigen::MatrixXd* warm_start = nullptr);

/// Full backward elimination from all p terms down to `keep` (or, with
/// auto_stop, the iterate with minimal dev fitting error).
DiscoveredPDE discover(const TermLibrary& lib, const KernelGraph& graph,
                       const SelectionConfig& sel,
                       const KernelConfig& kernel_cfg,
                       const TermLibrary* dev_lib = nullptr,
                       const ReconstructionSpec& recon = {});

/// Human-readable form, e.g. "u_t = -0.9982*u*u_x + -0.0025*u_xxx".
/// Spatially varying coefficients render as xi_i(x,y).
std::string render_equation(const TermLibrary& lib,
                            const CoefficientField& field);

}  // namespace pdekd

#endif
