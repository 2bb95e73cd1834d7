#ifndef PDEKD_BASELINES_HPP
#define PDEKD_BASELINES_HPP

#include "pdekd/kernel_model.hpp"

namespace pdekd {

struct BaselineConfig {
  double ridge = 1e-6;
  double threshold = 0.0;   // group-pruning cutoff on per-term RMS magnitude
  double radius = 10.0;     // local-average neighborhoods
  int coarsen_factor = 1;   // merged-cell edge length in blocks
};

/// Independent ridge regression per block, followed by one group-threshold
/// pass (terms with small RMS coefficient magnitude zeroed, rest refit).
CoefficientField fit_pointwise(const TermLibrary& lib,
                               const BaselineConfig& cfg);

/// Kernel fit with uniform neighbor weights in place of the RBF.
CoefficientField fit_local_average(const TermLibrary& lib,
                                   const KernelGraph& uniform_graph,
                                   const BaselineConfig& cfg,
                                   const KernelConfig& kernel_cfg = {});

/// Pools blocks into square cells of `coarsen_factor` blocks per edge, fits
/// one coefficient vector per cell, broadcasts it back to the members.
CoefficientField fit_coarsened(const TermLibrary& lib,
                               const BaselineConfig& cfg);

}  // namespace pdekd

#endif
