#ifndef PDEKD_KERNEL_MODEL_HPP
#define PDEKD_KERNEL_MODEL_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "pdekd/term_library.hpp"

namespace pdekd {

struct KernelConfig {
  double radius = 10.0;        // neighbor cutoff on spatial distance
  double gamma = 1.0;          // RBF bandwidth (squared-length scale)
  double ridge = 1e-6;         // damping on the parameters W
  double beta = 0.0;           // one-step reconstruction penalty weight
  double solver_tol = 1e-9;
  int solver_max_iter = 4000;
  int dense_threshold = 2000;  // direct solve at or below this unknown count
};

/// Sparse neighbor structure over block centroids with RBF weights.
struct KernelGraph {
  int n_blocks = 0;
  std::vector<std::array<double, 2>> block_coords;
  Eigen::SparseMatrix<double, Eigen::RowMajor> raw;   // symmetric kernel values
  Eigen::SparseMatrix<double, Eigen::RowMajor> norm;  // row-stochastic
};

/// Neighbor search within `radius` over block centroids; raw weight
/// exp(-d^2 / 2 gamma), rows normalized to sum to one.
KernelGraph build_kernel_graph(const TermLibrary& lib, const KernelConfig& cfg);

/// Same neighbor structure but uniform weights (the averaging estimator).
KernelGraph build_uniform_graph(const TermLibrary& lib, double radius);

/// Xi = norm * W, applied per term column.
Eigen::MatrixXd smooth_parameters(const KernelGraph& graph,
                                  const Eigen::MatrixXd& W);

struct ReconstructionSpec {
  bool enabled = false;
  double dt = 0.0;  // time-slice spacing; 0 = take from grid metadata
};

struct FitDiagnostics {
  double rss = 0.0;        // ||Y - X Xi||^2 on the fitted samples
  double objective = 0.0;  // rss + beta and ridge penalties
  int iterations = 0;
  bool used_dense = false;
  bool converged = true;
  std::vector<double> objective_trace;  // per CG iteration, non-increasing
};

/// Coefficient estimate: per-block parameters W and smoothed coefficients Xi
/// restricted to the active terms.
struct CoefficientField {
  std::vector<int> active;  // indices into the library's term list
  std::vector<std::string> term_names;
  Eigen::MatrixXd W;   // n_blocks x |active|
  Eigen::MatrixXd Xi;  // n_blocks x |active|
  std::vector<std::array<double, 2>> block_coords;
  FitDiagnostics diag;

  int term_column(const std::string& name) const;  // -1 if absent
};

/// Kernel-coupled least squares in W (dense direct below the threshold,
/// Jacobi-preconditioned conjugate gradients on the normal equations above).
/// `warm_start` may carry a previous W of matching shape.
CoefficientField fit(const TermLibrary& lib, const KernelGraph& graph,
                     const std::vector<int>& active, const KernelConfig& cfg,
                     const ReconstructionSpec& recon = {},
                     const Eigen::MatrixXd* warm_start = nullptr);

/// Per-sample prediction sum_i X[j,i] Xi_i[block(j)]. Library blocks are
/// matched to field blocks by spatial coordinates.
std::vector<double> predict(const CoefficientField& field,
                            const TermLibrary& lib);

}  // namespace pdekd

#endif
