#ifndef PDEKD_DIFFERENTIATION_HPP
#define PDEKD_DIFFERENTIATION_HPP

#include <string>
#include <vector>

#include "pdekd/sample_set.hpp"

namespace pdekd {

enum class Axis { x, y, t };

struct DerivSpec {
  std::string field = "u";
  Axis axis = Axis::x;
  int order = 1;
};

enum class DiffMode {
  grid_central,      // finite differences on the lattice
  local_polynomial,  // weighted local fits on scattered samples
  precomputed        // derivative values already stored as fields
};

struct DiffConfig {
  DiffMode mode = DiffMode::grid_central;
  int poly_degree = 4;
  int neighbor_count = 30;
  int smoothing_window = 1;  // moving-average pre-smoothing, odd, 1 = off
  // Odd window > 0 switches the grid path to least-squares polynomial
  // differencing along the axis (noise-tolerant); 0 = plain stencils.
  int sg_window = 0;
  int sg_degree = 4;
  // Overrides for the time axis; -1 falls back to sg_window / sg_degree.
  int sg_window_t = -1;
  int sg_degree_t = -1;
  // Wrap spatial stencils around instead of shifting them at the edges.
  bool periodic_space = false;
  // Apply the zeroth-order polynomial projection of the other axes to every
  // derivative column. All columns then share one separable filter, so the
  // filter's attenuation cancels between the target and the candidates
  // instead of biasing the regression.
  bool cross_smooth = false;
};

/// Finite-difference weights for the m-th derivative at x0 over the given
/// nodes (Fornberg's recurrence).
std::vector<double> fd_weights(double x0, const std::vector<double>& nodes,
                               int order);

/// Central differences in the interior, one-sided stencils of the same
/// derivative order at the boundary. Second-order accurate, exact on
/// polynomials of degree order+1.
std::vector<double> differentiate_grid(const SampleSet& set,
                                       const DerivSpec& spec);

/// As above, honoring cfg.smoothing_window / cfg.sg_window.
std::vector<double> differentiate_grid(const SampleSet& set,
                                       const DerivSpec& spec,
                                       const DiffConfig& cfg);

struct ScatterDiagnostics {
  int rank_deficient_fits = 0;
};

/// Weighted local polynomial fit over the nearest neighbors of every sample;
/// returns the analytic derivative of the fit at the sample point. Exact on
/// polynomials up to cfg.poly_degree.
std::vector<double> differentiate_scattered(const SampleSet& set,
                                            const DerivSpec& spec,
                                            const DiffConfig& cfg,
                                            ScatterDiagnostics* diag = nullptr);

/// Moving average along each grid axis; window must be odd, 1 is identity.
/// With periodic_space the spatial axes wrap around.
std::vector<double> smooth_field(const std::vector<double>& values,
                                 const SampleSet& set, int window,
                                 bool periodic_space = false);

}  // namespace pdekd

#endif
