#ifndef PDEKD_GENERATORS_HPP
#define PDEKD_GENERATORS_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pdekd/sample_set.hpp"
#include "pdekd/term_library.hpp"

namespace pdekd {

/// The generating equation: canonical term names with their coefficient
/// fields. A size-1 field is a constant coefficient; otherwise values live on
/// the listed spatial points.
struct GroundTruth {
  std::string target_field = "u";
  std::vector<std::string> terms;        // canonical names
  std::vector<Eigen::VectorXd> coeffs;   // per term; size 1 = constant
  std::vector<std::array<double, 2>> coords;  // empty when all constant
  std::string equation;

  /// Coefficient of `term` at the spatial point nearest (x, y).
  double value_at(std::size_t term, double x, double y) const;
};

/// Log-conductivity realization from a truncated Karhunen-Loeve expansion.
struct ConductivityField {
  int nx = 0, ny = 0;
  double domain_length = 0.0;
  double correlation_length = 0.0;
  int n_terms = 0;
  double mean = 0.0;
  double variance = 0.0;
  std::uint64_t seed = 0;
  Eigen::VectorXd logk;  // nx*ny, index ix*ny + iy

  double k(int ix, int iy) const { return std::exp(logk(ix * ny + iy)); }
};

/// Coupled 2D viscous Burgers system, periodic boundaries, explicit stepping
/// with stability-limited internal substeps; fields u and v.
std::pair<SampleSet, GroundTruth> gen_burgers2d(int nx = 100, int ny = 100,
                                                int nt = 200,
                                                double viscosity = 0.005,
                                                std::uint64_t seed = 0,
                                                double amplitude = 0.5);

/// Korteweg-de Vries equation u_t = -u u_x - 0.0025 u_xxx on a periodic 1D
/// domain, two-soliton initial profile scaled by `amplitude`.
std::pair<SampleSet, GroundTruth> gen_kdv(int nx = 512, int nt = 201,
                                          std::uint64_t seed = 0,
                                          double amplitude = 1.0);

/// Chafee-Infante equation u_t = u_xx - u + u^3, homogeneous Dirichlet
/// boundaries, semi-implicit stepping; seeded smooth random superposition
/// initial profile with peak `amplitude`.
std::pair<SampleSet, GroundTruth> gen_chafee_infante(int nx = 301,
                                                     int nt = 201,
                                                     std::uint64_t seed = 0,
                                                     double amplitude = 0.9);

/// Gaussian log-conductivity field with separable exponential covariance;
/// 1D eigenpairs found by bisection on the transcendental characteristic
/// equations (tolerance 1e-12).
ConductivityField gen_kle_field(int nx = 51, int ny = 51,
                                double domain_length = 1020.0,
                                double correlation_length = 408.0,
                                int n_terms = 20, double mean = 0.0,
                                double variance = 1.0, std::uint64_t seed = 0);

/// Transient seepage (confined groundwater flow) on the conductivity grid:
/// backward-Euler finite volumes; the left edge holds a fixed head profile
/// peaking at `boundary_left` mid-edge (varying along y so the flow has real
/// y-components), the right edge is fixed at `boundary_right`, top/bottom
/// are no-flow. Heads are referenced to the right-boundary datum, which
/// keeps polynomial candidates like u*u_x distinguishable from u_x. The
/// initial head adds a seeded smooth random perturbation: a pure relaxation
/// from a bland start collapses onto one decaying mode, leaving every site
/// with proportional time profiles and the coefficients unidentifiable.
/// Coordinates are emitted in grid-index units, so the expanded truth
/// coefficients are K/(S_s dx^2) etc. in those units.
std::pair<SampleSet, GroundTruth> gen_seepage(const ConductivityField& field,
                                              double specific_storage = 1e-4,
                                              int nt = 101,
                                              double boundary_left = 2.0,
                                              double boundary_right = 0.0,
                                              double dt = 0.05,
                                              std::uint64_t seed = 0);

}  // namespace pdekd

#endif
