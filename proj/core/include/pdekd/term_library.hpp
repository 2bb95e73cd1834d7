#ifndef PDEKD_TERM_LIBRARY_HPP
#define PDEKD_TERM_LIBRARY_HPP

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdekd/differentiation.hpp"
#include "pdekd/sample_set.hpp"

namespace pdekd {

/// Product of field powers, e.g. {} = 1, {("u",2)} = u^2, {("u",1),("v",1)} = uv.
struct PolySpec {
  std::vector<std::pair<std::string, int>> factors;
  std::string name() const;
  int degree() const;
};

/// A derivative factor; a sum of DerivSpecs covers composite factors such as
/// the Laplacian. An empty sum is the identity factor.
struct DerivTerm {
  std::string name;             // "u_x", "lap_u", "1"
  std::vector<DerivSpec> sum;   // values are summed

  static DerivTerm identity();
  static DerivTerm single(const std::string& field, Axis axis, int order);
  static DerivTerm laplacian(const std::string& field);
  int order() const;
};

struct TermDescriptor {
  std::string name;
  PolySpec poly;
  DerivTerm deriv;
  int poly_degree() const { return poly.degree(); }
  int deriv_order() const { return deriv.order(); }
};

/// Candidate design matrix: per-sample values of every term plus the target.
struct TermLibrary {
  std::vector<TermDescriptor> terms;
  Eigen::MatrixXd design;  // N x p
  Eigen::VectorXd target;  // u_t per sample

  // per-sample bookkeeping
  std::vector<double> x, y, t;       // y empty for 1D
  std::vector<double> target_field;  // raw values of the target field
  std::vector<int> block_index;      // spatial block of each sample

  // per-block data
  int n_blocks = 0;
  std::vector<std::array<double, 2>> block_coords;

  std::optional<GridMeta> grid;
  std::string target_field_name = "u";
  bool normalized = false;

  std::size_t sample_count() const { return static_cast<std::size_t>(design.rows()); }
  std::size_t term_count() const { return terms.size(); }
  int term_index(const std::string& name) const;  // -1 if absent
  void validate() const;
};

/// Cartesian product of polynomial specs and derivative factors, duplicates
/// removed, ordered constant-first then by (poly degree, derivative order,
/// name). The target is the first t-derivative of `target_field`.
TermLibrary build_library(const SampleSet& set, const std::string& target_field,
                          const std::vector<PolySpec>& polys,
                          const std::vector<DerivTerm>& derivs,
                          const DiffConfig& cfg);

/// Divides each design column by its RMS; returns the scale factors. Zero
/// columns keep scale 1.
std::vector<double> normalize_columns(TermLibrary& lib);

/// Re-blocks samples by spatial coordinates rounded to the quantization step
/// (0 = exact coordinates).
void group_blocks(TermLibrary& lib, double quantization);

/// "u_x*u" and "u*u_x" map to the same canonical string.
std::string canonical_term_name(const std::string& name);

}  // namespace pdekd

#endif
