#ifndef PDEKD_SAMPLE_SET_HPP
#define PDEKD_SAMPLE_SET_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdekd/errors.hpp"

namespace pdekd {

/// Regular-lattice metadata. ny == 0 marks a 1D (x,t) problem.
struct GridMeta {
  int nx = 0;
  int ny = 0;
  int nt = 0;
  double x0 = 0.0, dx = 1.0;
  double y0 = 0.0, dy = 1.0;
  double t0 = 0.0, dt = 1.0;

  bool is2d() const { return ny > 0; }
  std::size_t count() const {
    return static_cast<std::size_t>(nx) * (is2d() ? ny : 1) * nt;
  }
  /// Canonical sample index of a lattice node (x outer, t innermost).
  std::size_t index(int ix, int iy, int it) const {
    return (static_cast<std::size_t>(ix) * (is2d() ? ny : 1) +
            (is2d() ? iy : 0)) * nt + it;
  }
};

/// The universal data carrier: coordinates plus any number of named fields.
/// Gridded sets carry GridMeta and store samples in canonical lattice order.
struct SampleSet {
  std::vector<double> x;
  std::vector<double> y;  // empty for 1D problems
  std::vector<double> t;
  std::vector<std::string> field_names;
  std::vector<std::vector<double>> field_values;
  std::optional<GridMeta> grid;

  std::size_t size() const { return t.size(); }
  bool has_y() const { return !y.empty(); }

  bool has_field(const std::string& name) const;
  const std::vector<double>& field(const std::string& name) const;
  std::vector<double>& add_field(const std::string& name);
  void set_field(const std::string& name, std::vector<double> values);

  /// Throws ValidationError on length mismatch, non-finite entries, or
  /// grid metadata that does not match the stored coordinates.
  void validate() const;
};

struct NoiseSpec {
  double level = 0.0;  // eta, relative to the per-field std over the set
  std::uint64_t seed = 0;
};

struct SplitSpec {
  double train_frac = 0.3;
  double dev_frac = 0.3;
  double test_frac = 0.4;
};

/// Adds eta * std(field) * N(0,1) noise to every field. Draws are keyed by
/// (seed, coordinates, field name), so the result does not depend on sample
/// ordering or prior subsampling.
SampleSet add_noise(const SampleSet& set, const NoiseSpec& spec);

/// Partitions the distinct time values, in ascending order, into
/// train / dev / test slices. Every sample lands in exactly one part.
std::array<SampleSet, 3> split_temporal(const SampleSet& set,
                                        const SplitSpec& spec);

/// Uniform selection of `count` samples without replacement. Clears grid
/// metadata on the result.
SampleSet subsample_irregular(const SampleSet& set, std::size_t count,
                              std::uint64_t seed);

enum class FileFormat { csv, grid_binary };

/// CSV header `x[,y],t,<field>...`; `#` lines are comments. Binary format
/// starts with the magic "PDEKD1". Grid metadata is inferred for CSV files
/// whose rows form a complete lattice in canonical order.
SampleSet load_samples(const std::string& path, FileFormat format);

/// Format chosen by extension: ".csv" writes CSV, anything else the binary
/// grid format. CSV uses 17 significant digits so round-trips are exact.
void save_samples(const SampleSet& set, const std::string& path);
void save_samples(const SampleSet& set, const std::string& path,
                  FileFormat format);

}  // namespace pdekd

#endif
