#ifndef PDEKD_BUNDLE_HPP
#define PDEKD_BUNDLE_HPP

#include <string>
#include <vector>

#include "pdekd/config.hpp"
#include "pdekd/generators.hpp"

namespace pdekd {

/// One discoverable equation inside a bundle (Burgers has two: u_t and v_t).
struct BundleTarget {
  DiscoverOptions options;  // dataset-tuned defaults
  GroundTruth truth;
};

/// A benchmark dataset ready for discovery: noisy subsampled splits with
/// precomputed derivative columns, plus per-target defaults and ground truth.
struct DatasetBundle {
  std::string name;
  double noise = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  SampleSet train, dev, test;
  std::vector<BundleTarget> targets;

  const BundleTarget& target(const std::string& field) const;
};

/// Known names: burgers, kdv, chafee, hnc1..hnc5 (the five seepage cases
/// differ only in the conductivity-field seed). Composes generation, noise,
/// grid differentiation, irregular subsampling, and the 30/30/40 temporal
/// split; all randomness derives from `seed` through fixed sub-streams.
DatasetBundle gen_noisy_benchmark(const std::string& name, double noise,
                                  std::size_t samples, std::uint64_t seed);

/// Writes train/dev/test.csv, per-target truth JSON + coefficient CSV,
/// per-target discover config, and a config.txt parameter record.
void save_bundle(const DatasetBundle& bundle, const std::string& dir);
DatasetBundle load_bundle(const std::string& dir);

/// Builds the candidate library for one split using the bundle's
/// precomputed derivative columns and block quantization.
TermLibrary bundle_library(const SampleSet& split,
                           const DiscoverOptions& options);

/// Truth serialization: constants live in the JSON, varying coefficient
/// fields in a sibling CSV referenced by relative path.
void save_truth_json(const GroundTruth& truth, const std::string& json_path);
GroundTruth load_truth_json(const std::string& json_path);

}  // namespace pdekd

#endif
