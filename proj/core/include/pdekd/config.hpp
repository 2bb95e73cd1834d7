#ifndef PDEKD_CONFIG_HPP
#define PDEKD_CONFIG_HPP

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pdekd/baselines.hpp"
#include "pdekd/selection.hpp"

namespace pdekd {

/// Flat key = value text with optional [section] headers and '#' comments.
/// Keys inside a section are addressed as "section.key". Unknown keys are
/// hard errors at validation time, so typos cannot silently change a run.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_text(const std::string& text);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;  // ConfigError when missing
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_real(const std::string& key) const;
  double get_real(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma

  void set(const std::string& key, const std::string& value);
  /// Throws ConfigError on any stored key outside `allowed`.
  void check_known(const std::set<std::string>& allowed) const;
  const std::map<std::string, std::string>& entries() const { return kv_; }
  std::string to_text() const;

 private:
  std::map<std::string, std::string> kv_;
};

/// "u^2*v" -> PolySpec; "1" is the empty product.
PolySpec parse_poly(const std::string& text);
/// "1", "u_xx", "lap_u" -> DerivTerm.
DerivTerm parse_deriv(const std::string& text);

/// Everything cmd_discover needs, loadable from a bundle's discover config.
struct DiscoverOptions {
  std::string target = "u";
  std::vector<PolySpec> polys;
  std::vector<DerivTerm> derivs;
  double quantization = 0.0;
  KernelConfig kernel;
  SelectionConfig selection;
  BaselineConfig baseline;
  std::string method = "kernel";  // kernel | pointwise | average | coarsen
  std::uint64_t seed = 0;

  static DiscoverOptions from_config(const ConfigFile& cfg);
  ConfigFile to_config() const;
};

}  // namespace pdekd

#endif
