#include "pdekd/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pdekd {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_text(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw FormatError("config line " + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    // tolerate quoted values
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key.empty())
      throw FormatError("config line " + std::to_string(lineno) +
                        ": empty key");
    if (!section.empty()) key = section + "." + key;
    cfg.kv_[key] = value;
  }
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

bool ConfigFile::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string ConfigFile::get(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError(key, "missing required key");
  return it->second;
}

std::string ConfigFile::get(const std::string& key,
                            const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double ConfigFile::get_real(const std::string& key) const {
  const std::string v = get(key);
  char* end = nullptr;
  double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError(key, "not a number: '" + v + "'");
  return d;
}

double ConfigFile::get_real(const std::string& key, double fallback) const {
  return has(key) ? get_real(key) : fallback;
}

long ConfigFile::get_int(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  char* end = nullptr;
  long n = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError(key, "not an integer: '" + v + "'");
  return n;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "not a boolean: '" + v + "'");
}

std::vector<std::string> ConfigFile::get_list(const std::string& key) const {
  std::vector<std::string> out;
  if (!has(key)) return out;
  std::istringstream in(get(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void ConfigFile::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

void ConfigFile::check_known(const std::set<std::string>& allowed) const {
  for (const auto& [k, v] : kv_)
    if (!allowed.count(k)) throw ConfigError(k, "unknown key");
}

std::string ConfigFile::to_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
  return os.str();
}

PolySpec parse_poly(const std::string& text) {
  PolySpec p;
  if (text == "1" || text.empty()) return p;
  std::istringstream in(text);
  std::string factor;
  while (std::getline(in, factor, '*')) {
    std::size_t caret = factor.find('^');
    std::string field = caret == std::string::npos ? factor
                                                   : factor.substr(0, caret);
    int exp = 1;
    if (caret != std::string::npos) exp = std::atoi(factor.c_str() + caret + 1);
    if (field.empty() || exp < 1)
      throw FormatError("bad polynomial factor '" + factor + "'");
    p.factors.emplace_back(field, exp);
  }
  return p;
}

DerivTerm parse_deriv(const std::string& text) {
  if (text == "1" || text.empty()) return DerivTerm::identity();
  if (text.rfind("lap_", 0) == 0) return DerivTerm::laplacian(text.substr(4));
  std::size_t us = text.rfind('_');
  if (us == std::string::npos || us + 1 >= text.size())
    throw FormatError("bad derivative name '" + text + "'");
  const std::string field = text.substr(0, us);
  const std::string suffix = text.substr(us + 1);
  const char a = suffix[0];
  for (char c : suffix)
    if (c != a) throw FormatError("mixed axes in derivative '" + text + "'");
  Axis axis;
  if (a == 'x') axis = Axis::x;
  else if (a == 'y') axis = Axis::y;
  else if (a == 't') axis = Axis::t;
  else throw FormatError("bad axis in derivative '" + text + "'");
  return DerivTerm::single(field, axis, static_cast<int>(suffix.size()));
}

namespace {

const std::set<std::string> kDiscoverKeys = {
    "gamma",      "radius",     "ridge",        "beta",
    "L",          "priors",     "aic_variant",  "method",
    "auto_stop",  "seed",       "target",       "quantization",
    "polys",      "derivs",     "solver_tol",   "solver_max_iter",
    "dense_threshold",          "threshold",    "coarsen_factor"};

}  // namespace

DiscoverOptions DiscoverOptions::from_config(const ConfigFile& cfg) {
  cfg.check_known(kDiscoverKeys);
  DiscoverOptions o;
  o.kernel.gamma = cfg.get_real("gamma");
  o.kernel.radius = cfg.get_real("radius");
  o.kernel.ridge = cfg.get_real("ridge", o.kernel.ridge);
  o.kernel.beta = cfg.get_real("beta", o.kernel.beta);
  o.kernel.solver_tol = cfg.get_real("solver_tol", o.kernel.solver_tol);
  o.kernel.solver_max_iter = static_cast<int>(
      cfg.get_int("solver_max_iter", o.kernel.solver_max_iter));
  o.kernel.dense_threshold = static_cast<int>(
      cfg.get_int("dense_threshold", o.kernel.dense_threshold));
  o.selection.keep = static_cast<int>(cfg.get_int("L", 1));
  o.selection.priors = cfg.get_list("priors");
  const std::string variant = cfg.get("aic_variant", "standard");
  if (variant == "standard")
    o.selection.aic_variant = AicVariant::standard;
  else if (variant == "paper-literal" || variant == "paper_literal")
    o.selection.aic_variant = AicVariant::paper_literal;
  else
    throw ConfigError("aic_variant", "must be standard or paper-literal");
  o.selection.auto_stop = cfg.get_bool("auto_stop", false);
  o.method = cfg.get("method", "kernel");
  if (o.method != "kernel" && o.method != "pointwise" &&
      o.method != "average" && o.method != "coarsen")
    throw ConfigError("method",
                      "must be kernel, pointwise, average, or coarsen");
  o.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  o.target = cfg.get("target", "u");
  o.quantization = cfg.get_real("quantization", 0.0);
  for (const auto& s : cfg.get_list("polys")) o.polys.push_back(parse_poly(s));
  for (const auto& s : cfg.get_list("derivs"))
    o.derivs.push_back(parse_deriv(s));
  o.baseline.ridge = o.kernel.ridge;
  o.baseline.radius = o.kernel.radius;
  o.baseline.threshold = cfg.get_real("threshold", 0.0);
  o.baseline.coarsen_factor =
      static_cast<int>(cfg.get_int("coarsen_factor", 1));
  return o;
}

ConfigFile DiscoverOptions::to_config() const {
  ConfigFile cfg;
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  cfg.set("gamma", num(kernel.gamma));
  cfg.set("radius", num(kernel.radius));
  cfg.set("ridge", num(kernel.ridge));
  cfg.set("beta", num(kernel.beta));
  cfg.set("L", std::to_string(selection.keep));
  if (!selection.priors.empty()) {
    std::string s;
    for (std::size_t i = 0; i < selection.priors.size(); ++i)
      s += (i ? "," : "") + selection.priors[i];
    cfg.set("priors", s);
  }
  cfg.set("aic_variant", selection.aic_variant == AicVariant::standard
                             ? "standard"
                             : "paper-literal");
  cfg.set("auto_stop", selection.auto_stop ? "true" : "false");
  cfg.set("method", method);
  cfg.set("seed", std::to_string(seed));
  cfg.set("target", target);
  cfg.set("quantization", num(quantization));
  std::string ps, ds;
  for (std::size_t i = 0; i < polys.size(); ++i)
    ps += (i ? "," : "") + polys[i].name();
  for (std::size_t i = 0; i < derivs.size(); ++i)
    ds += (i ? "," : "") + derivs[i].name;
  if (!ps.empty()) cfg.set("polys", ps);
  if (!ds.empty()) cfg.set("derivs", ds);
  return cfg;
}

}  // namespace pdekd
