#include "pdekd/term_library.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace pdekd {

namespace {

std::string axis_letter(Axis a) {
  switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::t: return "t";
  }
  return "?";
}

std::string deriv_field_name(const DerivSpec& d) {
  std::string s = d.field + "_";
  for (int i = 0; i < d.order; ++i) s += axis_letter(d.axis);
  return s;
}

}  // namespace

std::string PolySpec::name() const {
  if (factors.empty()) return "1";
  auto sorted = factors;
  std::sort(sorted.begin(), sorted.end());
  std::string out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i) out += "*";
    out += sorted[i].first;
    if (sorted[i].second > 1) out += "^" + std::to_string(sorted[i].second);
  }
  return out;
}

int PolySpec::degree() const {
  int d = 0;
  for (const auto& [f, e] : factors) d += e;
  return d;
}

DerivTerm DerivTerm::identity() { return {"1", {}}; }

DerivTerm DerivTerm::single(const std::string& field, Axis axis, int order) {
  DerivSpec d{field, axis, order};
  return {deriv_field_name(d), {d}};
}

DerivTerm DerivTerm::laplacian(const std::string& field) {
  return {"lap_" + field,
          {DerivSpec{field, Axis::x, 2}, DerivSpec{field, Axis::y, 2}}};
}

int DerivTerm::order() const {
  int o = 0;
  for (const auto& d : sum) o = std::max(o, d.order);
  return o;
}

int TermLibrary::term_index(const std::string& name) const {
  for (std::size_t i = 0; i < terms.size(); ++i)
    if (terms[i].name == name) return static_cast<int>(i);
  return -1;
}

void TermLibrary::validate() const {
  const auto n = sample_count();
  if (n == 0) throw ValidationError("empty term library");
  if (static_cast<std::size_t>(design.cols()) != terms.size())
    throw ValidationError("design column count mismatch");
  if (static_cast<std::size_t>(target.size()) != n ||
      block_index.size() != n)
    throw ValidationError("per-sample array length mismatch");
  if (!design.allFinite() || !target.allFinite())
    throw ValidationError("non-finite entry in design or target");
  std::set<std::string> names;
  for (const auto& t : terms)
    if (!names.insert(t.name).second)
      throw ValidationError("duplicate term name '" + t.name + "'");
  for (int b : block_index)
    if (b < 0 || b >= n_blocks)
      throw ValidationError("block index out of range");
}

std::string canonical_term_name(const std::string& name) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : name) {
    if (c == '*') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "*";
    out += parts[i];
  }
  return out;
}

void group_blocks(TermLibrary& lib, double quantization) {
  if (quantization < 0) throw ArgumentError("quantization must be >= 0");
  auto q = [&](double v) {
    return quantization > 0 ? std::round(v / quantization) * quantization : v;
  };
  std::map<std::pair<double, double>, int> ids;
  const auto n = lib.x.size();
  std::vector<std::pair<double, double>> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = {q(lib.x[i]), lib.y.empty() ? 0.0 : q(lib.y[i])};
    ids.emplace(keys[i], 0);
  }
  int next = 0;
  for (auto& [k, v] : ids) v = next++;
  lib.n_blocks = next;
  lib.block_coords.resize(next);
  for (const auto& [k, v] : ids) lib.block_coords[v] = {k.first, k.second};
  lib.block_index.resize(n);
  for (std::size_t i = 0; i < n; ++i) lib.block_index[i] = ids[keys[i]];
}

TermLibrary build_library(const SampleSet& set, const std::string& target_field,
                          const std::vector<PolySpec>& polys,
                          const std::vector<DerivTerm>& derivs,
                          const DiffConfig& cfg) {
  if (polys.empty() || derivs.empty())
    throw ArgumentError("empty polynomial or derivative candidate list");
  set.validate();

  const std::size_t n = set.size();

  // derivative value cache, keyed by the conventional field name
  std::unordered_map<std::string, std::vector<double>> dcache;
  auto deriv_values = [&](const DerivSpec& d) -> const std::vector<double>& {
    std::string key = deriv_field_name(d);
    auto it = dcache.find(key);
    if (it != dcache.end()) return it->second;
    std::vector<double> vals;
    switch (cfg.mode) {
      case DiffMode::precomputed:
        if (!set.has_field(key))
          throw ArgumentError("precomputed derivative field '" + key +
                              "' missing");
        vals = set.field(key);
        break;
      case DiffMode::grid_central:
        vals = differentiate_grid(set, d, cfg);
        break;
      case DiffMode::local_polynomial:
        vals = differentiate_scattered(set, d, cfg);
        break;
    }
    return dcache.emplace(key, std::move(vals)).first->second;
  };

  struct Pending {
    TermDescriptor desc;
    std::vector<double> values;
  };
  std::vector<Pending> pending;
  std::set<std::string> seen;

  for (const auto& poly : polys) {
    // polynomial factor values
    std::vector<double> pv(n, 1.0);
    for (const auto& [fname, exp] : poly.factors) {
      const auto& fv = set.field(fname);
      for (std::size_t i = 0; i < n; ++i)
        for (int e = 0; e < exp; ++e) pv[i] *= fv[i];
    }
    for (const auto& dt : derivs) {
      TermDescriptor desc;
      desc.poly = poly;
      desc.deriv = dt;
      const std::string pn = poly.name();
      if (pn == "1" && dt.name == "1")
        desc.name = "1";
      else if (pn == "1")
        desc.name = dt.name;
      else if (dt.name == "1")
        desc.name = pn;
      else
        desc.name = pn + "*" + dt.name;
      if (!seen.insert(desc.name).second) continue;

      std::vector<double> tv = pv;
      if (!dt.sum.empty()) {
        std::vector<double> dv(n, 0.0);
        for (const auto& ds : dt.sum) {
          const auto& part = deriv_values(ds);
          for (std::size_t i = 0; i < n; ++i) dv[i] += part[i];
        }
        for (std::size_t i = 0; i < n; ++i) tv[i] *= dv[i];
      }
      pending.push_back({std::move(desc), std::move(tv)});
    }
  }

  std::stable_sort(pending.begin(), pending.end(),
                   [](const Pending& a, const Pending& b) {
                     bool ca = a.desc.name == "1", cb = b.desc.name == "1";
                     if (ca != cb) return ca;
                     auto ka = std::make_tuple(a.desc.poly_degree(),
                                               a.desc.deriv_order(), a.desc.name);
                     auto kb = std::make_tuple(b.desc.poly_degree(),
                                               b.desc.deriv_order(), b.desc.name);
                     return ka < kb;
                   });

  TermLibrary lib;
  lib.grid = set.grid;
  lib.target_field_name = target_field;
  lib.x = set.x;
  lib.y = set.y;
  lib.t = set.t;
  lib.target_field = set.field(target_field);

  const std::size_t p = pending.size();
  lib.design.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t c = 0; c < p; ++c) {
    lib.terms.push_back(pending[c].desc);
    for (std::size_t i = 0; i < n; ++i)
      lib.design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          pending[c].values[i];
  }

  DerivSpec tgt{target_field, Axis::t, 1};
  std::vector<double> tv;
  if (cfg.mode == DiffMode::precomputed) {
    std::string key = deriv_field_name(tgt);
    if (!set.has_field(key))
      throw ArgumentError("precomputed target field '" + key + "' missing");
    tv = set.field(key);
  } else if (cfg.mode == DiffMode::grid_central) {
    tv = differentiate_grid(set, tgt, cfg);
  } else {
    tv = differentiate_scattered(set, tgt, cfg);
  }
  lib.target = Eigen::Map<Eigen::VectorXd>(tv.data(),
                                           static_cast<Eigen::Index>(n));

  group_blocks(lib, 0.0);
  lib.validate();
  return lib;
}

std::vector<double> normalize_columns(TermLibrary& lib) {
  const auto p = lib.term_count();
  std::vector<double> scales(p, 1.0);
  const double n = static_cast<double>(lib.sample_count());
  for (std::size_t c = 0; c < p; ++c) {
    double rms = std::sqrt(lib.design.col(static_cast<Eigen::Index>(c))
                               .squaredNorm() / n);
    if (rms > 0) {
      scales[c] = rms;
      lib.design.col(static_cast<Eigen::Index>(c)) /= rms;
    }
  }
  lib.normalized = true;
  return scales;
}

}  // namespace pdekd
