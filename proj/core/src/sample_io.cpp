#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "pdekd/sample_set.hpp"

namespace pdekd {

namespace {

constexpr char kMagic[6] = {'P', 'D', 'E', 'K', 'D', '1'};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
  }
  return out;
}

struct CoordHash {
  std::size_t operator()(const std::array<double, 3>& k) const {
    std::uint64_t h = std::bit_cast<std::uint64_t>(k[0]);
    h = h * 0x9e3779b97f4a7c15ULL ^ std::bit_cast<std::uint64_t>(k[1]);
    h = h * 0x9e3779b97f4a7c15ULL ^ std::bit_cast<std::uint64_t>(k[2]);
    return static_cast<std::size_t>(h);
  }
};

// Uniformly spaced sorted axis values -> (n, origin, spacing), or n = 0.
struct Axis {
  int n = 0;
  double origin = 0.0, spacing = 1.0;
};

Axis detect_axis(const std::vector<double>& sorted_unique) {
  Axis a;
  a.n = static_cast<int>(sorted_unique.size());
  a.origin = sorted_unique.front();
  if (a.n == 1) return a;
  a.spacing = (sorted_unique.back() - sorted_unique.front()) / (a.n - 1);
  if (a.spacing <= 0.0) return {};
  for (int i = 0; i < a.n; ++i) {
    double expect = a.origin + i * a.spacing;
    if (std::abs(sorted_unique[i] - expect) >
        1e-9 * std::max(1.0, std::abs(expect)))
      return {};
  }
  return a;
}

void try_infer_grid(SampleSet& set) {
  auto uniq = [](const std::vector<double>& v) {
    std::set<double> s(v.begin(), v.end());
    return std::vector<double>(s.begin(), s.end());
  };
  Axis ax = detect_axis(uniq(set.x));
  Axis at = detect_axis(uniq(set.t));
  Axis ay;
  if (set.has_y()) ay = detect_axis(uniq(set.y));
  if (ax.n == 0 || at.n == 0 || (set.has_y() && ay.n == 0)) return;

  GridMeta g;
  g.nx = ax.n;
  g.ny = set.has_y() ? ay.n : 0;
  g.nt = at.n;
  g.x0 = ax.origin;
  g.dx = ax.spacing;
  g.y0 = ay.origin;
  g.dy = ay.spacing;
  g.t0 = at.origin;
  g.dt = at.spacing;
  if (g.count() != set.size()) return;
  set.grid = g;
  try {
    set.validate();  // confirms canonical ordering
  } catch (const ValidationError&) {
    set.grid.reset();
  }
}

SampleSet load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty())
    throw FormatError(path + ": empty file (no header)");
  std::size_t col = 0;
  if (header.size() < 3 || header[col] != "x")
    throw FormatError(path + ":" + std::to_string(lineno) +
                      ": header must start with 'x'");
  ++col;
  bool has_y = col < header.size() && header[col] == "y";
  if (has_y) ++col;
  if (col >= header.size() || header[col] != "t")
    throw FormatError(path + ":" + std::to_string(lineno) +
                      ": header must contain 't' after the spatial columns");
  ++col;
  if (col >= header.size())
    throw FormatError(path + ":" + std::to_string(lineno) +
                      ": header names no field columns");

  SampleSet set;
  for (std::size_t f = col; f < header.size(); ++f) {
    set.field_names.push_back(header[f]);
    set.field_values.emplace_back();
  }

  std::unordered_set<std::array<double, 3>, CoordHash> seen;
  const std::size_t ncols = header.size();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (cells.size() != ncols)
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(ncols) + " columns, got " +
                        std::to_string(cells.size()));
    std::vector<double> vals(ncols);
    for (std::size_t c = 0; c < ncols; ++c) {
      char* end = nullptr;
      vals[c] = std::strtod(cells[c].c_str(), &end);
      if (end == cells[c].c_str() || *end != '\0')
        throw FormatError(path + ":" + std::to_string(lineno) +
                          ": cannot parse '" + cells[c] + "'");
      if (!std::isfinite(vals[c]))
        throw ValidationError(path + ":" + std::to_string(lineno) +
                              ": non-finite value");
    }
    std::size_t c = 0;
    double xv = vals[c++];
    double yv = has_y ? vals[c++] : 0.0;
    double tv = vals[c++];
    if (!seen.insert({xv, yv, tv}).second)
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": duplicate coordinate tuple");
    set.x.push_back(xv);
    if (has_y) set.y.push_back(yv);
    set.t.push_back(tv);
    for (std::size_t f = 0; f < set.field_values.size(); ++f)
      set.field_values[f].push_back(vals[c + f]);
  }
  if (set.size() == 0) throw FormatError(path + ": no data rows");
  try_infer_grid(set);
  set.validate();
  return set;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError(path + ": truncated binary file");
  return v;
}

void save_binary(const SampleSet& set, const std::string& path) {
  if (!set.grid)
    throw ArgumentError("grid-binary format requires grid metadata");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write '" + path + "'");
  os.write(kMagic, sizeof(kMagic));
  const GridMeta& g = *set.grid;
  write_pod<std::int32_t>(os, g.is2d() ? 2 : 1);
  write_pod<std::int32_t>(os, g.nx);
  if (g.is2d()) write_pod<std::int32_t>(os, g.ny);
  write_pod<std::int32_t>(os, g.nt);
  write_pod(os, g.x0);
  write_pod(os, g.dx);
  if (g.is2d()) {
    write_pod(os, g.y0);
    write_pod(os, g.dy);
  }
  write_pod(os, g.t0);
  write_pod(os, g.dt);
  write_pod<std::int32_t>(os, static_cast<std::int32_t>(set.field_names.size()));
  for (const auto& name : set.field_names) {
    write_pod<std::int32_t>(os, static_cast<std::int32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  for (const auto& fv : set.field_values)
    os.write(reinterpret_cast<const char*>(fv.data()),
             static_cast<std::streamsize>(fv.size() * sizeof(double)));
  if (!os) throw Error("write failure on '" + path + "'");
}

SampleSet load_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  char magic[6];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path + ": bad magic, not a PDEKD1 file");
  GridMeta g;
  auto dim = read_pod<std::int32_t>(is, path);
  if (dim != 1 && dim != 2)
    throw FormatError(path + ": bad dimensionality " + std::to_string(dim));
  g.nx = read_pod<std::int32_t>(is, path);
  g.ny = dim == 2 ? read_pod<std::int32_t>(is, path) : 0;
  g.nt = read_pod<std::int32_t>(is, path);
  g.x0 = read_pod<double>(is, path);
  g.dx = read_pod<double>(is, path);
  if (dim == 2) {
    g.y0 = read_pod<double>(is, path);
    g.dy = read_pod<double>(is, path);
  }
  g.t0 = read_pod<double>(is, path);
  g.dt = read_pod<double>(is, path);
  auto nfields = read_pod<std::int32_t>(is, path);
  if (nfields <= 0 || nfields > 1000)
    throw FormatError(path + ": implausible field count");

  SampleSet set;
  for (std::int32_t f = 0; f < nfields; ++f) {
    auto len = read_pod<std::int32_t>(is, path);
    if (len <= 0 || len > 4096) throw FormatError(path + ": bad field name");
    std::string name(static_cast<std::size_t>(len), '\0');
    is.read(name.data(), len);
    if (!is) throw FormatError(path + ": truncated binary file");
    set.field_names.push_back(name);
  }
  const std::size_t n = g.count();
  const int ny = g.is2d() ? g.ny : 1;
  set.x.reserve(n);
  set.t.reserve(n);
  if (g.is2d()) set.y.reserve(n);
  for (int ix = 0; ix < g.nx; ++ix)
    for (int iy = 0; iy < ny; ++iy)
      for (int it = 0; it < g.nt; ++it) {
        set.x.push_back(g.x0 + ix * g.dx);
        if (g.is2d()) set.y.push_back(g.y0 + iy * g.dy);
        set.t.push_back(g.t0 + it * g.dt);
      }
  for (std::int32_t f = 0; f < nfields; ++f) {
    std::vector<double> fv(n);
    is.read(reinterpret_cast<char*>(fv.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw FormatError(path + ": truncated field data");
    set.field_values.push_back(std::move(fv));
  }
  set.grid = g;
  set.validate();
  return set;
}

void save_csv(const SampleSet& set, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write '" + path + "'");
  os << "x,";
  if (set.has_y()) os << "y,";
  os << "t";
  for (const auto& name : set.field_names) os << "," << name;
  os << "\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  };
  for (std::size_t i = 0; i < set.size(); ++i) {
    put(set.x[i]);
    os << ",";
    if (set.has_y()) {
      put(set.y[i]);
      os << ",";
    }
    put(set.t[i]);
    for (const auto& fv : set.field_values) {
      os << ",";
      put(fv[i]);
    }
    os << "\n";
  }
  if (!os) throw Error("write failure on '" + path + "'");
}

}  // namespace

SampleSet load_samples(const std::string& path, FileFormat format) {
  return format == FileFormat::csv ? load_csv(path) : load_binary(path);
}

void save_samples(const SampleSet& set, const std::string& path,
                  FileFormat format) {
  set.validate();
  if (format == FileFormat::csv)
    save_csv(set, path);
  else
    save_binary(set, path);
}

void save_samples(const SampleSet& set, const std::string& path) {
  bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  save_samples(set, path, csv ? FileFormat::csv : FileFormat::grid_binary);
}

}  // namespace pdekd
