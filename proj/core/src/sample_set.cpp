#include "pdekd/sample_set.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

namespace pdekd {

namespace {

double mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-53;
}

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Deterministic standard-normal draw keyed by the sample identity.
double keyed_normal(std::uint64_t seed, double x, double y, double t,
                    std::uint64_t field_hash) {
  std::uint64_t h = seed;
  h = hash_combine(h, std::bit_cast<std::uint64_t>(x));
  h = hash_combine(h, std::bit_cast<std::uint64_t>(y));
  h = hash_combine(h, std::bit_cast<std::uint64_t>(t));
  h = hash_combine(h, field_hash);
  double u1 = mix64(h);
  double u2 = mix64(h ^ 0xdeadbeefcafef00dULL);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.141592653589793238 * u2);
}

double field_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double a : v) ss += (a - mean) * (a - mean);
  return std::sqrt(ss / v.size());
}

struct CoordKey {
  double x, y, t;
  bool operator==(const CoordKey& o) const {
    return x == o.x && y == o.y && t == o.t;
  }
};

struct CoordKeyHash {
  std::size_t operator()(const CoordKey& k) const {
    std::uint64_t h = std::bit_cast<std::uint64_t>(k.x);
    h = hash_combine(h, std::bit_cast<std::uint64_t>(k.y));
    h = hash_combine(h, std::bit_cast<std::uint64_t>(k.t));
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

bool SampleSet::has_field(const std::string& name) const {
  return std::find(field_names.begin(), field_names.end(), name) !=
         field_names.end();
}

const std::vector<double>& SampleSet::field(const std::string& name) const {
  for (std::size_t i = 0; i < field_names.size(); ++i)
    if (field_names[i] == name) return field_values[i];
  throw ArgumentError("unknown field '" + name + "'");
}

std::vector<double>& SampleSet::add_field(const std::string& name) {
  for (std::size_t i = 0; i < field_names.size(); ++i)
    if (field_names[i] == name) return field_values[i];
  field_names.push_back(name);
  field_values.emplace_back(size(), 0.0);
  return field_values.back();
}

void SampleSet::set_field(const std::string& name,
                          std::vector<double> values) {
  if (values.size() != size())
    throw ArgumentError("field '" + name + "' length mismatch");
  add_field(name) = std::move(values);
}

void SampleSet::validate() const {
  const std::size_t n = size();
  if (n == 0) throw ValidationError("sample set is empty");
  if (x.size() != n || (has_y() && y.size() != n))
    throw ValidationError("coordinate array length mismatch");
  if (field_names.size() != field_values.size())
    throw ValidationError("field name/value count mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(t[i]) ||
        (has_y() && !std::isfinite(y[i])))
      throw ValidationError("non-finite coordinate at sample " +
                            std::to_string(i));
  }
  for (std::size_t f = 0; f < field_values.size(); ++f) {
    if (field_values[f].size() != n)
      throw ValidationError("field '" + field_names[f] + "' length mismatch");
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(field_values[f][i]))
        throw ValidationError("non-finite value in field '" + field_names[f] +
                              "' at sample " + std::to_string(i));
  }
  if (grid) {
    const GridMeta& g = *grid;
    if (g.is2d() != has_y())
      throw ValidationError("grid dimensionality does not match coordinates");
    if (g.count() != n)
      throw ValidationError("grid metadata count does not match sample count");
    auto close = [](double a, double b) {
      return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
    };
    const int ny = g.is2d() ? g.ny : 1;
    for (int ix = 0; ix < g.nx; ++ix)
      for (int iy = 0; iy < ny; ++iy)
        for (int it = 0; it < g.nt; ++it) {
          std::size_t idx = g.index(ix, iy, it);
          if (!close(x[idx], g.x0 + ix * g.dx) ||
              (g.is2d() && !close(y[idx], g.y0 + iy * g.dy)) ||
              !close(t[idx], g.t0 + it * g.dt))
            throw ValidationError("coordinates deviate from the lattice");
        }
  }
}

SampleSet add_noise(const SampleSet& set, const NoiseSpec& spec) {
  if (spec.level < 0.0) throw ArgumentError("noise level must be >= 0");
  SampleSet out = set;
  if (spec.level == 0.0) return out;
  for (std::size_t f = 0; f < out.field_values.size(); ++f) {
    const double scale = spec.level * field_std(set.field_values[f]);
    if (scale == 0.0) continue;
    const std::uint64_t fh = fnv1a(out.field_names[f]);
    auto& v = out.field_values[f];
    for (std::size_t i = 0; i < v.size(); ++i) {
      double yy = set.has_y() ? set.y[i] : 0.0;
      v[i] += scale * keyed_normal(spec.seed, set.x[i], yy, set.t[i], fh);
    }
  }
  return out;
}

namespace {

SampleSet select_rows(const SampleSet& set, const std::vector<std::size_t>& idx) {
  SampleSet out;
  out.field_names = set.field_names;
  out.field_values.resize(set.field_values.size());
  out.x.reserve(idx.size());
  out.t.reserve(idx.size());
  if (set.has_y()) out.y.reserve(idx.size());
  for (auto& fv : out.field_values) fv.reserve(idx.size());
  for (std::size_t i : idx) {
    out.x.push_back(set.x[i]);
    if (set.has_y()) out.y.push_back(set.y[i]);
    out.t.push_back(set.t[i]);
    for (std::size_t f = 0; f < set.field_values.size(); ++f)
      out.field_values[f].push_back(set.field_values[f][i]);
  }
  return out;
}

}  // namespace

std::array<SampleSet, 3> split_temporal(const SampleSet& set,
                                        const SplitSpec& spec) {
  const double sum = spec.train_frac + spec.dev_frac + spec.test_frac;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ArgumentError("split fractions must sum to 1");
  if (spec.train_frac <= 0 || spec.dev_frac <= 0 || spec.test_frac <= 0)
    throw ArgumentError("split fractions must be positive");

  std::set<double> distinct(set.t.begin(), set.t.end());
  const std::size_t h = distinct.size();
  if (h < 3) throw ArgumentError("need at least 3 distinct time values");

  auto n_train = static_cast<std::size_t>(std::llround(spec.train_frac * h));
  auto n_dev = static_cast<std::size_t>(std::llround(spec.dev_frac * h));
  if (n_train == 0 || n_dev == 0 || n_train + n_dev >= h)
    throw ConfigError("split", "a split part would be empty");

  std::vector<double> times(distinct.begin(), distinct.end());
  const double dev_start = times[n_train];
  const double test_start = times[n_train + n_dev];

  std::vector<std::size_t> tr, dv, te;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.t[i] < dev_start)
      tr.push_back(i);
    else if (set.t[i] < test_start)
      dv.push_back(i);
    else
      te.push_back(i);
  }
  return {select_rows(set, tr), select_rows(set, dv), select_rows(set, te)};
}

SampleSet subsample_irregular(const SampleSet& set, std::size_t count,
                              std::uint64_t seed) {
  const std::size_t n = set.size();
  if (count > n) throw ArgumentError("subsample count exceeds sample count");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, n - 1);
    std::swap(idx[i], idx[d(rng)]);
  }
  idx.resize(count);
  SampleSet out = select_rows(set, idx);
  out.grid.reset();
  return out;
}

}  // namespace pdekd
