#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pdekd/generators.hpp"

namespace pdekd {

namespace {

// One-dimensional eigenpairs of the exponential covariance exp(-|x-x'|/eta)
// on [-a, a]: even modes solve c = w tan(w a), odd modes w = -c tan(w a),
// with c = 1/eta. Each bracket between consecutive tangent poles holds
// exactly one root; bisection to 1e-12.
struct Mode1D {
  double lambda = 0.0;
  double w = 0.0;
  bool even = true;
  double norm = 1.0;  // eigenfunction normalization constant
};

double bisect(double lo, double hi, double c, double a, bool even) {
  auto g = [&](double w) {
    return even ? c - w * std::tan(w * a) : w + c * std::tan(w * a);
  };
  double flo = g(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = g(mid);
    if (!std::isfinite(fm)) {
      hi = mid;
      continue;
    }
    if ((flo > 0) == (fm > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<Mode1D> modes_1d(double a, double eta, int count) {
  const double c = 1.0 / eta;
  std::vector<Mode1D> out;
  const double eps = 1e-9;
  for (int n = 0; static_cast<int>(out.size()) < count; ++n) {
    // even root in (n pi / a, (n + 1/2) pi / a)
    {
      Mode1D m;
      m.even = true;
      m.w = bisect(n * M_PI / a + eps, (n + 0.5) * M_PI / a - eps, c, a, true);
      m.lambda = 2.0 * c / (m.w * m.w + c * c);
      m.norm = 1.0 / std::sqrt(a + std::sin(2 * m.w * a) / (2 * m.w));
      out.push_back(m);
    }
    if (static_cast<int>(out.size()) >= count) break;
    // odd root in ((n + 1/2) pi / a, (n + 1) pi / a)
    {
      Mode1D m;
      m.even = false;
      m.w = bisect((n + 0.5) * M_PI / a + eps, (n + 1) * M_PI / a - eps, c, a,
                   false);
      m.lambda = 2.0 * c / (m.w * m.w + c * c);
      m.norm = 1.0 / std::sqrt(a - std::sin(2 * m.w * a) / (2 * m.w));
      out.push_back(m);
    }
  }
  if (out.size() > static_cast<std::size_t>(count)) out.resize(count);
  for (const auto& m : out)
    if (!std::isfinite(m.lambda) || m.lambda <= 0)
      throw NumericError("KLE eigenvalue computation failed");
  return out;
}

double eigenfunction(const Mode1D& m, double x_centered) {
  return m.norm * (m.even ? std::cos(m.w * x_centered)
                          : std::sin(m.w * x_centered));
}

}  // namespace

ConductivityField gen_kle_field(int nx, int ny, double domain_length,
                                double correlation_length, int n_terms,
                                double mean, double variance,
                                std::uint64_t seed) {
  if (n_terms < 1) throw ArgumentError("gen_kle_field needs n_terms >= 1");
  if (correlation_length <= 0)
    throw ArgumentError("gen_kle_field needs correlation_length > 0");

  ConductivityField f;
  f.nx = nx;
  f.ny = ny;
  f.domain_length = domain_length;
  f.correlation_length = correlation_length;
  f.n_terms = n_terms;
  f.mean = mean;
  f.variance = variance;
  f.seed = seed;
  f.logk = Eigen::VectorXd::Constant(nx * ny, mean);
  if (variance == 0.0) return f;

  const double a = domain_length / 2.0;
  // enough 1D modes that every top product eigenvalue is represented
  const int m1 = std::max(4, static_cast<int>(std::ceil(std::sqrt(
                                  static_cast<double>(n_terms)))) + 4);
  auto mx = modes_1d(a, correlation_length, m1);

  struct Pair {
    double lambda;
    int i, j;
  };
  std::vector<Pair> pairs;
  for (int i = 0; i < m1; ++i)
    for (int j = 0; j < m1; ++j)
      pairs.push_back({mx[i].lambda * mx[j].lambda, i, j});
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& l, const Pair& r) { return l.lambda > r.lambda; });
  pairs.resize(n_terms);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> xi(n_terms);
  for (double& v : xi) v = normal(rng);

  // cell-center coordinates mapped onto the physical domain
  const double hx = domain_length / nx;
  const double hy = domain_length / ny;
  const double sd = std::sqrt(variance);
  for (int ix = 0; ix < nx; ++ix) {
    const double xc = (ix + 0.5) * hx - a;
    for (int iy = 0; iy < ny; ++iy) {
      const double yc = (iy + 0.5) * hy - a;
      double acc = 0.0;
      for (int k = 0; k < n_terms; ++k)
        acc += std::sqrt(pairs[k].lambda) * xi[k] *
               eigenfunction(mx[pairs[k].i], xc) *
               eigenfunction(mx[pairs[k].j], yc);
      f.logk(ix * ny + iy) = mean + sd * acc;
    }
  }
  return f;
}

}  // namespace pdekd
