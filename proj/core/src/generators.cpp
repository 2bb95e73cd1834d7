#include "pdekd/generators.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace pdekd {

double GroundTruth::value_at(std::size_t term, double x, double y) const {
  if (term >= coeffs.size()) throw ArgumentError("truth term out of range");
  const Eigen::VectorXd& f = coeffs[term];
  if (f.size() == 1) return f(0);
  if (coords.size() != static_cast<std::size_t>(f.size()))
    throw ValidationError("truth coefficient field does not match its grid");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double dx = coords[i][0] - x;
    const double dy = coords[i][1] - y;
    const double d = dx * dx + dy * dy;
    if (d < best_d) {
      best_d = d;
      best = i;
      if (d < 1e-18) break;
    }
  }
  return f(static_cast<Eigen::Index>(best));
}

namespace {

void check_stable(double max_now, double max_initial, const char* what) {
  if (!std::isfinite(max_now) || max_now > 10.0 * max_initial + 1e-9)
    throw SolverError(std::string(what) +
                          " time stepping went unstable; use a smaller dt",
                      max_now);
}

/// Lays out a 1D (x,t) sample set in canonical order ix*nt + it from
/// per-slice snapshots.
SampleSet pack_1d(const std::vector<Eigen::VectorXd>& slices, double x0,
                  double dx, double t0, double dt,
                  const std::string& field_name) {
  const int nt = static_cast<int>(slices.size());
  const int nx = static_cast<int>(slices[0].size());
  SampleSet s;
  GridMeta g;
  g.nx = nx;
  g.ny = 0;
  g.nt = nt;
  g.x0 = x0;
  g.dx = dx;
  g.t0 = t0;
  g.dt = dt;
  s.grid = g;
  const std::size_t n = g.count();
  s.x.resize(n);
  s.t.resize(n);
  auto& vals = s.add_field(field_name);
  vals.resize(n);
  for (int ix = 0; ix < nx; ++ix)
    for (int it = 0; it < nt; ++it) {
      const std::size_t idx = g.index(ix, 0, it);
      s.x[idx] = x0 + ix * dx;
      s.t[idx] = t0 + it * dt;
      vals[idx] = slices[it](ix);
    }
  return s;
}

SampleSet pack_2d(const std::vector<std::vector<Eigen::VectorXd>>& fields,
                  const std::vector<std::string>& names, int nx, int ny,
                  double x0, double dx, double y0, double dy, double t0,
                  double dt) {
  const int nt = static_cast<int>(fields[0].size());
  SampleSet s;
  GridMeta g;
  g.nx = nx;
  g.ny = ny;
  g.nt = nt;
  g.x0 = x0;
  g.dx = dx;
  g.y0 = y0;
  g.dy = dy;
  g.t0 = t0;
  g.dt = dt;
  s.grid = g;
  const std::size_t n = g.count();
  s.x.resize(n);
  s.y.resize(n);
  s.t.resize(n);
  for (std::size_t f = 0; f < names.size(); ++f) s.add_field(names[f]).resize(n);
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy)
      for (int it = 0; it < nt; ++it) {
        const std::size_t idx = g.index(ix, iy, it);
        s.x[idx] = x0 + ix * dx;
        s.y[idx] = y0 + iy * dy;
        s.t[idx] = t0 + it * dt;
        for (std::size_t f = 0; f < names.size(); ++f)
          s.field_values[f][idx] = fields[f][it](ix * ny + iy);
      }
  return s;
}

Eigen::VectorXd constant_coeff(double v) {
  Eigen::VectorXd c(1);
  c(0) = v;
  return c;
}

}  // namespace

std::pair<SampleSet, GroundTruth> gen_kdv(int nx, int nt, std::uint64_t seed,
                                          double amplitude) {
  if (nx < 16 || nt < 2) throw ArgumentError("gen_kdv needs nx >= 16, nt >= 2");
  const double L = 3.0;
  const double dx = L / nx;  // periodic: x in [0, L)
  const double T = 2.0;
  const double dt_out = T / (nt - 1);
  const double mu = 0.0025;

  // two solitons, the faster one close behind so they collide early; the
  // overtaking breaks the traveling-wave degeneracy between u_x, u*u_x and
  // u_xxx that otherwise makes the equation nearly unidentifiable
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  const double c1 = 0.6, c2 = 0.25;
  const double x1 = 0.45 + jitter(rng), x2 = 0.75 + jitter(rng);
  auto soliton = [&](double c, double x0, double x) {
    const double k = std::sqrt(c / (4.0 * mu));
    // nearest periodic image
    double d = std::fmod(x - x0 + 1.5 * L, L) - 0.5 * L;
    const double s = 1.0 / std::cosh(k * d);
    return 3.0 * c * s * s;
  };

  Eigen::VectorXd u(nx);
  for (int i = 0; i < nx; ++i) {
    const double x = i * dx;
    u(i) = amplitude * (soliton(c1, x1, x) + soliton(c2, x2, x));
  }
  const double max0 = u.cwiseAbs().maxCoeff();

  auto rhs = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    for (int i = 0; i < nx; ++i) {
      const int im2 = (i - 2 + nx) % nx, im1 = (i - 1 + nx) % nx;
      const int ip1 = (i + 1) % nx, ip2 = (i + 2) % nx;
      const double ux = (v(ip1) - v(im1)) / (2 * dx);
      const double uxxx =
          (v(ip2) - 2 * v(ip1) + 2 * v(im1) - v(im2)) / (2 * dx * dx * dx);
      out(i) = -v(i) * ux - mu * uxxx;
    }
  };

  // RK4 with a CFL-limited internal step (dispersive limit dominates)
  const double disp = mu * 2.6 / (dx * dx * dx);
  const double adv = std::max(1.0, 3.0 * (c1 + c2)) / dx;
  const double dt_stable = 1.0 / (disp + adv);
  const int sub = std::max(1, static_cast<int>(std::ceil(dt_out / dt_stable)));
  const double h = dt_out / sub;

  std::vector<Eigen::VectorXd> slices;
  slices.reserve(nt);
  slices.push_back(u);
  Eigen::VectorXd k1(nx), k2(nx), k3(nx), k4(nx), tmp(nx);
  for (int it = 1; it < nt; ++it) {
    for (int s = 0; s < sub; ++s) {
      rhs(u, k1);
      tmp = u + 0.5 * h * k1;
      rhs(tmp, k2);
      tmp = u + 0.5 * h * k2;
      rhs(tmp, k3);
      tmp = u + h * k3;
      rhs(tmp, k4);
      u += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    check_stable(u.cwiseAbs().maxCoeff(), max0, "KdV");
    slices.push_back(u);
  }

  GroundTruth truth;
  truth.terms = {"u*u_x", "u_xxx"};
  truth.coeffs = {constant_coeff(-1.0), constant_coeff(-mu)};
  truth.equation = "u_t = -1*u*u_x + -0.0025*u_xxx";
  return {pack_1d(slices, 0.0, dx, 0.0, dt_out, "u"), truth};
}

std::pair<SampleSet, GroundTruth> gen_chafee_infante(int nx, int nt,
                                                     std::uint64_t seed,
                                                     double amplitude) {
  if (nx < 16 || nt < 2)
    throw ArgumentError("gen_chafee_infante needs nx >= 16, nt >= 2");
  const double L = 30.0;
  const double dx = L / (nx - 1);  // Dirichlet endpoints included
  const double T = 2.0;
  const double dt_out = T / (nt - 1);
  const int sub = 4;
  const double h = dt_out / sub;

  // Smooth random superposition spanning many wavelengths, so curvature and
  // amplitude decouple across the domain; normalized to a fixed peak.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(nx);
  for (int k = 1; k <= 12; ++k) {
    const double a = unif(rng) / std::sqrt(static_cast<double>(k));
    for (int i = 0; i < nx; ++i) u(i) += a * std::sin(k * M_PI * i * dx / L);
  }
  double max0 = u.cwiseAbs().maxCoeff();
  if (max0 > 0) {
    u *= amplitude / max0;
    max0 = amplitude;
  }

  // Thomas factorization of (I - h D2) with Dirichlet identity rows
  const double r = h / (dx * dx);
  const int n = nx;
  std::vector<double> a(n, -r), b(n, 1 + 2 * r), c(n, -r);
  a[0] = c[0] = a[n - 1] = c[n - 1] = 0.0;
  b[0] = b[n - 1] = 1.0;
  std::vector<double> cp(n), dp(n);
  cp[0] = c[0] / b[0];
  for (int i = 1; i < n; ++i) cp[i] = c[i] / (b[i] - a[i] * cp[i - 1]);

  std::vector<Eigen::VectorXd> slices;
  slices.reserve(nt);
  slices.push_back(u);
  for (int it = 1; it < nt; ++it) {
    for (int s = 0; s < sub; ++s) {
      Eigen::VectorXd d = u;
      for (int i = 1; i < n - 1; ++i)
        d(i) += h * (-u(i) + u(i) * u(i) * u(i));
      d(0) = 0.0;
      d(n - 1) = 0.0;
      dp[0] = d(0) / b[0];
      for (int i = 1; i < n; ++i)
        dp[i] = (d(i) - a[i] * dp[i - 1]) / (b[i] - a[i] * cp[i - 1]);
      u(n - 1) = dp[n - 1];
      for (int i = n - 2; i >= 0; --i) u(i) = dp[i] - cp[i] * u(i + 1);
    }
    check_stable(u.cwiseAbs().maxCoeff(), max0, "Chafee-Infante");
    slices.push_back(u);
  }

  GroundTruth truth;
  truth.terms = {"u_xx", "u", "u^3"};
  truth.coeffs = {constant_coeff(1.0), constant_coeff(-1.0),
                  constant_coeff(1.0)};
  truth.equation = "u_t = 1*u_xx + -1*u + 1*u^3";
  return {pack_1d(slices, 0.0, dx, 0.0, dt_out, "u"), truth};
}

std::pair<SampleSet, GroundTruth> gen_burgers2d(int nx, int ny, int nt,
                                                double viscosity,
                                                std::uint64_t seed,
                                                double amplitude) {
  if (nx < 16 || ny < 16 || nt < 2)
    throw ArgumentError("gen_burgers2d needs nx, ny >= 16 and nt >= 2");
  const double Lx = 1.0, Ly = 1.0;
  const double dx = Lx / nx, dy = Ly / ny;  // periodic
  const double T = 1.0;
  const double dt_out = T / (nt - 1);

  // smooth random initial condition from a few Fourier modes
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto random_field = [&]() {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(nx * ny);
    for (int kx = 0; kx <= 2; ++kx)
      for (int ky = 0; ky <= 2; ++ky) {
        if (kx == 0 && ky == 0) continue;
        const double ac = amplitude * unif(rng) / (kx + ky);
        const double as = amplitude * unif(rng) / (kx + ky);
        for (int i = 0; i < nx; ++i)
          for (int j = 0; j < ny; ++j) {
            const double ph = 2 * M_PI * (kx * i * dx / Lx + ky * j * dy / Ly);
            f(i * ny + j) += ac * std::cos(ph) + as * std::sin(ph);
          }
      }
    return f;
  };
  Eigen::VectorXd u = random_field(), v = random_field();
  const double max0 =
      std::max(u.cwiseAbs().maxCoeff(), v.cwiseAbs().maxCoeff());

  auto rhs = [&](const Eigen::VectorXd& U, const Eigen::VectorXd& V,
                 Eigen::VectorXd& dU, Eigen::VectorXd& dV) {
    for (int i = 0; i < nx; ++i) {
      const int im = (i - 1 + nx) % nx, ip = (i + 1) % nx;
      for (int j = 0; j < ny; ++j) {
        const int jm = (j - 1 + ny) % ny, jp = (j + 1) % ny;
        const int c = i * ny + j;
        const double ux = (U(ip * ny + j) - U(im * ny + j)) / (2 * dx);
        const double uy = (U(i * ny + jp) - U(i * ny + jm)) / (2 * dy);
        const double vx = (V(ip * ny + j) - V(im * ny + j)) / (2 * dx);
        const double vy = (V(i * ny + jp) - V(i * ny + jm)) / (2 * dy);
        const double lap_u =
            (U(ip * ny + j) - 2 * U(c) + U(im * ny + j)) / (dx * dx) +
            (U(i * ny + jp) - 2 * U(c) + U(i * ny + jm)) / (dy * dy);
        const double lap_v =
            (V(ip * ny + j) - 2 * V(c) + V(im * ny + j)) / (dx * dx) +
            (V(i * ny + jp) - 2 * V(c) + V(i * ny + jm)) / (dy * dy);
        dU(c) = viscosity * lap_u - U(c) * ux - V(c) * uy;
        dV(c) = viscosity * lap_v - U(c) * vx - V(c) * vy;
      }
    }
  };

  const double diff = 4.0 * viscosity / (dx * dx);
  const double adv = 2.0 * std::max(1.0, max0) / dx;
  const double dt_stable = 1.6 / (diff + adv);
  const int sub = std::max(1, static_cast<int>(std::ceil(dt_out / dt_stable)));
  const double h = dt_out / sub;

  std::vector<std::vector<Eigen::VectorXd>> fields(2);
  fields[0].push_back(u);
  fields[1].push_back(v);
  Eigen::VectorXd k1u(nx * ny), k1v(nx * ny), k2u(nx * ny), k2v(nx * ny);
  Eigen::VectorXd tu(nx * ny), tv(nx * ny);
  for (int it = 1; it < nt; ++it) {
    for (int s = 0; s < sub; ++s) {
      // midpoint rule
      rhs(u, v, k1u, k1v);
      tu = u + 0.5 * h * k1u;
      tv = v + 0.5 * h * k1v;
      rhs(tu, tv, k2u, k2v);
      u += h * k2u;
      v += h * k2v;
    }
    check_stable(std::max(u.cwiseAbs().maxCoeff(), v.cwiseAbs().maxCoeff()),
                 max0, "Burgers");
    fields[0].push_back(u);
    fields[1].push_back(v);
  }

  GroundTruth truth;
  truth.terms = {"lap_u", "u*u_x", "v*u_y"};
  truth.coeffs = {constant_coeff(viscosity), constant_coeff(-1.0),
                  constant_coeff(-1.0)};
  std::ostringstream eq;
  eq << "u_t = " << viscosity << "*lap_u + -1*u*u_x + -1*v*u_y";
  truth.equation = eq.str();
  return {pack_2d(fields, {"u", "v"}, nx, ny, 0.0, dx, 0.0, dy, 0.0, dt_out),
          truth};
}

std::pair<SampleSet, GroundTruth> gen_seepage(const ConductivityField& field,
                                              double specific_storage, int nt,
                                              double boundary_left,
                                              double boundary_right,
                                              double dt, std::uint64_t seed) {
  const int nx = field.nx, ny = field.ny;
  if (nx < 3 || ny < 3) throw ArgumentError("gen_seepage needs a 3x3+ grid");
  if (specific_storage <= 0)
    throw ArgumentError("gen_seepage needs specific_storage > 0");
  const double dxp = field.domain_length / nx;  // physical cell size
  const int n = nx * ny;

  // backward-Euler finite volumes with harmonic-mean face conductivities;
  // coordinates and the expanded truth are in grid-index units
  auto harm = [](double a, double b) { return 2.0 * a * b / (a + b); };
  std::vector<Eigen::Triplet<double>> trips;
  const int sub = 4;  // internal substeps per stored slice
  const double h = dt / sub;
  const double cap = specific_storage * dxp * dxp / h;
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy) {
      const int c = ix * ny + iy;
      if (ix == 0 || ix == nx - 1) {
        trips.emplace_back(c, c, 1.0);
        continue;
      }
      double diag = cap;
      auto couple = [&](int jx, int jy) {
        const int o = jx * ny + jy;
        const double t = harm(field.k(ix, iy), field.k(jx, jy));
        diag += t;
        trips.emplace_back(c, o, -t);
      };
      couple(ix - 1, iy);
      couple(ix + 1, iy);
      if (iy > 0) couple(ix, iy - 1);
      if (iy < ny - 1) couple(ix, iy + 1);
      trips.emplace_back(c, c, diag);
    }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw NumericError("seepage linear system factorization failed");

  // The fixed head on the left edge varies along y so the flow has genuine
  // y-components; a uniform edge head drives almost purely x-directed flow
  // and leaves u_y / u_yy with no signal to identify.
  auto left_head = [&](int iy) {
    return boundary_right +
           (boundary_left - boundary_right) *
               std::sin(M_PI * iy / (ny - 1.0));
  };
  Eigen::VectorXd head = Eigen::VectorXd::Constant(n, boundary_right);

  // Smooth random initial perturbation, tapered to zero on the fixed-head
  // edges. Its many spatial modes decay at different rates, so each site
  // sees a temporally rich head history and the four coefficient fields
  // stay separately identifiable.
  {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd noise0(n);
    for (int i = 0; i < n; ++i) noise0(i) = gauss(rng);
    Eigen::VectorXd tmp(n);
    for (int pass = 0; pass < 20; ++pass) {
      for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy) {
          const int c = ix * ny + iy;
          const int w = std::max(ix - 1, 0) * ny + iy;
          const int e = std::min(ix + 1, nx - 1) * ny + iy;
          const int s = ix * ny + std::max(iy - 1, 0);
          const int nn = ix * ny + std::min(iy + 1, ny - 1);
          tmp(c) = 0.2 * (noise0(c) + noise0(w) + noise0(e) + noise0(s) +
                          noise0(nn));
        }
      noise0.swap(tmp);
    }
    const double sd = std::sqrt(noise0.squaredNorm() / n -
                                std::pow(noise0.mean(), 2));
    const double amp =
        sd > 0 ? 0.5 * std::abs(boundary_left - boundary_right) / sd : 0.0;
    for (int ix = 0; ix < nx; ++ix) {
      const double taper = std::sin(M_PI * ix / (nx - 1.0));
      for (int iy = 0; iy < ny; ++iy)
        head(ix * ny + iy) += amp * taper * noise0(ix * ny + iy);
    }
  }
  for (int iy = 0; iy < ny; ++iy) head(0 * ny + iy) = left_head(iy);

  std::vector<std::vector<Eigen::VectorXd>> fields(1);
  fields[0].push_back(head);
  Eigen::VectorXd b(n);
  for (int it = 1; it < nt; ++it) {
    for (int s = 0; s < sub; ++s) {
      for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy) {
          const int c = ix * ny + iy;
          if (ix == 0)
            b(c) = left_head(iy);
          else if (ix == nx - 1)
            b(c) = boundary_right;
          else
            b(c) = cap * head(c);
        }
      head = lu.solve(b);
      if (lu.info() != Eigen::Success)
        throw NumericError("seepage linear solve failed");
    }
    fields[0].push_back(head);
  }

  GroundTruth truth;
  truth.target_field = "u";
  truth.terms = {"u_x", "u_y", "u_xx", "u_yy"};
  const double scale = 1.0 / (specific_storage * dxp * dxp);
  Eigen::VectorXd xi1(n), xi2(n), xi3(n), xi4(n);
  truth.coords.resize(n);
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy) {
      const int c = ix * ny + iy;
      truth.coords[c] = {static_cast<double>(ix), static_cast<double>(iy)};
      const double k = field.k(ix, iy);
      // one-sided differences of K at the edges, central inside (index units)
      const double kx =
          (field.k(std::min(ix + 1, nx - 1), iy) -
           field.k(std::max(ix - 1, 0), iy)) /
          ((std::min(ix + 1, nx - 1) - std::max(ix - 1, 0)));
      const double ky =
          (field.k(ix, std::min(iy + 1, ny - 1)) -
           field.k(ix, std::max(iy - 1, 0))) /
          ((std::min(iy + 1, ny - 1) - std::max(iy - 1, 0)));
      xi1(c) = kx * scale;
      xi2(c) = ky * scale;
      xi3(c) = k * scale;
      xi4(c) = k * scale;
    }
  truth.coeffs = {xi1, xi2, xi3, xi4};
  truth.equation =
      "u_t = xi_1(x,y)*u_x + xi_2(x,y)*u_y + xi_3(x,y)*u_xx + xi_4(x,y)*u_yy";
  return {pack_2d(fields, {"u"}, nx, ny, 0.0, 1.0, 0.0, 1.0, 0.0, dt), truth};
}

}  // namespace pdekd
