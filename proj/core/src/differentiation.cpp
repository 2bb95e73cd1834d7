#include "pdekd/differentiation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <queue>

namespace pdekd {

std::vector<double> fd_weights(double x0, const std::vector<double>& nodes,
                               int order) {
  // Fornberg (1988) recurrence for finite-difference weights.
  const int n = static_cast<int>(nodes.size()) - 1;
  const int m = order;
  if (n < m) throw ArgumentError("not enough nodes for requested derivative");
  std::vector<std::vector<double>> d(
      static_cast<std::size_t>(n) + 1,
      std::vector<double>(static_cast<std::size_t>(m) + 1, 0.0));
  d[0][0] = 1.0;
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        // the new node's weights, from the not-yet-updated previous row
        for (int k = mn; k >= 1; --k)
          d[i][k] = c1 * (k * d[i - 1][k - 1] - c5 * d[i - 1][k]) / c2;
        d[i][0] = -c1 * c5 * d[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        d[j][k] = (c4 * d[j][k] - k * d[j][k - 1]) / c3;
      d[j][0] = c4 * d[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) w[i] = d[i][m];
  return w;
}

namespace {

struct AxisLayout {
  std::size_t stride = 1;   // step between consecutive points along the axis
  int n = 0;                // points along the axis
  double h = 1.0;           // spacing
  std::size_t line_count = 0;
};

AxisLayout axis_layout(const GridMeta& g, Axis axis, bool has_y) {
  AxisLayout a;
  const std::size_t ny = g.is2d() ? static_cast<std::size_t>(g.ny) : 1;
  const std::size_t nt = static_cast<std::size_t>(g.nt);
  switch (axis) {
    case Axis::x:
      a.stride = ny * nt;
      a.n = g.nx;
      a.h = g.dx;
      break;
    case Axis::y:
      if (!has_y) throw ArgumentError("axis y requested on 1D data");
      a.stride = nt;
      a.n = g.ny;
      a.h = g.dy;
      break;
    case Axis::t:
      a.stride = 1;
      a.n = g.nt;
      a.h = g.dt;
      break;
  }
  a.line_count = g.count() / a.n;
  return a;
}

// Visits the base index of every 1D line along the axis.
template <typename Fn>
void for_each_line(const GridMeta& g, const AxisLayout& a, Fn&& fn) {
  const std::size_t total = g.count();
  const std::size_t span = a.stride * a.n;
  for (std::size_t block = 0; block < total; block += span)
    for (std::size_t off = 0; off < a.stride; ++off) fn(block + off);
}

// Per-position stencils for a line of n points: central in the interior,
// shifted one-sided windows of order+2 points at the boundary.
struct LineStencils {
  std::vector<int> lo;                   // window start per position
  std::vector<std::vector<double>> w;    // weights per position
};

LineStencils central_stencils(int n, double h, int order) {
  const int half = (order == 3) ? 2 : 1;
  const int ws_central = 2 * half + 1;
  const int ws_boundary = order + 2;
  if (n < std::max(ws_central, ws_boundary))
    throw ArgumentError("grid too short along axis for requested derivative");
  LineStencils s;
  s.lo.resize(n);
  s.w.resize(n);
  for (int i = 0; i < n; ++i) {
    int ws = ws_central;
    int lo = i - half;
    if (lo < 0 || lo + ws > n) {
      ws = std::max(ws_boundary, ws_central);
      lo = std::clamp(i - half, 0, n - ws);
    }
    std::vector<double> nodes(ws);
    for (int j = 0; j < ws; ++j) nodes[j] = (lo + j - i) * h;
    s.lo[i] = lo;
    s.w[i] = fd_weights(0.0, nodes, order);
  }
  return s;
}

// Least-squares polynomial differencing rows (Savitzky-Golay style).
LineStencils savgol_stencils(int n, double h, int order, int window,
                             int degree) {
  if (window % 2 == 0) throw ArgumentError("polynomial window must be odd");
  if (degree < order)
    throw ArgumentError("polynomial degree below derivative order");
  int m = std::min(window, n);
  if (m % 2 == 0) --m;
  if (m < degree + 1)
    throw ArgumentError("grid too short for polynomial window");
  const int hw = (m - 1) / 2;
  const double scale = hw > 0 ? hw * h : 1.0;

  Eigen::MatrixXd V(m, degree + 1);
  for (int j = 0; j < m; ++j) {
    double xi = (j - hw) * h / scale;
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      V(j, k) = p;
      p *= xi;
    }
  }
  Eigen::MatrixXd pinv =
      (V.transpose() * V).ldlt().solve(V.transpose());  // (d+1) x m

  LineStencils s;
  s.lo.resize(n);
  s.w.resize(n);
  std::vector<std::vector<double>> rows_by_offset(m);
  for (int i = 0; i < n; ++i) {
    int lo = std::clamp(i - hw, 0, n - m);
    int off = i - lo;  // evaluation node within the window
    s.lo[i] = lo;
    if (rows_by_offset[off].empty()) {
      double xs = (off - hw) * h / scale;
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(degree + 1);
      for (int k = order; k <= degree; ++k) {
        double fact = 1.0;
        for (int q = 0; q < order; ++q) fact *= (k - q);
        r(k) = fact * std::pow(xs, k - order);
      }
      Eigen::RowVectorXd wrow = r * pinv / std::pow(scale, order);
      rows_by_offset[off].assign(wrow.data(), wrow.data() + m);
    }
    s.w[i] = rows_by_offset[off];
  }
  return s;
}

// Centered finite-difference weights for a periodic line.
std::vector<double> centered_fd(double h, int order, int n) {
  const int half = (order == 3) ? 2 : 1;
  const int ws = 2 * half + 1;
  if (n < ws)
    throw ArgumentError("grid too short along axis for requested derivative");
  std::vector<double> nodes(ws);
  for (int j = 0; j < ws; ++j) nodes[j] = (j - half) * h;
  return fd_weights(0.0, nodes, order);
}

// Centered least-squares polynomial differencing row.
std::vector<double> savgol_centered(double h, int order, int window,
                                    int degree, int n) {
  if (window % 2 == 0) throw ArgumentError("polynomial window must be odd");
  if (degree < order)
    throw ArgumentError("polynomial degree below derivative order");
  int m = std::min(window, n % 2 == 0 ? n - 1 : n);
  if (m % 2 == 0) --m;
  if (m < degree + 1)
    throw ArgumentError("grid too short for polynomial window");
  const int hw = (m - 1) / 2;
  const double scale = hw > 0 ? hw * h : 1.0;
  Eigen::MatrixXd V(m, degree + 1);
  for (int j = 0; j < m; ++j) {
    double xi = (j - hw) * h / scale;
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      V(j, k) = p;
      p *= xi;
    }
  }
  Eigen::MatrixXd pinv = (V.transpose() * V).ldlt().solve(V.transpose());
  double fact = 1.0;
  for (int q = 1; q <= order; ++q) fact *= q;
  Eigen::RowVectorXd wrow = fact * pinv.row(order) / std::pow(scale, order);
  return std::vector<double>(wrow.data(), wrow.data() + m);
}

std::vector<double> apply_stencils(const std::vector<double>& values,
                                   const GridMeta& g, const AxisLayout& a,
                                   const LineStencils& s) {
  std::vector<double> out(values.size());
  for_each_line(g, a, [&](std::size_t base) {
    for (int i = 0; i < a.n; ++i) {
      const auto& w = s.w[i];
      double acc = 0.0;
      std::size_t start = base + static_cast<std::size_t>(s.lo[i]) * a.stride;
      for (std::size_t j = 0; j < w.size(); ++j)
        acc += w[j] * values[start + j * a.stride];
      out[base + static_cast<std::size_t>(i) * a.stride] = acc;
    }
  });
  return out;
}

std::vector<double> moving_average_axis(const std::vector<double>& values,
                                        const GridMeta& g, const AxisLayout& a,
                                        int window, bool periodic) {
  const int hw = (window - 1) / 2;
  std::vector<double> out(values.size());
  for_each_line(g, a, [&](std::size_t base) {
    for (int i = 0; i < a.n; ++i) {
      double acc = 0.0;
      int count = 0;
      if (periodic) {
        for (int j = -hw; j <= hw; ++j) {
          int idx = ((i + j) % a.n + a.n) % a.n;
          acc += values[base + static_cast<std::size_t>(idx) * a.stride];
        }
        count = window;
      } else {
        int lo = std::max(0, i - hw);
        int hi = std::min(a.n - 1, i + hw);
        for (int j = lo; j <= hi; ++j)
          acc += values[base + static_cast<std::size_t>(j) * a.stride];
        count = hi - lo + 1;
      }
      out[base + static_cast<std::size_t>(i) * a.stride] = acc / count;
    }
  });
  return out;
}

// Applies one centered stencil everywhere with wraparound indexing.
std::vector<double> apply_periodic(const std::vector<double>& values,
                                   const GridMeta& g, const AxisLayout& a,
                                   const std::vector<double>& w) {
  const int hw = (static_cast<int>(w.size()) - 1) / 2;
  std::vector<double> out(values.size());
  for_each_line(g, a, [&](std::size_t base) {
    for (int i = 0; i < a.n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) {
        int idx = ((i + static_cast<int>(j) - hw) % a.n + a.n) % a.n;
        acc += w[j] * values[base + static_cast<std::size_t>(idx) * a.stride];
      }
      out[base + static_cast<std::size_t>(i) * a.stride] = acc;
    }
  });
  return out;
}

}  // namespace

std::vector<double> smooth_field(const std::vector<double>& values,
                                 const SampleSet& set, int window,
                                 bool periodic_space) {
  if (!set.grid) throw ArgumentError("smooth_field requires grid metadata");
  if (window < 1 || window % 2 == 0)
    throw ArgumentError("smoothing window must be odd and >= 1");
  if (values.size() != set.size())
    throw ArgumentError("value array length mismatch");
  if (window == 1) return values;
  const GridMeta& g = *set.grid;
  std::vector<double> out = values;
  out = moving_average_axis(out, g, axis_layout(g, Axis::x, set.has_y()),
                            window, periodic_space);
  if (g.is2d())
    out = moving_average_axis(out, g, axis_layout(g, Axis::y, set.has_y()),
                              window, periodic_space);
  out = moving_average_axis(out, g, axis_layout(g, Axis::t, set.has_y()),
                            window, false);
  return out;
}

namespace {

// Derivative (or order-0 projection) of one axis of a gridded array.
std::vector<double> apply_axis(const std::vector<double>& values,
                               const SampleSet& set, Axis axis, int order,
                               const DiffConfig& cfg) {
  const GridMeta& g = *set.grid;
  const AxisLayout a = axis_layout(g, axis, set.has_y());
  int win = cfg.sg_window;
  int deg = cfg.sg_degree;
  if (axis == Axis::t && cfg.sg_window_t >= 0) {
    win = cfg.sg_window_t;
    deg = cfg.sg_degree_t >= 0 ? cfg.sg_degree_t : cfg.sg_degree;
  }
  if (order == 0 && win <= 0) return values;  // plain stencils: identity
  if (cfg.periodic_space && axis != Axis::t) {
    std::vector<double> w = win > 0
                                ? savgol_centered(a.h, order, win, deg, a.n)
                                : centered_fd(a.h, order, a.n);
    return apply_periodic(values, g, a, w);
  }
  LineStencils s = win > 0 ? savgol_stencils(a.n, a.h, order, win, deg)
                           : central_stencils(a.n, a.h, order);
  return apply_stencils(values, g, a, s);
}

}  // namespace

std::vector<double> differentiate_grid(const SampleSet& set,
                                       const DerivSpec& spec,
                                       const DiffConfig& cfg) {
  if (!set.grid)
    throw ArgumentError("differentiate_grid requires grid metadata");
  if (spec.order < 0 || spec.order > 3)
    throw ArgumentError("derivative order must be in [0,3]");

  std::vector<double> values = set.field(spec.field);
  if (cfg.smoothing_window > 1)
    values = smooth_field(values, set, cfg.smoothing_window,
                          cfg.periodic_space);

  values = apply_axis(values, set, spec.axis, spec.order, cfg);
  if (cfg.cross_smooth) {
    for (Axis other : {Axis::x, Axis::y, Axis::t}) {
      if (other == spec.axis) continue;
      if (other == Axis::y && !set.has_y()) continue;
      values = apply_axis(values, set, other, 0, cfg);
    }
  }
  return values;
}

std::vector<double> differentiate_grid(const SampleSet& set,
                                       const DerivSpec& spec) {
  return differentiate_grid(set, spec, DiffConfig{});
}

// ---------------------------------------------------------------------------
// scattered samples: k-d tree + weighted local polynomial fits

namespace {

struct KdTree {
  // points stored as flat rows of `dim` scaled coordinates
  std::vector<double> pts;
  std::vector<int> index;
  int dim = 2;

  struct Node {
    int lo, hi;     // range into index
    int axis = -1;  // -1 for leaf
    double split = 0.0;
    int left = -1, right = -1;
  };
  std::vector<Node> nodes;

  double coord(int id, int d) const { return pts[id * dim + d]; }

  int build(int lo, int hi, int depth) {
    Node nd;
    nd.lo = lo;
    nd.hi = hi;
    int self = static_cast<int>(nodes.size());
    nodes.push_back(nd);
    if (hi - lo <= 16) return self;
    int axis = depth % dim;
    int mid = (lo + hi) / 2;
    std::nth_element(index.begin() + lo, index.begin() + mid,
                     index.begin() + hi, [&](int a, int b) {
                       return coord(a, axis) < coord(b, axis);
                     });
    nodes[self].axis = axis;
    nodes[self].split = coord(index[mid], axis);
    int left = build(lo, mid, depth + 1);
    int right = build(mid, hi, depth + 1);
    nodes[self].left = left;
    nodes[self].right = right;
    return self;
  }

  void knn(const double* q, int k, std::priority_queue<std::pair<double, int>>& heap,
           int node) const {
    const Node& nd = nodes[node];
    if (nd.axis < 0) {
      for (int i = nd.lo; i < nd.hi; ++i) {
        int id = index[i];
        double d2 = 0.0;
        for (int d = 0; d < dim; ++d) {
          double diff = coord(id, d) - q[d];
          d2 += diff * diff;
        }
        if (static_cast<int>(heap.size()) < k)
          heap.emplace(d2, id);
        else if (d2 < heap.top().first) {
          heap.pop();
          heap.emplace(d2, id);
        }
      }
      return;
    }
    double diff = q[nd.axis] - nd.split;
    int near = diff < 0 ? nd.left : nd.right;
    int far = diff < 0 ? nd.right : nd.left;
    knn(q, k, heap, near);
    if (static_cast<int>(heap.size()) < k || diff * diff < heap.top().first)
      knn(q, k, heap, far);
  }
};

// Monomial exponent tuples of total degree <= degree over `dim` variables.
std::vector<std::array<int, 3>> monomials(int dim, int degree) {
  std::vector<std::array<int, 3>> out;
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; b <= (dim >= 2 ? degree - a : 0); ++b)
      for (int c = 0; c <= (dim >= 3 ? degree - a - b : 0); ++c)
        out.push_back({a, b, c});
  return out;
}

}  // namespace

std::vector<double> differentiate_scattered(const SampleSet& set,
                                            const DerivSpec& spec,
                                            const DiffConfig& cfg,
                                            ScatterDiagnostics* diag) {
  if (cfg.mode != DiffMode::local_polynomial)
    throw ArgumentError("differentiate_scattered requires local-polynomial mode");
  if (spec.axis == Axis::y && !set.has_y())
    throw ArgumentError("axis y requested on 1D data");
  const int n = static_cast<int>(set.size());
  const int dim = set.has_y() ? 3 : 2;  // (x[,y],t)
  const auto mono = monomials(dim, cfg.poly_degree);
  const int nb = static_cast<int>(mono.size());
  int k = std::max(cfg.neighbor_count, nb);
  k = std::min(k, n);
  if (k < nb)
    throw ArgumentError("not enough samples for the local polynomial basis");

  // scale each axis to unit spread for the neighbor metric
  auto spread = [](const std::vector<double>& v) {
    auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    double s = *mx - *mn;
    return s > 0 ? s : 1.0;
  };
  const double sx = spread(set.x);
  const double sy = set.has_y() ? spread(set.y) : 1.0;
  const double st = spread(set.t);

  KdTree tree;
  tree.dim = dim;
  tree.pts.resize(static_cast<std::size_t>(n) * dim);
  tree.index.resize(n);
  std::iota(tree.index.begin(), tree.index.end(), 0);
  for (int i = 0; i < n; ++i) {
    double* p = &tree.pts[static_cast<std::size_t>(i) * dim];
    p[0] = set.x[i] / sx;
    if (dim == 3) {
      p[1] = set.y[i] / sy;
      p[2] = set.t[i] / st;
    } else {
      p[1] = set.t[i] / st;
    }
  }
  tree.build(0, n, 0);

  const std::vector<double>& f = set.field(spec.field);
  std::vector<double> out(set.size(),
                          std::numeric_limits<double>::quiet_NaN());
  std::vector<char> ok(set.size(), 0);

  // index of the axis within (x[,y],t) and of the derivative monomial
  int axis_slot = 0;
  if (spec.axis == Axis::y) axis_slot = 1;
  if (spec.axis == Axis::t) axis_slot = dim - 1;
  std::array<int, 3> want{0, 0, 0};
  want[axis_slot] = spec.order;
  int want_col = -1;
  for (int c = 0; c < nb; ++c)
    if (mono[c] == want) want_col = c;
  double fact = 1.0;
  for (int q = 2; q <= spec.order; ++q) fact *= q;

  Eigen::MatrixXd V(k, nb);
  Eigen::VectorXd rhs(k);
  std::vector<int> nb_ids(k);
  for (int i = 0; i < n; ++i) {
    double q[3];
    for (int d = 0; d < dim; ++d)
      q[d] = tree.pts[static_cast<std::size_t>(i) * dim + d];
    std::priority_queue<std::pair<double, int>> heap;
    tree.knn(q, k, heap, 0);
    int cnt = static_cast<int>(heap.size());
    double maxd2 = heap.top().first;
    for (int j = cnt - 1; j >= 0; --j) {
      nb_ids[j] = heap.top().second;
      heap.pop();
    }
    const double gamma = std::max(maxd2 / 4.0, 1e-300);
    // local scale so the Vandermonde stays conditioned
    double lscale = std::sqrt(std::max(maxd2, 1e-30));
    for (int j = 0; j < cnt; ++j) {
      int id = nb_ids[j];
      double dxs[3] = {0, 0, 0};
      dxs[0] = set.x[id] - set.x[i];
      if (dim == 3) {
        dxs[1] = set.y[id] - set.y[i];
        dxs[2] = set.t[id] - set.t[i];
      } else {
        dxs[1] = set.t[id] - set.t[i];
      }
      double sc[3] = {sx * lscale, dim == 3 ? sy * lscale : st * lscale,
                      st * lscale};
      double d2 = 0.0;
      for (int d = 0; d < dim; ++d) {
        double diff = tree.pts[static_cast<std::size_t>(id) * dim + d] - q[d];
        d2 += diff * diff;
      }
      double w = std::sqrt(std::exp(-d2 / (2.0 * gamma)));
      for (int c = 0; c < nb; ++c) {
        double term = 1.0;
        for (int d = 0; d < dim; ++d)
          for (int e = 0; e < mono[c][d]; ++e) term *= dxs[d] / sc[d];
        V(j, c) = w * term;
      }
      rhs(j) = w * f[id];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V.topRows(cnt));
    qr.setThreshold(1e-10);
    if (qr.rank() < nb) {
      if (diag) ++diag->rank_deficient_fits;
      continue;
    }
    Eigen::VectorXd coef = qr.solve(rhs.head(cnt));
    double denom = 1.0;
    double sc_axis = (spec.axis == Axis::x ? sx : (spec.axis == Axis::y ? sy : st)) * lscale;
    for (int e = 0; e < spec.order; ++e) denom *= sc_axis;
    out[i] = coef(want_col) * fact / denom;
    ok[i] = 1;
  }

  // failed fits inherit the nearest successful neighbor's value
  for (int i = 0; i < n; ++i) {
    if (ok[i]) continue;
    double q[3];
    for (int d = 0; d < dim; ++d)
      q[d] = tree.pts[static_cast<std::size_t>(i) * dim + d];
    double best = std::numeric_limits<double>::infinity();
    int best_id = -1;
    for (int j = 0; j < n; ++j) {
      if (!ok[j]) continue;
      double d2 = 0.0;
      for (int d = 0; d < dim; ++d) {
        double diff = tree.pts[static_cast<std::size_t>(j) * dim + d] - q[d];
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        best_id = j;
      }
    }
    if (best_id < 0)
      throw NumericError("every local polynomial fit was rank-deficient");
    out[i] = out[best_id];
  }
  return out;
}

}  // namespace pdekd
