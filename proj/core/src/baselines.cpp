#include "pdekd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace pdekd {

namespace {

struct BlockSystem {
  std::vector<Eigen::MatrixXd> gram;
  Eigen::MatrixXd rhs;  // B x p
};

BlockSystem block_system(const TermLibrary& lib) {
  const int B = lib.n_blocks;
  const int p = static_cast<int>(lib.term_count());
  BlockSystem sys;
  sys.gram.assign(B, Eigen::MatrixXd::Zero(p, p));
  sys.rhs = Eigen::MatrixXd::Zero(B, p);
  Eigen::VectorXd xrow(p);
  for (std::size_t j = 0; j < lib.sample_count(); ++j) {
    const int b = lib.block_index[j];
    xrow = lib.design.row(static_cast<Eigen::Index>(j)).transpose();
    sys.gram[b].selfadjointView<Eigen::Lower>().rankUpdate(xrow, 1.0);
    sys.rhs.row(b) += lib.target(static_cast<Eigen::Index>(j)) * xrow.transpose();
  }
  for (auto& g : sys.gram)
    g.triangularView<Eigen::StrictlyUpper>() =
        g.transpose().triangularView<Eigen::StrictlyUpper>();
  return sys;
}

Eigen::VectorXd solve_block(const Eigen::MatrixXd& gram,
                            const Eigen::VectorXd& rhs, double ridge,
                            const std::vector<int>& cols) {
  const int k = static_cast<int>(cols.size());
  Eigen::MatrixXd g(k, k);
  Eigen::VectorXd r(k);
  for (int i = 0; i < k; ++i) {
    r(i) = rhs(cols[i]);
    for (int j = 0; j < k; ++j) g(i, j) = gram(cols[i], cols[j]);
  }
  if (ridge > 0) {
    g.diagonal().array() += ridge;
    return g.ldlt().solve(r);
  }
  // minimum-norm solution for singular unregularized systems
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(g);
  return cod.solve(r);
}

CoefficientField field_from(const TermLibrary& lib, Eigen::MatrixXd coeffs) {
  CoefficientField f;
  const int p = static_cast<int>(lib.term_count());
  for (int i = 0; i < p; ++i) {
    f.active.push_back(i);
    f.term_names.push_back(lib.terms[i].name);
  }
  f.block_coords = lib.block_coords;
  f.W = coeffs;
  f.Xi = std::move(coeffs);
  double rss = 0.0;
  for (std::size_t j = 0; j < lib.sample_count(); ++j) {
    const int b = lib.block_index[j];
    double pred = lib.design.row(static_cast<Eigen::Index>(j))
                      .dot(f.Xi.row(b));
    double r = lib.target(static_cast<Eigen::Index>(j)) - pred;
    rss += r * r;
  }
  f.diag.rss = rss;
  f.diag.objective = rss;
  f.diag.used_dense = true;
  return f;
}

}  // namespace

CoefficientField fit_pointwise(const TermLibrary& lib,
                               const BaselineConfig& cfg) {
  const int B = lib.n_blocks;
  const int p = static_cast<int>(lib.term_count());
  BlockSystem sys = block_system(lib);

  std::vector<int> all(p);
  for (int i = 0; i < p; ++i) all[i] = i;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(B, p);
  for (int b = 0; b < B; ++b)
    W.row(b) = solve_block(sys.gram[b], sys.rhs.row(b).transpose(), cfg.ridge,
                           all).transpose();

  if (cfg.threshold > 0) {
    // one SGTRidge-style group-pruning pass
    std::vector<int> keep;
    for (int i = 0; i < p; ++i) {
      double rms = std::sqrt(W.col(i).squaredNorm() / B);
      if (rms >= cfg.threshold) keep.push_back(i);
    }
    if (!keep.empty() && static_cast<int>(keep.size()) < p) {
      W.setZero();
      for (int b = 0; b < B; ++b) {
        Eigen::VectorXd w = solve_block(sys.gram[b], sys.rhs.row(b).transpose(),
                                        cfg.ridge, keep);
        for (std::size_t i = 0; i < keep.size(); ++i)
          W(b, keep[i]) = w(static_cast<Eigen::Index>(i));
      }
    }
  }
  return field_from(lib, std::move(W));
}

CoefficientField fit_local_average(const TermLibrary& lib,
                                   const KernelGraph& uniform_graph,
                                   const BaselineConfig& cfg,
                                   const KernelConfig& kernel_cfg) {
  KernelConfig kc = kernel_cfg;
  kc.ridge = cfg.ridge;
  std::vector<int> all(lib.term_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return fit(lib, uniform_graph, all, kc);
}

CoefficientField fit_coarsened(const TermLibrary& lib,
                               const BaselineConfig& cfg) {
  if (cfg.coarsen_factor < 1)
    throw ArgumentError("coarsen factor must be >= 1");
  if (cfg.coarsen_factor == 1) return fit_pointwise(lib, cfg);

  const int B = lib.n_blocks;
  const int p = static_cast<int>(lib.term_count());

  // infer the block lattice spacing from distinct coordinates
  auto spacing = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    double s = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < v.size(); ++i) s = std::min(s, v[i] - v[i - 1]);
    return std::isfinite(s) ? s : 1.0;
  };
  std::vector<double> bx(B), by(B);
  for (int b = 0; b < B; ++b) {
    bx[b] = lib.block_coords[b][0];
    by[b] = lib.block_coords[b][1];
  }
  const double sx = spacing(bx) * cfg.coarsen_factor;
  const double sy = spacing(by) * cfg.coarsen_factor;
  const double minx = *std::min_element(bx.begin(), bx.end());
  const double miny = *std::min_element(by.begin(), by.end());

  std::map<std::pair<long, long>, std::vector<int>> cells;
  for (int b = 0; b < B; ++b) {
    long cx = static_cast<long>(std::floor((bx[b] - minx) / sx + 1e-12));
    long cy = static_cast<long>(std::floor((by[b] - miny) / sy + 1e-12));
    cells[{cx, cy}].push_back(b);
  }

  BlockSystem sys = block_system(lib);
  std::vector<int> all(p);
  for (int i = 0; i < p; ++i) all[i] = i;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(B, p);
  for (const auto& [key, members] : cells) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(p);
    for (int b : members) {
      g += sys.gram[b];
      r += sys.rhs.row(b).transpose();
    }
    Eigen::VectorXd w = solve_block(g, r, cfg.ridge, all);
    for (int b : members) W.row(b) = w.transpose();
  }
  return field_from(lib, std::move(W));
}

}  // namespace pdekd
