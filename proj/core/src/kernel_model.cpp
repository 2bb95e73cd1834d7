#include "pdekd/kernel_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace pdekd {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Radius search over block centroids via uniform binning.
std::vector<Eigen::Triplet<double>> neighbor_pairs(
    const std::vector<std::array<double, 2>>& coords, double radius,
    double gamma, bool uniform) {
  const int n = static_cast<int>(coords.size());
  const double r2 = radius * radius;
  double minx = coords[0][0], miny = coords[0][1];
  for (const auto& c : coords) {
    minx = std::min(minx, c[0]);
    miny = std::min(miny, c[1]);
  }
  const double cell = radius > 0 ? radius : 1.0;
  std::unordered_map<long long, std::vector<int>> bins;
  auto key = [&](double xx, double yy) {
    long long ix = static_cast<long long>(std::floor((xx - minx) / cell));
    long long iy = static_cast<long long>(std::floor((yy - miny) / cell));
    return ix * 73856093LL ^ iy * 19349663LL;
  };
  for (int i = 0; i < n; ++i) bins[key(coords[i][0], coords[i][1])].push_back(i);

  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) {
    long long bx = static_cast<long long>(std::floor((coords[i][0] - minx) / cell));
    long long by = static_cast<long long>(std::floor((coords[i][1] - miny) / cell));
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = bins.find((bx + dx) * 73856093LL ^ (by + dy) * 19349663LL);
        if (it == bins.end()) continue;
        for (int j : it->second) {
          double ddx = coords[i][0] - coords[j][0];
          double ddy = coords[i][1] - coords[j][1];
          double d2 = ddx * ddx + ddy * ddy;
          if (d2 <= r2) {
            double w = uniform ? 1.0 : std::exp(-d2 / (2.0 * gamma));
            trip.emplace_back(i, j, w);
          }
        }
      }
  }
  return trip;
}

KernelGraph graph_from_triplets(const TermLibrary& lib,
                                std::vector<Eigen::Triplet<double>> trip) {
  KernelGraph g;
  g.n_blocks = lib.n_blocks;
  g.block_coords = lib.block_coords;
  g.raw.resize(g.n_blocks, g.n_blocks);
  g.raw.setFromTriplets(trip.begin(), trip.end());
  g.norm = g.raw;
  for (int i = 0; i < g.norm.outerSize(); ++i) {
    double sum = 0.0;
    for (SpMat::InnerIterator it(g.norm, i); it; ++it) sum += it.value();
    for (SpMat::InnerIterator it(g.norm, i); it; ++it) it.valueRef() /= sum;
  }
  return g;
}

}  // namespace

KernelGraph build_kernel_graph(const TermLibrary& lib,
                               const KernelConfig& cfg) {
  if (cfg.radius <= 0 || cfg.gamma <= 0)
    throw ArgumentError("kernel radius and gamma must be positive");
  if (lib.n_blocks == 0) throw ArgumentError("library has no blocks");
  return graph_from_triplets(
      lib, neighbor_pairs(lib.block_coords, cfg.radius, cfg.gamma, false));
}

KernelGraph build_uniform_graph(const TermLibrary& lib, double radius) {
  if (radius <= 0) throw ArgumentError("radius must be positive");
  return graph_from_triplets(
      lib, neighbor_pairs(lib.block_coords, radius, 1.0, true));
}

Eigen::MatrixXd smooth_parameters(const KernelGraph& graph,
                                  const Eigen::MatrixXd& W) {
  if (W.rows() != graph.n_blocks)
    throw ArgumentError("parameter row count does not match graph");
  return graph.norm * W;
}

int CoefficientField::term_column(const std::string& name) const {
  for (std::size_t i = 0; i < term_names.size(); ++i)
    if (term_names[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

struct NormalSystem {
  // per-block Gram matrices and right-hand sides of the data term
  std::vector<Eigen::MatrixXd> gram;  // B x (p_a x p_a)
  Eigen::MatrixXd rhs_blocks;         // B x p_a, rows r_c
  double const_term = 0.0;            // sum y^2 (+ recon constant)
};

NormalSystem assemble(const TermLibrary& lib, const std::vector<int>& active,
                      const KernelConfig& cfg,
                      const ReconstructionSpec& recon) {
  const int B = lib.n_blocks;
  const int pa = static_cast<int>(active.size());
  NormalSystem sys;
  sys.gram.assign(B, Eigen::MatrixXd::Zero(pa, pa));
  sys.rhs_blocks = Eigen::MatrixXd::Zero(B, pa);

  const auto n = lib.sample_count();
  Eigen::VectorXd xrow(pa);
  for (std::size_t j = 0; j < n; ++j) {
    const int b = lib.block_index[j];
    for (int i = 0; i < pa; ++i)
      xrow(i) = lib.design(static_cast<Eigen::Index>(j), active[i]);
    const double yj = lib.target(static_cast<Eigen::Index>(j));
    sys.gram[b].selfadjointView<Eigen::Lower>().rankUpdate(xrow, 1.0);
    sys.rhs_blocks.row(b) += yj * xrow.transpose();
    sys.const_term += yj * yj;
  }
  for (auto& g : sys.gram)
    g.triangularView<Eigen::StrictlyUpper>() =
        g.transpose().triangularView<Eigen::StrictlyUpper>();

  if (recon.enabled) {
    double dt = recon.dt;
    if (dt <= 0) {
      if (!lib.grid) throw ArgumentError("reconstruction needs grid metadata");
      dt = lib.grid->dt;
    }
    // pair each sample with the one at the same location, one slice later
    std::map<std::tuple<double, double, double>, std::size_t> at;
    for (std::size_t j = 0; j < n; ++j)
      at[{lib.x[j], lib.y.empty() ? 0.0 : lib.y[j], lib.t[j]}] = j;
    const double b2 = cfg.beta;
    for (std::size_t j = 0; j < n; ++j) {
      auto it = at.find({lib.x[j], lib.y.empty() ? 0.0 : lib.y[j],
                         lib.t[j] + dt});
      if (it == at.end()) continue;
      const std::size_t jn = it->second;
      const double du = lib.target_field[jn] - lib.target_field[j];
      const int b = lib.block_index[j];
      for (int i = 0; i < pa; ++i)
        xrow(i) = lib.design(static_cast<Eigen::Index>(j), active[i]);
      sys.gram[b] += b2 * dt * dt * (xrow * xrow.transpose());
      sys.rhs_blocks.row(b) += b2 * dt * du * xrow.transpose();
      sys.const_term += b2 * du * du;
    }
  }
  return sys;
}

}  // namespace

CoefficientField fit(const TermLibrary& lib, const KernelGraph& graph,
                     const std::vector<int>& active, const KernelConfig& cfg,
                     const ReconstructionSpec& recon,
                     const Eigen::MatrixXd* warm_start) {
  if (active.empty()) throw ArgumentError("active term set is empty");
  if (graph.n_blocks != lib.n_blocks)
    throw ArgumentError("graph block count does not match library");
  for (int a : active)
    if (a < 0 || a >= static_cast<int>(lib.term_count()))
      throw ArgumentError("active term index out of range");
  if (!lib.design.allFinite() || !lib.target.allFinite())
    throw ValidationError("non-finite input to fit");

  const int B = graph.n_blocks;
  const int pa = static_cast<int>(active.size());
  NormalSystem sys = assemble(lib, active, cfg, recon);

  const SpMat& A = graph.norm;
  const SpMat At = SpMat(A.transpose());

  auto normal_op = [&](const Eigen::MatrixXd& W) {
    Eigen::MatrixXd Xi = A * W;  // B x pa
    Eigen::MatrixXd H(B, pa);
    for (int c = 0; c < B; ++c) H.row(c) = (sys.gram[c] * Xi.row(c).transpose()).transpose();
    Eigen::MatrixXd out = At * H;
    out += cfg.ridge * W;
    return out;
  };

  const Eigen::MatrixXd rhs = At * sys.rhs_blocks;  // B x pa
  Eigen::MatrixXd W;
  FitDiagnostics diag;

  const long unknowns = static_cast<long>(B) * pa;
  if (unknowns <= cfg.dense_threshold) {
    // direct assembly of the normal matrix; unknown (b,i) -> b*pa + i
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(unknowns, unknowns);
    for (int c = 0; c < B; ++c) {
      for (SpMat::InnerIterator it1(A, c); it1; ++it1)
        for (SpMat::InnerIterator it2(A, c); it2; ++it2)
          N.block(it1.col() * pa, it2.col() * pa, pa, pa) +=
              it1.value() * it2.value() * sys.gram[c];
    }
    N.diagonal().array() += cfg.ridge;
    Eigen::VectorXd bvec(unknowns);
    for (int b = 0; b < B; ++b) bvec.segment(b * pa, pa) = rhs.row(b).transpose();
    Eigen::VectorXd sol = N.ldlt().solve(bvec);
    W.resize(B, pa);
    for (int b = 0; b < B; ++b) W.row(b) = sol.segment(b * pa, pa).transpose();
    diag.used_dense = true;
  } else {
    // Block-Jacobi-preconditioned CG on the normal equations. Sparse blocks
    // hold few samples, so each per-block Gram is nearly rank-deficient and
    // a scalar diagonal preconditioner leaves the system too ill-conditioned.
    std::vector<Eigen::LDLT<Eigen::MatrixXd>> prec;
    {
      std::vector<Eigen::MatrixXd> Nb(B, Eigen::MatrixXd::Zero(pa, pa));
      for (int c = 0; c < B; ++c)
        for (SpMat::InnerIterator it(A, c); it; ++it)
          Nb[static_cast<std::size_t>(it.col())] +=
              it.value() * it.value() * sys.gram[c];
      prec.reserve(B);
      for (int b = 0; b < B; ++b) {
        Nb[b].diagonal().array() += cfg.ridge;
        prec.emplace_back(Nb[b].ldlt());
      }
    }
    auto apply_prec = [&](const Eigen::MatrixXd& R) {
      Eigen::MatrixXd Z(B, pa);
      for (int b = 0; b < B; ++b)
        Z.row(b) = prec[b].solve(R.row(b).transpose()).transpose();
      return Z;
    };

    W = (warm_start && warm_start->rows() == B && warm_start->cols() == pa)
            ? *warm_start
            : Eigen::MatrixXd::Zero(B, pa);
    Eigen::MatrixXd NW = normal_op(W);
    Eigen::MatrixXd R = rhs - NW;
    // phi = 1/2 <W,NW> - <b,W>; objective = const + 2 phi
    double phi = 0.5 * (W.cwiseProduct(NW)).sum() - (W.cwiseProduct(rhs)).sum();
    diag.objective_trace.push_back(sys.const_term + 2.0 * phi);

    Eigen::MatrixXd Z = apply_prec(R);
    Eigen::MatrixXd P = Z;
    double rz = (R.cwiseProduct(Z)).sum();
    const double bnorm = std::max(rhs.norm(), 1e-300);
    int it = 0;
    for (; it < cfg.solver_max_iter; ++it) {
      if (R.norm() / bnorm <= cfg.solver_tol) break;
      Eigen::MatrixXd NP = normal_op(P);
      double alpha = rz / (P.cwiseProduct(NP)).sum();
      W += alpha * P;
      R -= alpha * NP;
      phi -= 0.5 * alpha * rz;
      diag.objective_trace.push_back(sys.const_term + 2.0 * phi);
      Eigen::MatrixXd Znew = apply_prec(R);
      double rz_new = (R.cwiseProduct(Znew)).sum();
      P = Znew + (rz_new / rz) * P;
      Z = Znew;
      rz = rz_new;
    }
    diag.iterations = it;
    const double relres = R.norm() / bnorm;
    diag.converged = relres <= cfg.solver_tol;
    if (relres > std::max(cfg.solver_tol * 1e4, 1e-5))
      throw SolverError("kernel fit did not converge (relative residual " +
                            std::to_string(relres) + ")",
                        relres);
  }

  CoefficientField out;
  out.active = active;
  for (int a : active) out.term_names.push_back(lib.terms[a].name);
  out.W = W;
  out.Xi = A * W;
  out.block_coords = graph.block_coords;

  // residual on the fitted samples
  double rss = 0.0;
  const auto n = lib.sample_count();
  for (std::size_t j = 0; j < n; ++j) {
    const int b = lib.block_index[j];
    double pred = 0.0;
    for (int i = 0; i < pa; ++i)
      pred += lib.design(static_cast<Eigen::Index>(j), active[i]) * out.Xi(b, i);
    const double r = lib.target(static_cast<Eigen::Index>(j)) - pred;
    rss += r * r;
  }
  diag.rss = rss;
  diag.objective = rss + cfg.ridge * W.squaredNorm();
  out.diag = diag;
  return out;
}

std::vector<double> predict(const CoefficientField& field,
                            const TermLibrary& lib) {
  const int pa = static_cast<int>(field.active.size());
  // map field terms into this library (it may be a different split)
  std::vector<int> cols(pa);
  for (int i = 0; i < pa; ++i) {
    cols[i] = lib.term_index(field.term_names[i]);
    if (cols[i] < 0)
      throw ArgumentError("library lacks term '" + field.term_names[i] + "'");
  }
  std::map<std::pair<double, double>, int> where;
  for (int b = 0; b < static_cast<int>(field.block_coords.size()); ++b)
    where[{field.block_coords[b][0], field.block_coords[b][1]}] = b;
  auto find_block = [&](double bx, double by) {
    auto it = where.find({bx, by});
    if (it != where.end()) return it->second;
    // fall back to the nearest block: other splits may contain locations the
    // fitted split never sampled
    int best = -1;
    double bestd = std::numeric_limits<double>::infinity();
    for (const auto& [k, v] : where) {
      double d = (k.first - bx) * (k.first - bx) + (k.second - by) * (k.second - by);
      if (d < bestd) {
        bestd = d;
        best = v;
      }
    }
    if (best < 0)
      throw ArgumentError("sample block missing from coefficient field");
    return best;
  };
  std::vector<int> remap(lib.n_blocks);
  for (int b = 0; b < lib.n_blocks; ++b)
    remap[b] = find_block(lib.block_coords[b][0], lib.block_coords[b][1]);

  const auto n = lib.sample_count();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const int fb = remap[lib.block_index[j]];
    double pred = 0.0;
    for (int i = 0; i < pa; ++i)
      pred += lib.design(static_cast<Eigen::Index>(j), cols[i]) * field.Xi(fb, i);
    out[j] = pred;
  }
  return out;
}

}  // namespace pdekd
