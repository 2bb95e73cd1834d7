#include "pdekd/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "pdekd/errors.hpp"

namespace pdekd {

namespace {

std::set<std::string> canonical_set(const std::vector<std::string>& names) {
  std::set<std::string> out;
  for (const auto& n : names) out.insert(canonical_term_name(n));
  return out;
}

std::string safe_filename(std::string s) {
  for (char& c : s) {
    if (c == '*') c = '.';
    else if (c == '^') c = 'p';
    else if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' &&
             c != '.')
      c = '_';
  }
  return s;
}

void write_grid_csv(const std::string& path, const Eigen::MatrixXd& grid) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  char buf[32];
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", grid(r, c));
      os << (c ? "," : "") << buf;
    }
    os << "\n";
  }
}

void write_heatmap_svg(const std::string& path, const Eigen::MatrixXd& grid) {
  const int nx = static_cast<int>(grid.cols());
  const int ny = static_cast<int>(grid.rows());
  const int cell = 8;
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  const double lo = grid.minCoeff();
  const double hi = grid.maxCoeff();
  const double span = (hi > lo) ? hi - lo : 1.0;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << nx * cell
     << "\" height=\"" << ny * cell << "\">\n";
  for (int r = 0; r < ny; ++r) {
    for (int c = 0; c < nx; ++c) {
      const double v = (grid(r, c) - lo) / span;  // 0..1
      // blue -> white -> red ramp
      int red, green, blue;
      if (v < 0.5) {
        red = static_cast<int>(510 * v);
        green = red;
        blue = 255;
      } else {
        red = 255;
        green = static_cast<int>(510 * (1.0 - v));
        blue = green;
      }
      char color[8];
      std::snprintf(color, sizeof color, "#%02x%02x%02x", red, green, blue);
      os << "<rect x=\"" << c * cell << "\" y=\"" << r * cell << "\" width=\""
         << cell << "\" height=\"" << cell << "\" fill=\"" << color
         << "\"/>\n";
    }
  }
  os << "</svg>\n";
}

}  // namespace

double recall(const std::vector<std::string>& discovered,
              const std::vector<std::string>& truth) {
  if (truth.empty()) throw ArgumentError("recall needs a nonempty truth set");
  auto d = canonical_set(discovered);
  auto t = canonical_set(truth);
  std::size_t hit = 0;
  for (const auto& n : t) hit += d.count(n);
  return 100.0 * static_cast<double>(hit) / static_cast<double>(t.size());
}

double precision(const std::vector<std::string>& discovered,
                 const std::vector<std::string>& truth) {
  auto d = canonical_set(discovered);
  if (d.empty()) return 0.0;
  auto t = canonical_set(truth);
  std::size_t hit = 0;
  for (const auto& n : d) hit += t.count(n);
  return 100.0 * static_cast<double>(hit) / static_cast<double>(d.size());
}

double coefficient_error(const CoefficientField& field,
                         const GroundTruth& truth, CoefErrorKind kind,
                         std::vector<std::string>* warnings) {
  const int B = static_cast<int>(field.block_coords.size());
  if (B == 0) throw ArgumentError("coefficient field has no blocks");

  // canonical truth-term lookup
  std::vector<std::string> truth_canon;
  for (const auto& n : truth.terms) truth_canon.push_back(canonical_term_name(n));

  double acc = 0.0;
  std::size_t used_terms = 0;
  std::size_t mae_cells = 0;

  auto term_error = [&](const Eigen::VectorXd& est, std::size_t truth_idx,
                        bool has_truth) {
    double abs_sum = 0.0, truth_sum = 0.0;
    for (int b = 0; b < B; ++b) {
      const double xi = has_truth
                            ? truth.value_at(truth_idx, field.block_coords[b][0],
                                             field.block_coords[b][1])
                            : 0.0;
      abs_sum += std::abs(est(b) - xi);
      truth_sum += std::abs(xi);
    }
    if (kind == CoefErrorKind::mae) {
      acc += abs_sum;
      mae_cells += static_cast<std::size_t>(B);
      ++used_terms;
    } else {
      if (truth_sum <= 0.0) {
        if (warnings)
          warnings->push_back("relative error skips zero-coefficient term");
        return;
      }
      acc += abs_sum / truth_sum;
      ++used_terms;
    }
  };

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(B);
  std::set<std::string> seen;
  for (std::size_t ti = 0; ti < truth.terms.size(); ++ti) {
    int col = -1;
    for (std::size_t fi = 0; fi < field.term_names.size(); ++fi)
      if (canonical_term_name(field.term_names[fi]) == truth_canon[ti]) {
        col = static_cast<int>(fi);
        break;
      }
    seen.insert(truth_canon[ti]);
    term_error(col >= 0 ? field.Xi.col(col) : zero, ti, true);
  }
  // extra discovered terms count against a zero truth field
  for (std::size_t fi = 0; fi < field.term_names.size(); ++fi)
    if (!seen.count(canonical_term_name(field.term_names[fi])))
      term_error(field.Xi.col(static_cast<Eigen::Index>(fi)), 0, false);

  if (kind == CoefErrorKind::mae)
    return mae_cells ? acc / static_cast<double>(mae_cells) : 0.0;
  return used_terms ? acc / static_cast<double>(used_terms) : 0.0;
}

double fitting_error(const CoefficientField& field, const TermLibrary& lib) {
  std::vector<double> pred = predict(field, lib);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < lib.target.size(); ++i)
    acc += std::abs(lib.target(i) - pred[static_cast<std::size_t>(i)]);
  return acc / static_cast<double>(lib.target.size());
}

void export_residuals(const CoefficientField& field, const GroundTruth& truth,
                      const std::string& path) {
  if (truth.coords.empty())
    throw ArgumentError("export_residuals needs gridded truth coordinates");

  // recover the truth grid layout from its coordinate list
  std::vector<double> xs, ys;
  for (const auto& c : truth.coords) {
    xs.push_back(c[0]);
    ys.push_back(c[1]);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  const int nx = static_cast<int>(xs.size());
  const int ny = static_cast<int>(ys.size());

  auto nearest_block = [&](double x, double y) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < field.block_coords.size(); ++b) {
      double dx = field.block_coords[b][0] - x;
      double dy = field.block_coords[b][1] - y;
      double d = dx * dx + dy * dy;
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(b);
      }
    }
    return best;
  };

  for (std::size_t fi = 0; fi < field.term_names.size(); ++fi) {
    const std::string canon = canonical_term_name(field.term_names[fi]);
    int truth_idx = -1;
    for (std::size_t ti = 0; ti < truth.terms.size(); ++ti)
      if (canonical_term_name(truth.terms[ti]) == canon) {
        truth_idx = static_cast<int>(ti);
        break;
      }

    Eigen::MatrixXd tg(ny, nx), eg(ny, nx), rg(ny, nx);
    for (int r = 0; r < ny; ++r)
      for (int c = 0; c < nx; ++c) {
        const double tv =
            truth_idx >= 0
                ? truth.value_at(static_cast<std::size_t>(truth_idx), xs[c],
                                 ys[r])
                : 0.0;
        const double ev =
            field.Xi(nearest_block(xs[c], ys[r]), static_cast<Eigen::Index>(fi));
        tg(r, c) = tv;
        eg(r, c) = ev;
        rg(r, c) = std::abs(tv - ev);
      }

    const std::string stem = path + "_" + safe_filename(field.term_names[fi]);
    write_grid_csv(stem + "_truth.csv", tg);
    write_grid_csv(stem + "_estimate.csv", eg);
    write_grid_csv(stem + "_residual.csv", rg);
    write_heatmap_svg(stem + "_truth.svg", tg);
    write_heatmap_svg(stem + "_estimate.svg", eg);
    write_heatmap_svg(stem + "_residual.svg", rg);
  }
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["recall"] = recall;
  j["precision"] = precision;
  j["coef_mae"] = coef_mae;
  j["coef_rel"] = coef_rel;
  j["fit_train"] = fit_train;
  j["fit_dev"] = fit_dev;
  j["fit_test"] = fit_test;
  if (!warnings.empty()) j["warnings"] = warnings;
  return j.dump(2);
}

}  // namespace pdekd
