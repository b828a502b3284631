#pragma once

// Uniform cell-centered grid over a domain's bounding box. Cells whose
// centers are strictly interior are "active"; fields live on active cells.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mprt/base.hpp"
#include "mprt/geometry.hpp"

namespace mprt {

class SpatialGrid {
 public:
  SpatialGrid(Domain dom, double h) : dom_(dom), h_(h) {
    require(h > 0.0, "grid spacing must be positive");
    nx_ = static_cast<int>(std::ceil(2.0 * dom.half_x() / h - 1e-9));
    ny_ = static_cast<int>(std::ceil(2.0 * dom.half_y() / h - 1e-9));
    require(nx_ >= 1 && ny_ >= 1, "grid spacing exceeds the domain");
    x0_ = -0.5 * nx_ * h;
    y0_ = -0.5 * ny_ * h;

    cell_.assign(static_cast<size_t>(nx_) * ny_, -1);
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        Vec2 c = center_of(i, j);
        if (dom_.contains(c)) {
          cell_[flat(i, j)] = static_cast<int>(ci_.size());
          ci_.push_back(i);
          cj_.push_back(j);
        }
      }
    }
    require(!ci_.empty(), "grid has no interior cell centers");

    bdist_.resize(n_active());
    for (int a = 0; a < n_active(); ++a) bdist_[a] = dom_.boundary_distance(center(a));

    build_nearest();
  }

  const Domain& domain() const { return dom_; }
  double h() const { return h_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int n_active() const { return static_cast<int>(ci_.size()); }
  double active_area() const { return n_active() * h_ * h_; }

  // -1 when the cell center falls outside the domain.
  int cell_at(int i, int j) const {
    if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return -1;
    return cell_[flat(i, j)];
  }

  int active_i(int a) const { return ci_[a]; }
  int active_j(int a) const { return cj_[a]; }
  Vec2 center(int a) const { return center_of(ci_[a], cj_[a]); }
  Vec2 center_of(int i, int j) const { return {x0_ + (i + 0.5) * h_, y0_ + (j + 0.5) * h_}; }
  double boundary_dist(int a) const { return bdist_[a]; }

  // Active index of the nearest active cell, defined for every full-grid
  // cell. Ties break toward the smaller active index, so the map is
  // reproducible.
  int nearest_active(int i, int j) const { return nearest_[flat(i, j)]; }

  // Writes active-cell values into a full nx*ny buffer, inactive cells
  // taking the value of their nearest active neighbor. Ray samplers read
  // this extended buffer so integrands stay defined up to the boundary.
  void scatter_extended(const double* vals, std::vector<double>& full) const {
    full.resize(cell_.size());
    for (size_t f = 0; f < full.size(); ++f) full[f] = vals[nearest_[f]];
  }

  // Bilinear interpolation on the extended buffer with indices clamped to
  // the box, degrading to nearest-cell at the rim.
  double bilinear(const std::vector<double>& full, Vec2 p) const {
    double fx = (p.x - x0_) / h_ - 0.5;
    double fy = (p.y - y0_) / h_ - 0.5;
    double bx = std::floor(fx), by = std::floor(fy);
    double tx = std::clamp(fx - bx, 0.0, 1.0);
    double ty = std::clamp(fy - by, 0.0, 1.0);
    int i0 = std::clamp(static_cast<int>(bx), 0, nx_ - 1);
    int j0 = std::clamp(static_cast<int>(by), 0, ny_ - 1);
    int i1 = std::min(i0 + 1, nx_ - 1);
    int j1 = std::min(j0 + 1, ny_ - 1);
    double v00 = full[flat(i0, j0)], v10 = full[flat(i1, j0)];
    double v01 = full[flat(i0, j1)], v11 = full[flat(i1, j1)];
    return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11);
  }

 private:
  size_t flat(int i, int j) const { return static_cast<size_t>(j) * nx_ + i; }

  void build_nearest() {
    nearest_.assign(cell_.size(), -1);
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        int a = cell_[flat(i, j)];
        if (a >= 0) {
          nearest_[flat(i, j)] = a;
          continue;
        }
        int best = -1;
        long best_d2 = 0;
        int rmax = nx_ + ny_;
        for (int r = 1; r <= rmax; ++r) {
          for (int dj = -r; dj <= r; ++dj) {
            for (int di = -r; di <= r; ++di) {
              if (std::max(std::abs(di), std::abs(dj)) != r) continue;
              int c = cell_at(i + di, j + dj);
              if (c < 0) continue;
              long d2 = static_cast<long>(di) * di + static_cast<long>(dj) * dj;
              if (best < 0 || d2 < best_d2 || (d2 == best_d2 && c < best)) {
                best = c;
                best_d2 = d2;
              }
            }
          }
          // Cells on ring r+1 sit at squared distance >= (r+1)^2, so once
          // that bound cannot beat the incumbent the search is complete.
          if (best >= 0 && static_cast<long>(r + 1) * (r + 1) >= best_d2) break;
        }
        nearest_[flat(i, j)] = best;
      }
    }
  }

  Domain dom_;
  double h_, x0_, y0_;
  int nx_, ny_;
  std::vector<int> cell_;     // full grid -> active index or -1
  std::vector<int> ci_, cj_;  // active index -> full coordinates
  std::vector<int> nearest_;
  std::vector<double> bdist_;
};

}  // namespace mprt
