#pragma once

#include <vector>

#include "slipstokes/common.hpp"

namespace slipstokes {

/// Uniform periodic grid on [0,lx) x [0,ly). Node (i,j) sits at (i*dx, j*dy);
/// the right/top edges are identified with the left/bottom ones.
struct Grid2 {
  double lx = 1.0, ly = 1.0;
  int nx = 0, ny = 0;

  Grid2() = default;
  Grid2(double lx_, double ly_, int nx_, int ny_) : lx(lx_), ly(ly_), nx(nx_), ny(ny_) {
    SS_REQUIRE(lx > 0 && ly > 0, "Grid2: extents must be positive (%g, %g)", lx, ly);
    SS_REQUIRE(nx >= 2 && ny >= 2, "Grid2: need at least 2 nodes per direction (%d, %d)", nx, ny);
  }

  double dx() const { return lx / nx; }
  double dy() const { return ly / ny; }
  double x(int i) const { return i * dx(); }
  double y(int j) const { return j * dy(); }
  int npts() const { return nx * ny; }
  int idx(int i, int j) const { return j * nx + i; }
  double cell_area() const { return dx() * dy(); }

  static int wrap(int i, int n) {
    int r = i % n;
    return r < 0 ? r + n : r;
  }
  int idxw(int i, int j) const { return wrap(j, ny) * nx + wrap(i, nx); }

  bool operator==(const Grid2& o) const {
    return lx == o.lx && ly == o.ly && nx == o.nx && ny == o.ny;
  }
};

/// Scalar (rank 0), vector (rank 1) or 2-tensor (rank 2) field sampled on a
/// Grid2. Components are stored as contiguous planes in row-major entry order:
/// rank 1 -> (x, y); rank 2 -> (xx, xy, yx, yy).
class GridField {
 public:
  GridField() = default;
  GridField(const Grid2& g, int rank) : grid_(g), rank_(rank) {
    SS_REQUIRE(rank >= 0 && rank <= 2, "GridField: rank must be 0, 1 or 2 (got %d)", rank);
    ncomp_ = 1;
    for (int r = 0; r < rank; ++r) ncomp_ *= 2;
    data_.assign(static_cast<size_t>(ncomp_) * grid_.npts(), 0.0);
  }

  const Grid2& grid() const { return grid_; }
  int rank() const { return rank_; }
  int ncomp() const { return ncomp_; }
  bool empty() const { return data_.empty(); }

  double& at(int c, int i, int j) { return data_[plane(c) + grid_.idx(i, j)]; }
  double at(int c, int i, int j) const { return data_[plane(c) + grid_.idx(i, j)]; }
  /// Periodic-wrapping accessor.
  double atw(int c, int i, int j) const { return data_[plane(c) + grid_.idxw(i, j)]; }

  double* comp(int c) { return data_.data() + plane(c); }
  const double* comp(int c) const { return data_.data() + plane(c); }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  Vec2 vec_at(int i, int j) const {
    SS_REQUIRE(rank_ == 1, "GridField::vec_at requires rank 1");
    return {at(0, i, j), at(1, i, j)};
  }
  Mat2 mat_at(int i, int j) const {
    SS_REQUIRE(rank_ == 2, "GridField::mat_at requires rank 2");
    return {at(0, i, j), at(1, i, j), at(2, i, j), at(3, i, j)};
  }
  void set_vec(int i, int j, Vec2 v) {
    at(0, i, j) = v.x;
    at(1, i, j) = v.y;
  }
  void set_mat(int i, int j, const Mat2& m) {
    at(0, i, j) = m.a;
    at(1, i, j) = m.b;
    at(2, i, j) = m.c;
    at(3, i, j) = m.d;
  }

  GridField& operator+=(const GridField& o) {
    check_compatible(o);
    for (size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  GridField& operator-=(const GridField& o) {
    check_compatible(o);
    for (size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  GridField& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }
  /// this += s * o
  void axpy(double s, const GridField& o) {
    check_compatible(o);
    for (size_t k = 0; k < data_.size(); ++k) data_[k] += s * o.data_[k];
  }

 private:
  size_t plane(int c) const { return static_cast<size_t>(c) * grid_.npts(); }
  void check_compatible(const GridField& o) const {
    SS_REQUIRE(grid_ == o.grid_ && rank_ == o.rank_,
               "GridField: incompatible operands (rank %d vs %d, %dx%d vs %dx%d)",
               rank_, o.rank_, grid_.nx, grid_.ny, o.grid_.nx, o.grid_.ny);
  }

  Grid2 grid_;
  int rank_ = 0;
  int ncomp_ = 1;
  std::vector<double> data_;
};

template <class F>
GridField sample_scalar(const Grid2& g, F&& f) {
  GridField out(g, 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.at(0, i, j) = f(g.x(i), g.y(j));
  return out;
}

template <class F>
GridField sample_vector(const Grid2& g, F&& f) {
  GridField out(g, 1);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.set_vec(i, j, f(g.x(i), g.y(j)));
  return out;
}

template <class F>
GridField sample_tensor(const Grid2& g, F&& f) {
  GridField out(g, 2);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.set_mat(i, j, f(g.x(i), g.y(j)));
  return out;
}

/// max_c max_(i,j) |f|
double max_abs(const GridField& f);
/// Cell-weighted l2 norm over all components: sqrt(sum f^2 * dx*dy).
double l2_norm(const GridField& f);
/// Mean of one component over the box.
double mean(const GridField& f, int c = 0);

/// Bicubic convolution interpolation (Keys kernel, a = -1/2) of one component
/// at an arbitrary point, with periodic wrap. Third-order accurate for smooth
/// data and exact at grid nodes.
double interp_bicubic(const GridField& f, int c, double x, double y);

/// Extract a single component as a rank-0 field.
GridField component(const GridField& f, int c);

}  // namespace slipstokes
