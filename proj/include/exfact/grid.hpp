#pragma once

// Tensor-product grids, discrete fields and the finite-difference operators
// every other module is built on.
//
// Cartesian axes are vertex centred: the two end nodes carry trapezoidal
// half weights and act as the Dirichlet layer (values there are treated as
// zero by the projected operators). Radial axes are cell centred on
// [0, upper]: point i sits at (i + 1/2) h, weights are exact shell volumes
// s^{d-1} ds, the inner face at s = 0 has zero area and a zero ghost value
// sits one half-cell beyond the outer face.

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "exfact/error.hpp"

namespace exfact {

using cplx = std::complex<double>;

enum class AxisLabel { electronic, nuclear };
enum class AxisKind { cartesian, radial };

struct AxisSpec {
  AxisLabel label = AxisLabel::electronic;
  double lower = 0.0;
  double upper = 1.0;
  std::size_t count = 3;
  AxisKind kind = AxisKind::cartesian;
  int radial_dimension = 3;  // ambient dimension d of a radial axis

  bool operator==(const AxisSpec&) const = default;
};

AxisSpec cartesian_axis(AxisLabel label, double lower, double upper, std::size_t count);
AxisSpec radial_axis(AxisLabel label, double upper, std::size_t cells, int dimension = 3);

struct GridSpec {
  std::vector<AxisSpec> axes;

  bool operator==(const GridSpec&) const = default;
};

class Axis {
 public:
  explicit Axis(const AxisSpec& spec);

  const AxisSpec& spec() const noexcept { return spec_; }
  AxisLabel label() const noexcept { return spec_.label; }
  AxisKind kind() const noexcept { return spec_.kind; }
  std::size_t size() const noexcept { return points_.size(); }
  double spacing() const noexcept { return h_; }
  double point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> points() const noexcept { return points_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double length() const noexcept { return spec_.upper - spec_.lower; }

  /// Dirichlet node: the end nodes of a cartesian axis. Radial axes have none.
  bool is_boundary(std::size_t i) const noexcept {
    return spec_.kind == AxisKind::cartesian && (i == 0 || i + 1 == points_.size());
  }

  /// Area s^{d-1} of radial face f (face f sits at s = f h, f = 0..size()).
  double face_area(std::size_t face) const;

 private:
  AxisSpec spec_;
  double h_ = 0.0;
  std::vector<double> points_;
  std::vector<double> weights_;
};

class Grid {
 public:
  explicit Grid(GridSpec spec);

  const GridSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t rank() const noexcept { return axes_.size(); }
  const Axis& axis(std::size_t k) const { return axes_[k]; }
  std::size_t stride(std::size_t k) const { return strides_[k]; }

  std::size_t index_along(std::size_t flat, std::size_t k) const {
    return (flat / strides_[k]) % axes_[k].size();
  }
  double coordinate(std::size_t flat, std::size_t k) const {
    return axes_[k].point(index_along(flat, k));
  }
  double weight(std::size_t flat) const { return weights_[flat]; }
  std::span<const double> weights() const noexcept { return weights_; }

  /// True when the node lies on the Dirichlet layer of any axis.
  bool is_boundary(std::size_t flat) const { return boundary_[flat] != 0; }
  std::size_t interior_count() const noexcept { return interior_count_; }

  double volume() const noexcept { return volume_; }

  bool has(AxisLabel label) const;
  std::vector<std::size_t> axes_with(AxisLabel label) const;

  /// Grid made of the axes carrying `label`, in their original order.
  std::shared_ptr<const Grid> subgrid(AxisLabel label) const;

  /// Flat index of this node on subgrid(label).
  std::size_t project(std::size_t flat, AxisLabel label) const;

  bool operator==(const Grid& other) const { return spec_ == other.spec_; }

 private:
  GridSpec spec_;
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  std::vector<double> weights_;
  std::vector<unsigned char> boundary_;
  std::size_t interior_count_ = 0;
  double volume_ = 0.0;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Builds a grid from its specification; throws ShapeError on invalid axes.
GridPtr build_grid(const GridSpec& spec);

/// Coordinates of one grid node, split by label.
struct Point {
  std::vector<double> coords;
  std::vector<double> r;
  std::vector<double> R;
};

class Field {
 public:
  Field() = default;
  explicit Field(GridPtr grid);
  Field(GridPtr grid, std::vector<cplx> values);

  static Field sample(GridPtr grid, const std::function<cplx(const Point&)>& f);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<cplx> values() noexcept { return values_; }
  std::span<const cplx> values() const noexcept { return values_; }
  cplx& operator[](std::size_t i) { return values_[i]; }
  const cplx& operator[](std::size_t i) const { return values_[i]; }

  bool all_finite() const;
  bool same_grid(const Field& other) const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(cplx s);

 private:
  GridPtr grid_;
  std::vector<cplx> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(cplx s, Field a);

/// Field on a grid made of nuclear axes only.
class NuclearFunction : public Field {
 public:
  NuclearFunction() = default;
  explicit NuclearFunction(Field f);
  explicit NuclearFunction(GridPtr nuclear_grid);
  NuclearFunction(GridPtr nuclear_grid, std::vector<cplx> values);
};

/// Field equal to chi(R) on every fiber of `grid` (which must contain chi's axes).
Field broadcast(const NuclearFunction& chi, const GridPtr& grid);

/// Pointwise product of a field by a nuclear function.
Field multiply(const Field& u, const NuclearFunction& chi);

/// Quadrature-weighted <u, v>, conjugate-linear in u.
cplx inner_product(const Field& u, const Field& v);
double norm(const Field& u);

/// n(R) = (sum_r w_r |psi(r, R)|^2)^{1/2}.
NuclearFunction marginal_norm(const Field& psi);

/// <u(., R), v(., R)>_r for every nuclear node.
NuclearFunction fiber_inner_product(const Field& u, const Field& v);

/// Symmetric inverse-mass matrix G over the grid axes; T = -1/2 sum G_ab d_a d_b.
class InverseMass {
 public:
  explicit InverseMass(std::size_t rank);
  static InverseMass diagonal(std::vector<double> d);

  std::size_t rank() const noexcept { return rank_; }
  double operator()(std::size_t a, std::size_t b) const { return m_[a * rank_ + b]; }
  void set(std::size_t a, std::size_t b, double value);

 private:
  std::size_t rank_;
  std::vector<double> m_;
};

/// Kinetic operator with Dirichlet projection: boundary inputs are treated as
/// zero and boundary outputs are zero, so the operator is exactly symmetric
/// under inner_product.
Field apply_kinetic(const Field& u, const InverseMass& g);

/// Same stencils applied to the raw values (no input projection); output on
/// the Dirichlet layer is zero. Used where derivatives are taken "in the usual
/// sense" of a smooth function.
Field kinetic_stencil(const Field& u, const InverseMass& g);

// Difference operators along one axis, on the raw values.
Field forward_difference(const Field& u, std::size_t axis);
Field backward_difference(const Field& u, std::size_t axis);
/// 3-point second difference (radial axes: flux-form radial Laplacian).
Field second_difference(const Field& u, std::size_t axis);
/// Central mixed difference d_a d_b on nodes interior in both axes.
Field mixed_difference(const Field& u, std::size_t a, std::size_t b);

struct AdjointnessResult {
  double residual = 0.0;  // |<T u, h> - <u, T h>|
  double scale = 0.0;     // ||u|| ||h||
  bool boundary_leak = false;
  bool within_tolerance(double rel = 1e-12) const { return residual <= rel * scale; }
};

/// Discrete shadow of the distributional-derivative identity: T u is the
/// projected operator, T h the usual-sense stencil of the test function.
AdjointnessResult adjointness_residual(const Field& u, const Field& h, const InverseMass& g);

/// Worker threads used by the stencil operators (1 = serial). Results do not
/// depend on the thread count.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs task(0) .. task(n - 1) on up to thread_count() threads. Tasks must
/// write disjoint outputs. The exception of the lowest failing index is rethrown.
void parallel_tasks(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace exfact
