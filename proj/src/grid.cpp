#include "exfact/grid.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <string>
#include <thread>

namespace exfact {

namespace {

std::atomic<unsigned> g_threads{1};

// Runs body(begin, end) over [0, n) in contiguous chunks. Each output element
// is computed by exactly one chunk, so the result is independent of the split.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const unsigned threads = std::min<unsigned>(g_threads.load(), static_cast<unsigned>(n / 4096 + 1));
  if (threads <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
}

void require_same_grid(const Field& u, const Field& v, const char* what) {
  if (!u.grid_ptr() || !v.grid_ptr() || !u.same_grid(v)) {
    throw ShapeError(std::string(what) + ": fields live on different grids");
  }
}

const char* label_name(AxisLabel l) { return l == AxisLabel::electronic ? "r" : "R"; }

}  // namespace

void set_thread_count(unsigned n) { g_threads.store(std::max(1u, n)); }
unsigned thread_count() { return g_threads.load(); }

void parallel_tasks(std::size_t n, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const unsigned threads = std::min<unsigned>(g_threads.load(), static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

AxisSpec cartesian_axis(AxisLabel label, double lower, double upper, std::size_t count) {
  return AxisSpec{label, lower, upper, count, AxisKind::cartesian, 1};
}

AxisSpec radial_axis(AxisLabel label, double upper, std::size_t cells, int dimension) {
  return AxisSpec{label, 0.0, upper, cells, AxisKind::radial, dimension};
}

// ---------------------------------------------------------------------------
// Axis

Axis::Axis(const AxisSpec& spec) : spec_(spec) {
  const std::string name = label_name(spec.label);
  if (spec.count < 3) throw ShapeError("axis " + name + ": point count must be >= 3");
  if (!(spec.upper > spec.lower)) throw ShapeError("axis " + name + ": upper bound must exceed lower bound");
  if (!std::isfinite(spec.lower) || !std::isfinite(spec.upper)) throw ShapeError("axis " + name + ": non-finite bounds");
  const std::size_t n = spec.count;
  points_.resize(n);
  weights_.resize(n);
  if (spec.kind == AxisKind::cartesian) {
    h_ = (spec.upper - spec.lower) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      points_[i] = spec.lower + static_cast<double>(i) * h_;
      weights_[i] = (i == 0 || i + 1 == n) ? 0.5 * h_ : h_;
    }
    points_[n - 1] = spec.upper;
  } else {
    if (spec.lower != 0.0) throw ShapeError("radial axis " + name + ": lower bound must be 0");
    if (spec.radial_dimension < 1) throw ShapeError("radial axis " + name + ": dimension must be >= 1");
    h_ = spec.upper / static_cast<double>(n);
    const double d = spec.radial_dimension;
    for (std::size_t i = 0; i < n; ++i) {
      points_[i] = (static_cast<double>(i) + 0.5) * h_;
      const double a = static_cast<double>(i) * h_;
      const double b = static_cast<double>(i + 1) * h_;
      weights_[i] = (std::pow(b, d) - std::pow(a, d)) / d;
    }
  }
}

double Axis::face_area(std::size_t face) const {
  if (spec_.kind != AxisKind::radial) return 1.0;
  if (spec_.radial_dimension == 1) return 1.0;
  return std::pow(static_cast<double>(face) * h_, spec_.radial_dimension - 1);
}

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(GridSpec spec) : spec_(std::move(spec)) {
  if (spec_.axes.empty()) throw ShapeError("grid needs at least one axis");
  axes_.reserve(spec_.axes.size());
  for (const auto& a : spec_.axes) axes_.emplace_back(a);
  const std::size_t k = axes_.size();
  strides_.assign(k, 1);
  for (std::size_t a = k - 1; a > 0; --a) strides_[a - 1] = strides_[a] * axes_[a].size();
  size_ = strides_[0] * axes_[0].size();

  weights_.assign(size_, 1.0);
  boundary_.assign(size_, 0);
  for (std::size_t flat = 0; flat < size_; ++flat) {
    double w = 1.0;
    bool b = false;
    for (std::size_t a = 0; a < k; ++a) {
      const std::size_t i = index_along(flat, a);
      w *= axes_[a].weight(i);
      b = b || axes_[a].is_boundary(i);
    }
    weights_[flat] = w;
    boundary_[flat] = b ? 1 : 0;
    if (!b) ++interior_count_;
  }
  volume_ = 1.0;
  for (const auto& a : axes_) {
    if (a.kind() == AxisKind::cartesian) {
      volume_ *= a.length();
    } else {
      volume_ *= std::pow(a.spec().upper, a.spec().radial_dimension) / a.spec().radial_dimension;
    }
  }
}

bool Grid::has(AxisLabel label) const {
  return std::any_of(axes_.begin(), axes_.end(), [label](const Axis& a) { return a.label() == label; });
}

std::vector<std::size_t> Grid::axes_with(AxisLabel label) const {
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    if (axes_[a].label() == label) out.push_back(a);
  }
  return out;
}

std::shared_ptr<const Grid> Grid::subgrid(AxisLabel label) const {
  GridSpec sub;
  for (const auto& a : spec_.axes) {
    if (a.label == label) sub.axes.push_back(a);
  }
  if (sub.axes.empty()) throw ShapeError(std::string("grid has no ") + label_name(label) + " axes");
  return std::make_shared<const Grid>(std::move(sub));
}

std::size_t Grid::project(std::size_t flat, AxisLabel label) const {
  std::size_t out = 0;
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    if (axes_[a].label() != label) continue;
    out = out * axes_[a].size() + index_along(flat, a);
  }
  return out;
}

GridPtr build_grid(const GridSpec& spec) { return std::make_shared<const Grid>(spec); }

// ---------------------------------------------------------------------------
// Field

Field::Field(GridPtr grid) : grid_(std::move(grid)) {
  if (!grid_) throw ShapeError("field needs a grid");
  values_.assign(grid_->size(), cplx{});
}

Field::Field(GridPtr grid, std::vector<cplx> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw ShapeError("field needs a grid");
  if (values_.size() != grid_->size()) throw ShapeError("field length does not match grid point count");
}

Field Field::sample(GridPtr grid, const std::function<cplx(const Point&)>& f) {
  Field out(grid);
  const Grid& g = *grid;
  Point p;
  p.coords.resize(g.rank());
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    p.r.clear();
    p.R.clear();
    for (std::size_t a = 0; a < g.rank(); ++a) {
      const double x = g.coordinate(flat, a);
      p.coords[a] = x;
      (g.axis(a).label() == AxisLabel::electronic ? p.r : p.R).push_back(x);
    }
    out.values_[flat] = f(p);
  }
  return out;
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

bool Field::same_grid(const Field& other) const {
  return grid_ == other.grid_ || (grid_ && other.grid_ && *grid_ == *other.grid_);
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(cplx s) {
  for (auto& v : values_) v *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(cplx s, Field a) { return a *= s; }

NuclearFunction::NuclearFunction(Field f) : Field(std::move(f)) {
  for (std::size_t a = 0; a < grid().rank(); ++a) {
    if (grid().axis(a).label() != AxisLabel::nuclear) throw ShapeError("nuclear function on a grid with r axes");
  }
}

NuclearFunction::NuclearFunction(GridPtr nuclear_grid) : NuclearFunction(Field(std::move(nuclear_grid))) {}

NuclearFunction::NuclearFunction(GridPtr nuclear_grid, std::vector<cplx> values)
    : NuclearFunction(Field(std::move(nuclear_grid), std::move(values))) {}

Field broadcast(const NuclearFunction& chi, const GridPtr& grid) {
  if (!(*grid->subgrid(AxisLabel::nuclear) == chi.grid())) throw ShapeError("broadcast: nuclear grids differ");
  Field out(grid);
  for (std::size_t flat = 0; flat < grid->size(); ++flat) out[flat] = chi[grid->project(flat, AxisLabel::nuclear)];
  return out;
}

Field multiply(const Field& u, const NuclearFunction& chi) {
  const Grid& g = u.grid();
  if (!(*g.subgrid(AxisLabel::nuclear) == chi.grid())) throw ShapeError("multiply: nuclear grids differ");
  Field out(u.grid_ptr());
  for (std::size_t flat = 0; flat < g.size(); ++flat) out[flat] = u[flat] * chi[g.project(flat, AxisLabel::nuclear)];
  return out;
}

cplx inner_product(const Field& u, const Field& v) {
  require_same_grid(u, v, "inner_product");
  const auto w = u.grid().weights();
  cplx s{};
  for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * std::conj(u[i]) * v[i];
  return s;
}

double norm(const Field& u) {
  const auto w = u.grid().weights();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * std::norm(u[i]);
  return std::sqrt(s);
}

namespace {

// Product of the weights of the axes carrying `label` at this node.
double partial_weight(const Grid& g, std::size_t flat, AxisLabel label) {
  double w = 1.0;
  for (std::size_t a = 0; a < g.rank(); ++a) {
    if (g.axis(a).label() == label) w *= g.axis(a).weight(g.index_along(flat, a));
  }
  return w;
}

}  // namespace

NuclearFunction fiber_inner_product(const Field& u, const Field& v) {
  require_same_grid(u, v, "fiber_inner_product");
  const Grid& g = u.grid();
  if (!g.has(AxisLabel::electronic) || !g.has(AxisLabel::nuclear)) {
    throw ShapeError("fiber products need both r and R axes");
  }
  NuclearFunction out(g.subgrid(AxisLabel::nuclear));
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    out[g.project(flat, AxisLabel::nuclear)] +=
        partial_weight(g, flat, AxisLabel::electronic) * std::conj(u[flat]) * v[flat];
  }
  return out;
}

NuclearFunction marginal_norm(const Field& psi) {
  NuclearFunction n = fiber_inner_product(psi, psi);
  for (auto& z : n.values()) z = std::sqrt(std::max(0.0, z.real()));
  return n;
}

// ---------------------------------------------------------------------------
// InverseMass

InverseMass::InverseMass(std::size_t rank) : rank_(rank), m_(rank * rank, 0.0) {}

InverseMass InverseMass::diagonal(std::vector<double> d) {
  InverseMass g(d.size());
  for (std::size_t a = 0; a < d.size(); ++a) g.m_[a * g.rank_ + a] = d[a];
  return g;
}

void InverseMass::set(std::size_t a, std::size_t b, double value) {
  m_[a * rank_ + b] = value;
  m_[b * rank_ + a] = value;
}

// ---------------------------------------------------------------------------
// Stencils

namespace {

// Radial flux Laplacian at cell i of axis a; ghost value zero past the outer face.
inline cplx radial_laplacian(std::span<const cplx> u, const Axis& ax, std::size_t flat, std::size_t i,
                             std::size_t s) {
  const std::size_t n = ax.size();
  const double h = ax.spacing();
  const cplx ui = u[flat];
  const cplx up = (i + 1 < n) ? u[flat + s] : cplx{};
  cplx flux_in{};
  if (i > 0) {
    flux_in = ax.face_area(i) * (ui - u[flat - s]) / h;
  }  // inner face of cell 0 lies at s = 0: zero flux
  const cplx flux_out = ax.face_area(i + 1) * (up - ui) / h;
  return (flux_out - flux_in) / ax.weight(i);
}

Field apply_stencil(const Field& u, const InverseMass& g, bool project_input) {
  const Grid& grid = u.grid();
  if (g.rank() != grid.rank()) throw ShapeError("inverse-mass rank does not match grid rank");
  for (std::size_t a = 0; a < grid.rank(); ++a) {
    for (std::size_t b = 0; b < grid.rank(); ++b) {
      if (a != b && g(a, b) != 0.0 &&
          (grid.axis(a).kind() == AxisKind::radial || grid.axis(b).kind() == AxisKind::radial)) {
        throw ShapeError("mixed derivatives are not supported on radial axes");
      }
    }
  }
  std::vector<cplx> in(u.values().begin(), u.values().end());
  if (project_input) {
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (grid.is_boundary(i)) in[i] = cplx{};
    }
  }
  const std::span<const cplx> x(in);
  Field out(u.grid_ptr());
  auto y = out.values();
  const std::size_t rank = grid.rank();
  parallel_for(grid.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t flat = begin; flat < end; ++flat) {
      if (grid.is_boundary(flat)) continue;
      cplx acc{};
      for (std::size_t a = 0; a < rank; ++a) {
        const double gaa = g(a, a);
        if (gaa == 0.0) continue;
        const Axis& ax = grid.axis(a);
        const std::size_t s = grid.stride(a);
        const std::size_t i = grid.index_along(flat, a);
        cplx d2;
        if (ax.kind() == AxisKind::cartesian) {
          const double h = ax.spacing();
          d2 = (x[flat + s] - 2.0 * x[flat] + x[flat - s]) / (h * h);
        } else {
          d2 = radial_laplacian(x, ax, flat, i, s);
        }
        acc += -0.5 * gaa * d2;
      }
      for (std::size_t a = 0; a < rank; ++a) {
        for (std::size_t b = a + 1; b < rank; ++b) {
          const double gab = g(a, b);
          if (gab == 0.0) continue;
          const std::size_t sa = grid.stride(a);
          const std::size_t sb = grid.stride(b);
          const double ha = grid.axis(a).spacing();
          const double hb = grid.axis(b).spacing();
          const cplx dab = (x[flat + sa + sb] - x[flat + sa - sb] - x[flat - sa + sb] + x[flat - sa - sb]) /
                           (4.0 * ha * hb);
          acc += -gab * dab;  // -1/2 (G_ab + G_ba) d_a d_b
        }
      }
      y[flat] = acc;
    }
  });
  return out;
}

}  // namespace

Field apply_kinetic(const Field& u, const InverseMass& g) { return apply_stencil(u, g, true); }

Field kinetic_stencil(const Field& u, const InverseMass& g) { return apply_stencil(u, g, false); }

Field forward_difference(const Field& u, std::size_t axis) {
  const Grid& grid = u.grid();
  const Axis& ax = grid.axis(axis);
  const std::size_t s = grid.stride(axis);
  const std::size_t n = ax.size();
  const double h = ax.spacing();
  Field out(u.grid_ptr());
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    const std::size_t i = grid.index_along(flat, axis);
    if (i + 1 < n) {
      out[flat] = (u[flat + s] - u[flat]) / h;
    } else if (ax.kind() == AxisKind::radial) {
      out[flat] = -u[flat] / h;
    }
  }
  return out;
}

Field backward_difference(const Field& u, std::size_t axis) {
  const Grid& grid = u.grid();
  const std::size_t s = grid.stride(axis);
  const double h = grid.axis(axis).spacing();
  Field out(u.grid_ptr());
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    if (grid.index_along(flat, axis) > 0) out[flat] = (u[flat] - u[flat - s]) / h;
  }
  return out;
}

Field second_difference(const Field& u, std::size_t axis) {
  const Grid& grid = u.grid();
  const Axis& ax = grid.axis(axis);
  const std::size_t s = grid.stride(axis);
  Field out(u.grid_ptr());
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    const std::size_t i = grid.index_along(flat, axis);
    if (ax.kind() == AxisKind::radial) {
      out[flat] = radial_laplacian(u.values(), ax, flat, i, s);
    } else if (!ax.is_boundary(i)) {
      const double h = ax.spacing();
      out[flat] = (u[flat + s] - 2.0 * u[flat] + u[flat - s]) / (h * h);
    }
  }
  return out;
}

Field mixed_difference(const Field& u, std::size_t a, std::size_t b) {
  const Grid& grid = u.grid();
  const Axis& xa = grid.axis(a);
  const Axis& xb = grid.axis(b);
  if (xa.kind() != AxisKind::cartesian || xb.kind() != AxisKind::cartesian) {
    throw ShapeError("mixed_difference needs cartesian axes");
  }
  const std::size_t sa = grid.stride(a);
  const std::size_t sb = grid.stride(b);
  Field out(u.grid_ptr());
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    if (xa.is_boundary(grid.index_along(flat, a)) || xb.is_boundary(grid.index_along(flat, b))) continue;
    out[flat] = (u[flat + sa + sb] - u[flat + sa - sb] - u[flat - sa + sb] + u[flat - sa - sb]) /
                (4.0 * xa.spacing() * xb.spacing());
  }
  return out;
}

AdjointnessResult adjointness_residual(const Field& u, const Field& h, const InverseMass& g) {
  require_same_grid(u, h, "adjointness_residual");
  AdjointnessResult res;
  const Field tu = apply_kinetic(u, g);
  const Field th = kinetic_stencil(h, g);
  res.residual = std::abs(inner_product(tu, h) - inner_product(u, th));
  res.scale = norm(u) * norm(h);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h.grid().is_boundary(i) && h[i] != cplx{}) {
      res.boundary_leak = true;
      break;
    }
  }
  return res;
}

}  // namespace exfact
