#include "sns/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sns {

UniformGrid::UniformGrid(int n_interior) : n_interior_(n_interior) {
  if (n_interior < 1) {
    throw std::invalid_argument("UniformGrid: n_interior must be >= 1");
  }
  const double denom = static_cast<double>(n_interior + 1);
  step_ = 1.0 / denom;
  nodes_.resize(static_cast<std::size_t>(n_interior) + 2);
  for (int l = 0; l <= n_interior + 1; ++l) {
    nodes_[static_cast<std::size_t>(l)] = static_cast<double>(l) / denom;
  }
}

std::shared_ptr<const UniformGrid> UniformGrid::create(int n_interior) {
  return std::make_shared<const UniformGrid>(n_interior);
}

int UniformGrid::refinement_ratio_from(const UniformGrid& coarse) const {
  const int fine_cells = n_interior_ + 1;
  const int coarse_cells = coarse.n_interior_ + 1;
  if (fine_cells % coarse_cells != 0) return 0;
  return fine_cells / coarse_cells;
}

GridFunction::GridFunction(std::shared_ptr<const UniformGrid> grid)
    : grid_(std::move(grid)),
      values_(static_cast<std::size_t>(grid_->n_nodes()), Complex{0.0, 0.0}) {}

GridFunction GridFunction::zeros(std::shared_ptr<const UniformGrid> grid) {
  return GridFunction(std::move(grid));
}

GridFunction GridFunction::sample(std::shared_ptr<const UniformGrid> grid,
                                  const std::function<Complex(double)>& f,
                                  bool enforce_dirichlet) {
  GridFunction out(std::move(grid));
  const auto& g = out.grid();
  for (int l = 0; l < out.n_nodes(); ++l) {
    out[l] = f(g.node(l));
  }
  if (enforce_dirichlet) out.zero_boundary();
  return out;
}

bool GridFunction::is_dirichlet() const {
  return values_.front() == Complex{0.0, 0.0} &&
         values_.back() == Complex{0.0, 0.0};
}

bool GridFunction::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](Complex z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

void GridFunction::zero_boundary() {
  values_.front() = Complex{0.0, 0.0};
  values_.back() = Complex{0.0, 0.0};
}

namespace {

void require_same_mesh(const GridFunction& f, const GridFunction& g,
                       const char* what) {
  if (!f.grid().same_mesh(g.grid())) {
    throw std::invalid_argument(std::string(what) + ": grid mismatch");
  }
}

void require_dirichlet(const GridFunction& f, const char* what) {
  if (!f.is_dirichlet()) {
    throw std::invalid_argument(std::string(what) +
                                ": requires homogeneous Dirichlet data");
  }
}

}  // namespace

GridFunction& GridFunction::operator+=(const GridFunction& rhs) {
  require_same_mesh(*this, rhs, "GridFunction::operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += rhs.values_[i];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& rhs) {
  require_same_mesh(*this, rhs, "GridFunction::operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= rhs.values_[i];
  return *this;
}

GridFunction& GridFunction::operator*=(Complex c) {
  for (auto& v : values_) v *= c;
  return *this;
}

GridFunction forward_diff(const GridFunction& f) {
  const int n = f.n_nodes();
  const double inv_h = 1.0 / f.grid().step();
  GridFunction out(f.grid_ptr());
  for (int l = 0; l + 1 < n; ++l) {
    out[l] = (f[l + 1] - f[l]) * inv_h;
  }
  out[n - 1] = Complex{0.0, 0.0};
  return out;
}

GridFunction backward_diff(const GridFunction& f) {
  const int n = f.n_nodes();
  const double inv_h = 1.0 / f.grid().step();
  GridFunction out(f.grid_ptr());
  out[0] = Complex{0.0, 0.0};
  for (int l = 1; l < n; ++l) {
    out[l] = (f[l] - f[l - 1]) * inv_h;
  }
  return out;
}

GridFunction discrete_laplacian(const GridFunction& f) {
  require_dirichlet(f, "discrete_laplacian");
  const int n_int = f.grid().n_interior();
  const double h = f.grid().step();
  const double inv_h2 = 1.0 / (h * h);
  GridFunction out(f.grid_ptr());
  for (int l = 1; l <= n_int; ++l) {
    out[l] = (f[l + 1] - 2.0 * f[l] + f[l - 1]) * inv_h2;
  }
  return out;
}

double inner_h(const GridFunction& f, const GridFunction& g) {
  require_same_mesh(f, g, "inner_h");
  double acc = 0.0;
  const int n = f.n_nodes();
  for (int l = 0; l < n; ++l) {
    // Re[conj(f) g], conjugation on the first argument.
    acc += f[l].real() * g[l].real() + f[l].imag() * g[l].imag();
  }
  return acc * f.grid().step();
}

double norm_h(const GridFunction& f) {
  double acc = 0.0;
  for (const auto& v : f.values()) acc += std::norm(v);
  return std::sqrt(acc * f.grid().step());
}

double norm_l4h(const GridFunction& f) {
  double acc = 0.0;
  for (const auto& v : f.values()) {
    const double m2 = std::norm(v);
    acc += m2 * m2;
  }
  return std::pow(acc * f.grid().step(), 0.25);
}

double norm_linf(const GridFunction& f) {
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double h1_seminorm_sq(const GridFunction& f) {
  const int n = f.n_nodes();
  const double h = f.grid().step();
  const double inv_h2 = 1.0 / (h * h);
  double acc = 0.0;
  for (int l = 0; l + 1 < n; ++l) {
    acc += std::norm(f[l + 1] - f[l]);
  }
  return acc * inv_h2 * h;
}

GridFunction restrict_to(const GridFunction& fine,
                         std::shared_ptr<const UniformGrid> coarse) {
  const int ratio = fine.grid().refinement_ratio_from(*coarse);
  if (ratio == 0) {
    throw std::invalid_argument(
        "restrict_to: grids are not nested ((N_fine+1) must be a multiple of "
        "(N_coarse+1))");
  }
  GridFunction out(std::move(coarse));
  for (int l = 0; l < out.n_nodes(); ++l) {
    out[l] = fine[ratio * l];
  }
  return out;
}

}  // namespace sns
