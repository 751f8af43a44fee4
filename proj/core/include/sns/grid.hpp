#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace sns {

using Complex = std::complex<double>;

/// Uniform mesh on (0,1) with N interior nodes, step h = 1/(N+1) and
/// explicit Dirichlet boundary nodes x_0 = 0, x_{N+1} = 1.
///
/// Nodes are computed as x_l = l / (N+1) (a single correctly rounded
/// division), so a node shared by two nested grids gets the exact same
/// floating point coordinate on both. Coupled-path experiments rely on
/// that for bit-identical noise evaluation across resolutions.
class UniformGrid {
 public:
  explicit UniformGrid(int n_interior);

  static std::shared_ptr<const UniformGrid> create(int n_interior);

  int n_interior() const { return n_interior_; }
  /// Total number of nodes, N + 2.
  int n_nodes() const { return n_interior_ + 2; }
  double step() const { return step_; }
  double node(int l) const { return nodes_[static_cast<std::size_t>(l)]; }
  std::span<const double> nodes() const { return nodes_; }

  bool same_mesh(const UniformGrid& other) const {
    return n_interior_ == other.n_interior_;
  }

  /// Refinement ratio (N_fine+1)/(N_coarse+1) when this grid's nodes are a
  /// superset of `coarse`'s; 0 if the grids are not nested.
  int refinement_ratio_from(const UniformGrid& coarse) const;

 private:
  int n_interior_;
  double step_;
  std::vector<double> nodes_;
};

/// Complex-valued function on the nodes of a UniformGrid. Length is always
/// N + 2; the boundary entries are stored explicitly so that the node sums
/// of the discrete inner products can run over l = 0..N+1 verbatim.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(std::shared_ptr<const UniformGrid> grid);

  static GridFunction zeros(std::shared_ptr<const UniformGrid> grid);
  /// Samples f(x_l) at every node. With enforce_dirichlet the two boundary
  /// entries are overwritten with exact zeros.
  static GridFunction sample(std::shared_ptr<const UniformGrid> grid,
                             const std::function<Complex(double)>& f,
                             bool enforce_dirichlet = false);

  const UniformGrid& grid() const { return *grid_; }
  const std::shared_ptr<const UniformGrid>& grid_ptr() const { return grid_; }

  int n_nodes() const { return static_cast<int>(values_.size()); }
  Complex& operator[](int l) { return values_[static_cast<std::size_t>(l)]; }
  const Complex& operator[](int l) const {
    return values_[static_cast<std::size_t>(l)];
  }
  std::vector<Complex>& values() { return values_; }
  const std::vector<Complex>& values() const { return values_; }

  bool is_dirichlet() const;
  bool all_finite() const;
  void zero_boundary();

  GridFunction& operator+=(const GridFunction& rhs);
  GridFunction& operator-=(const GridFunction& rhs);
  GridFunction& operator*=(Complex c);
  friend GridFunction operator+(GridFunction a, const GridFunction& b) {
    a += b;
    return a;
  }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) {
    a -= b;
    return a;
  }
  friend GridFunction operator*(Complex c, GridFunction a) {
    a *= c;
    return a;
  }

 private:
  std::shared_ptr<const UniformGrid> grid_;
  std::vector<Complex> values_;
};

/// (f(l+1) - f(l)) / h for l = 0..N; entry N+1 of the result is set to 0
/// by convention so every grid function lives on one index scheme.
GridFunction forward_diff(const GridFunction& f);

/// (f(l) - f(l-1)) / h for l = 1..N+1; entry 0 set to 0 by convention.
GridFunction backward_diff(const GridFunction& f);

/// Second difference (f(l+1) - 2 f(l) + f(l-1)) / h^2 at interior nodes,
/// zero at the boundary. Requires homogeneous Dirichlet data. Pointwise
/// identical to composing the forward and backward differences.
GridFunction discrete_laplacian(const GridFunction& f);

/// Mesh-weighted real inner product h * sum_l Re[conj(f(l)) g(l)].
double inner_h(const GridFunction& f, const GridFunction& g);

/// sqrt(inner_h(f, f)).
double norm_h(const GridFunction& f);

/// (sum_l |f(l)|^4 h)^(1/4).
double norm_l4h(const GridFunction& f);

/// max_l |f(l)|.
double norm_linf(const GridFunction& f);

/// h * sum over the forward differences; equals inner_h(df, df) for the
/// zero-filled convention. Allocation-free companion of forward_diff.
double h1_seminorm_sq(const GridFunction& f);

/// Pointwise copy of the fine-grid values at the nodes shared with
/// `coarse`. Requires the grids to be nested; exact, no interpolation.
GridFunction restrict_to(const GridFunction& fine,
                         std::shared_ptr<const UniformGrid> coarse);

}  // namespace sns
