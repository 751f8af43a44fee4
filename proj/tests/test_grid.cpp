#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sns/grid.hpp"
#include "sns/rng.hpp"

using namespace sns;

namespace {

GridFunction random_dirichlet(std::shared_ptr<const UniformGrid> grid,
                              std::uint32_t sample) {
  GaussianStream stream = fork_stream(20240501, sample, 0);
  GridFunction f(std::move(grid));
  for (int l = 1; l <= f.grid().n_interior(); ++l) {
    f[l] = Complex{stream.next(), stream.next()};
  }
  return f;
}

}  // namespace

TEST_CASE("grid construction invariants") {
  for (int n : {1, 3, 7, 12, 100}) {
    const auto grid = UniformGrid::create(n);
    CHECK(grid->n_nodes() == n + 2);
    CHECK(std::abs(grid->step() * (n + 1) - 1.0) <= 4e-16);
    CHECK(grid->node(0) == 0.0);
    CHECK(grid->node(n + 1) == 1.0);
    for (int l = 0; l <= n; ++l) CHECK(grid->node(l) < grid->node(l + 1));
  }
  CHECK_THROWS_AS(UniformGrid(0), std::invalid_argument);
}

TEST_CASE("forward difference examples") {
  const auto grid = UniformGrid::create(3);  // h = 1/4

  SUBCASE("zero function") {
    const GridFunction z = GridFunction::zeros(grid);
    const GridFunction d = forward_diff(z);
    for (int l = 0; l < d.n_nodes(); ++l) CHECK(d[l] == Complex{0.0, 0.0});
  }

  SUBCASE("identity function has unit slope") {
    const GridFunction f = GridFunction::sample(
        grid, [](double x) { return Complex{x, 0.0}; });
    const GridFunction d = forward_diff(f);
    for (int l = 0; l <= 3; ++l) CHECK(d[l].real() == doctest::Approx(1.0));
    CHECK(d[4] == Complex{0.0, 0.0});  // zero-fill convention
  }

  SUBCASE("interior spike, N=1") {
    const auto small = UniformGrid::create(1);  // h = 1/2
    GridFunction f = GridFunction::zeros(small);
    f[1] = Complex{1.0, 0.0};
    const GridFunction d = forward_diff(f);
    CHECK(d[0].real() == doctest::Approx(2.0));
    CHECK(d[1].real() == doctest::Approx(-2.0));
    CHECK(d[2] == Complex{0.0, 0.0});
  }
}

TEST_CASE("backward difference examples") {
  const auto grid = UniformGrid::create(3);
  const GridFunction f =
      GridFunction::sample(grid, [](double x) { return Complex{x, 0.0}; });
  const GridFunction d = backward_diff(f);
  CHECK(d[0] == Complex{0.0, 0.0});  // zero-fill convention
  for (int l = 1; l <= 4; ++l) CHECK(d[l].real() == doctest::Approx(1.0));

  SUBCASE("composition on a quadratic is exactly 2 at interior nodes") {
    const GridFunction q = GridFunction::sample(
        grid, [](double x) { return Complex{x * x, 0.0}; });
    const GridFunction dd = backward_diff(forward_diff(q));
    for (int l = 1; l <= 3; ++l) CHECK(dd[l].real() == 2.0);
  }
}

TEST_CASE("discrete laplacian") {
  SUBCASE("requires Dirichlet data") {
    const auto grid = UniformGrid::create(3);
    const GridFunction f = GridFunction::sample(
        grid, [](double x) { return Complex{1.0 + x, 0.0}; });
    CHECK_THROWS_AS(discrete_laplacian(f), std::invalid_argument);
  }

  SUBCASE("quadratic exactness away from the forced boundary") {
    const auto grid = UniformGrid::create(7);  // h = 1/8, dyadic nodes
    GridFunction f = GridFunction::sample(
        grid, [](double x) { return Complex{x * x, 0.0}; },
        /*enforce_dirichlet=*/true);
    const GridFunction lap = discrete_laplacian(f);
    // node 7 sees the zero forced at x = 1 instead of x^2 = 1
    for (int l = 1; l <= 6; ++l) CHECK(lap[l].real() == 2.0);
    CHECK(lap[0] == Complex{0.0, 0.0});
    CHECK(lap[8] == Complex{0.0, 0.0});
  }

  SUBCASE("sine eigenfunction identity") {
    const auto grid = UniformGrid::create(15);
    const double h = grid->step();
    const GridFunction f = GridFunction::sample(
        grid,
        [](double x) {
          return Complex{std::sin(std::numbers::pi * x), 0.0};
        },
        true);
    const GridFunction lap = discrete_laplacian(f);
    const double eig =
        (2.0 * std::cos(std::numbers::pi * h) - 2.0) / (h * h);
    for (int l = 1; l <= 15; ++l) {
      CHECK(lap[l].real() ==
            doctest::Approx(eig * std::sin(std::numbers::pi * grid->node(l)))
                .epsilon(1e-10));
      CHECK(lap[l].imag() == 0.0);
    }
  }
}

TEST_CASE("inner product and norms") {
  const auto grid = UniformGrid::create(3);  // h = 1/4

  SUBCASE("zero against anything") {
    const GridFunction z = GridFunction::zeros(grid);
    const GridFunction g = random_dirichlet(grid, 7);
    CHECK(inner_h(z, g) == 0.0);
  }

  SUBCASE("interior constant one") {
    GridFunction f = GridFunction::zeros(grid);
    for (int l = 1; l <= 3; ++l) f[l] = Complex{1.0, 0.0};
    CHECK(inner_h(f, f) == doctest::Approx(0.75));
    CHECK(norm_h(f) == doctest::Approx(std::sqrt(0.75)));
  }

  SUBCASE("Re[conj(f) i f] vanishes exactly") {
    const GridFunction f = random_dirichlet(grid, 11);
    GridFunction g = f;
    g *= Complex{0.0, 1.0};
    CHECK(inner_h(f, g) == 0.0);
  }

  SUBCASE("grid mismatch is an error") {
    const GridFunction a = GridFunction::zeros(grid);
    const GridFunction b = GridFunction::zeros(UniformGrid::create(5));
    CHECK_THROWS_AS(inner_h(a, b), std::invalid_argument);
  }

  SUBCASE("spike norms, N=1") {
    const auto small = UniformGrid::create(1);
    GridFunction f = GridFunction::zeros(small);
    f[1] = Complex{1.0, 0.0};
    CHECK(norm_h(f) == doctest::Approx(std::sqrt(0.5)));
    CHECK(norm_l4h(f) == doctest::Approx(std::pow(0.5, 0.25)));
    CHECK(norm_linf(f) == 1.0);
  }
}

TEST_CASE("restriction") {
  const auto fine = UniformGrid::create(7);
  const auto coarse = UniformGrid::create(3);

  SUBCASE("same grid is the identity") {
    const GridFunction f = random_dirichlet(fine, 3);
    const GridFunction r = restrict_to(f, fine);
    for (int l = 0; l < f.n_nodes(); ++l) CHECK(r[l] == f[l]);
  }

  SUBCASE("fine N=7 to coarse N=3 maps node l to fine node 2l") {
    const GridFunction f = random_dirichlet(fine, 4);
    const GridFunction r = restrict_to(f, coarse);
    for (int l = 0; l < r.n_nodes(); ++l) CHECK(r[l] == f[2 * l]);
  }

  SUBCASE("zero restricts to zero") {
    const GridFunction z = GridFunction::zeros(fine);
    const GridFunction r = restrict_to(z, coarse);
    for (int l = 0; l < r.n_nodes(); ++l) CHECK(r[l] == Complex{0.0, 0.0});
  }

  SUBCASE("incompatible grids are rejected") {
    const GridFunction f = random_dirichlet(fine, 5);
    CHECK_THROWS_AS(restrict_to(f, UniformGrid::create(4)),
                    std::invalid_argument);
  }

  SUBCASE("shared nodes have bit-identical coordinates, any ratio") {
    const auto c = UniformGrid::create(2);   // cells: 3
    const auto f3 = UniformGrid::create(8);  // cells: 9, ratio 3
    for (int l = 0; l < c->n_nodes(); ++l) {
      CHECK(c->node(l) == f3->node(3 * l));
    }
  }
}

TEST_CASE("summation by parts / symmetry of the laplacian") {
  const auto grid = UniformGrid::create(31);
  for (std::uint32_t s = 0; s < 20; ++s) {
    const GridFunction f = random_dirichlet(grid, 100 + s);
    const GridFunction g = random_dirichlet(grid, 200 + s);
    const double lhs = inner_h(discrete_laplacian(f), g);
    const double rhs = inner_h(f, discrete_laplacian(g));
    const double scale =
        1.0 + std::abs(lhs) + norm_h(f) * norm_h(g) / grid->step();
    CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);
  }
}

TEST_CASE("skew terms driving charge conservation") {
  const auto grid = UniformGrid::create(31);
  for (std::uint32_t s = 0; s < 20; ++s) {
    const GridFunction f = random_dirichlet(grid, 300 + s);
    GridFunction lap = discrete_laplacian(f);
    lap *= Complex{0.0, 1.0};
    const double scale = 1.0 + norm_h(f) * norm_h(lap);
    CHECK(std::abs(inner_h(f, lap)) <= 1e-12 * scale);

    GridFunction cubic(grid);
    for (int l = 0; l < f.n_nodes(); ++l) {
      cubic[l] = Complex{0.0, 1.0} * std::norm(f[l]) * f[l];
    }
    CHECK(std::abs(inner_h(f, cubic)) <=
          1e-12 * (1.0 + norm_h(f) * norm_h(cubic)));
  }
}

TEST_CASE("discrete Gagliardo-Nirenberg inequality") {
  SUBCASE("worked spike instance") {
    const auto grid = UniformGrid::create(1);
    GridFunction f = GridFunction::zeros(grid);
    f[1] = Complex{1.0, 0.0};
    const double lhs = norm_linf(f) * norm_linf(f);
    const double rhs = 2.0 * norm_h(f) * std::sqrt(h1_seminorm_sq(f));
    CHECK(lhs == doctest::Approx(1.0));
    CHECK(rhs == doctest::Approx(2.0 * std::numbers::sqrt2));
    CHECK(lhs <= rhs);
  }

  SUBCASE("random Dirichlet functions") {
    for (int n : {7, 31}) {
      const auto grid = UniformGrid::create(n);
      for (std::uint32_t s = 0; s < 500; ++s) {
        const GridFunction f = random_dirichlet(grid, 1000 + s);
        const double slack = 2.0 * norm_h(f) * std::sqrt(h1_seminorm_sq(f)) -
                             norm_linf(f) * norm_linf(f);
        CHECK(slack >= -1e-12);
      }
    }
  }
}

TEST_CASE("norm ordering on Dirichlet functions") {
  const auto grid = UniformGrid::create(15);
  for (std::uint32_t s = 0; s < 100; ++s) {
    const GridFunction f = random_dirichlet(grid, 2000 + s);
    const double sup = norm_linf(f);
    CHECK(norm_h(f) <= sup * (1.0 + 1e-14));
    CHECK(norm_l4h(f) <=
          std::sqrt(sup) * std::sqrt(norm_h(f)) * (1.0 + 1e-14));
  }
}

TEST_CASE("grid function basics") {
  const auto grid = UniformGrid::create(3);
  GridFunction f = GridFunction::zeros(grid);
  CHECK(f.n_nodes() == 5);
  CHECK(f.is_dirichlet());
  CHECK(f.all_finite());
  f[0] = Complex{1.0, 0.0};
  CHECK_FALSE(f.is_dirichlet());
  f.zero_boundary();
  CHECK(f.is_dirichlet());
  f[2] = Complex{std::nan(""), 0.0};
  CHECK_FALSE(f.all_finite());
}
