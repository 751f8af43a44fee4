#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sns/profiles.hpp"
#include "sns/scheme.hpp"

using namespace sns;

namespace {

SchemeConfig reference_config(int n, double dt, double t_final, int lambda,
                              int modes) {
  SchemeConfig cfg;
  cfg.n_interior = n;
  cfg.dt = dt;
  cfg.t_final = t_final;
  cfg.lambda = lambda;
  cfg.covariance = SpectralCovariance::power_decay(modes, 12.0);
  cfg.seed = 42;
  return cfg;
}

GridFunction sine_data(int n, double amplitude = 1.0, int k = 1) {
  return sine_profile(k, amplitude).sample_on(UniformGrid::create(n));
}

}  // namespace

TEST_CASE("config validation reports per-field messages") {
  SchemeConfig cfg = reference_config(15, 1e-3, 0.1, -1, 4);
  CHECK_NOTHROW(cfg.validate());

  cfg.dt = -1.0;
  cfg.lambda = 2;
  cfg.fp_tol = 0.0;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.messages().size() == 3);
    CHECK(e.messages()[0].find("dt") != std::string::npos);
    CHECK(e.messages()[1].find("lambda") != std::string::npos);
  }

  SUBCASE("dt larger than a positive horizon is rejected") {
    SchemeConfig bad = reference_config(15, 0.2, 0.1, -1, 4);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  SUBCASE("a zero horizon is allowed") {
    SchemeConfig ok = reference_config(15, 1e-3, 0.0, -1, 4);
    CHECK_NOTHROW(ok.validate());
  }
}

TEST_CASE("ito drift") {
  const auto grid = UniformGrid::create(5);
  const auto cov = SpectralCovariance::from_eigenvalues({1.0});
  const GridFunction fq = evaluate_fq(cov, grid);

  SUBCASE("zero state maps to zero") {
    const GridFunction z = GridFunction::zeros(grid);
    const GridFunction d = drift(z, -1, fq);
    for (int l = 0; l < d.n_nodes(); ++l) CHECK(d[l] == Complex{0.0, 0.0});
  }

  SUBCASE("interior constant away from the boundary") {
    GridFunction u = GridFunction::zeros(grid);
    const Complex c{0.7, 0.2};
    for (int l = 1; l <= 5; ++l) u[l] = c;
    const GridFunction d = drift(u, 1, fq);
    // nodes 2..4 have equal neighbors, so the Laplacian term vanishes
    for (int l = 2; l <= 4; ++l) {
      const Complex expected =
          Complex{0.0, 1.0} * std::norm(c) * c - 0.5 * fq[l].real() * c;
      CHECK(std::abs(d[l] - expected) <= 1e-14);
    }
  }

  SUBCASE("only the F_Q term is dissipative") {
    const auto big = UniformGrid::create(31);
    const GridFunction fq_big = evaluate_fq(cov, big);
    GaussianStream stream = fork_stream(31415, 0, 0);
    GridFunction u(big);
    for (int l = 1; l <= 31; ++l) u[l] = Complex{stream.next(), stream.next()};
    const GridFunction d = drift(u, -1, fq_big);
    GridFunction fqu(big);
    for (int l = 0; l < u.n_nodes(); ++l) fqu[l] = fq_big[l].real() * u[l];
    const double expected = -0.5 * inner_h(u, fqu);
    const double scale = 1.0 + norm_h(u) * norm_h(d) +
                         norm_h(u) * norm_h(discrete_laplacian(u));
    CHECK(std::abs(inner_h(u, d) - expected) <= 1e-12 * scale);
  }
}

TEST_CASE("zero data is a fixed point of the noisy update") {
  const auto grid = UniformGrid::create(15);
  SchemeConfig cfg = reference_config(15, 1e-3, 0.1, -1, 8);
  MidpointStepper stepper(grid, cfg);
  GridFunction u = GridFunction::zeros(grid);
  const NoiseSampler sampler(cfg.covariance, grid);
  GaussianStream stream = fork_stream(cfg.seed, 0, 0);
  const NoiseIncrement dw = sampler.sample(cfg.dt, stream);
  stepper.advance(u, dw, 0.0, 0);
  for (int l = 0; l < u.n_nodes(); ++l) CHECK(u[l] == Complex{0.0, 0.0});
}

TEST_CASE("single-step charge conservation") {
  SUBCASE("deterministic, defocusing") {
    SchemeConfig cfg = reference_config(32, 1e-3, 0.1, -1, 0);
    const GridFunction u0 = sine_data(32);
    TrajectoryState state;
    state.u = u0;
    const NoiseIncrement zero{GridFunction::zeros(u0.grid_ptr()), cfg.dt, {}};
    const TrajectoryState next = step(state, cfg, zero);
    CHECK(next.step_index == 1);
    CHECK(std::abs(charge(next.u) - charge(u0)) <= 1e-12 * charge(u0));
  }

  SUBCASE("with noise") {
    SchemeConfig cfg = reference_config(32, 1e-3, 0.1, -1, 8);
    const GridFunction u0 = sine_data(32);
    const NoiseSampler sampler(cfg.covariance, u0.grid_ptr());
    GaussianStream stream = fork_stream(7, 0, 0);
    TrajectoryState state;
    state.u = u0;
    const TrajectoryState next =
        step(state, cfg, sampler.sample(cfg.dt, stream));
    CHECK(std::abs(charge(next.u) - charge(u0)) <= 1e-10 * charge(u0));
  }
}

TEST_CASE("evolve horizon handling") {
  SUBCASE("T = 0 returns the initial data unchanged") {
    SchemeConfig cfg = reference_config(15, 1e-3, 0.0, -1, 4);
    const GridFunction u0 = sine_data(15);
    SpectralNoiseSource src(cfg.covariance, u0.grid_ptr(), cfg.seed, 0, 1.0);
    const EvolveResult res = evolve(cfg, u0, src);
    CHECK(res.ok());
    CHECK(res.state.step_index == 0);
    CHECK(res.state.t == 0.0);
    for (int l = 0; l < u0.n_nodes(); ++l) CHECK(res.state.u[l] == u0[l]);
    CHECK(res.state.reports.size() == 1);
  }

  SUBCASE("non-integer T/dt finishes with a reduced step") {
    SchemeConfig cfg = reference_config(15, 1e-3, 0.0035, -1, 4);
    const GridFunction u0 = sine_data(15);
    SpectralNoiseSource src(cfg.covariance, u0.grid_ptr(), cfg.seed, 0, 1.0);
    const EvolveResult res = evolve(cfg, u0, src);
    CHECK(res.ok());
    CHECK(res.state.t == cfg.t_final);
    CHECK(res.state.step_index == 4);
    CHECK(res.max_charge_rel_drift <= 1e-10);
  }
}

TEST_CASE("deterministic midpoint conserves the discrete energy to O(dt^2)") {
  auto drift_at = [](double dt) {
    SchemeConfig cfg = reference_config(32, dt, 0.5, -1, 0);
    const GridFunction u0 = sine_data(32);
    SpectralNoiseSource src(cfg.covariance, u0.grid_ptr(), cfg.seed, 0, 1.0);
    EvolveOptions opts;
    opts.monitor_every = 1;
    const EvolveResult res = evolve(cfg, u0, src, opts);
    REQUIRE(res.ok());
    const double e0 = res.state.reports.front().energy_h;
    double worst = 0.0;
    for (const auto& r : res.state.reports) {
      worst = std::max(worst, std::abs(r.energy_h - e0));
    }
    return worst / std::abs(e0);
  };
  const double coarse = drift_at(1e-3);
  const double fine = drift_at(5e-4);
  CHECK(coarse <= 2e-8);
  CHECK(drift_at(1e-4) <= 1e-8);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("charge conserved over a full stochastic run") {
  SchemeConfig cfg = reference_config(64, 1e-4, 0.5, -1, 16);
  const GridFunction u0 = sine_data(64);
  SpectralNoiseSource src(cfg.covariance, u0.grid_ptr(), cfg.seed, 0, 1.0);
  EvolveOptions opts;
  opts.monitor_every = 0;
  const EvolveResult res = evolve(cfg, u0, src, opts);
  REQUIRE(res.ok());
  CHECK(res.max_charge_rel_drift <= 1e-9);
  CHECK(res.min_energy_slack >= -1e-10);
}

TEST_CASE("temporal self-convergence is second order") {
  auto final_state = [](double dt) {
    SchemeConfig cfg = reference_config(32, dt, 0.1, -1, 0);
    const GridFunction u0 = sine_data(32);
    SpectralNoiseSource src(cfg.covariance, u0.grid_ptr(), cfg.seed, 0, 1.0);
    EvolveOptions opts;
    opts.monitor_every = 0;
    const EvolveResult res = evolve(cfg, u0, src, opts);
    REQUIRE(res.ok());
    return res.state.u;
  };
  const GridFunction ref = final_state(1.25e-5);
  const double e_coarse = norm_h(final_state(1e-3) - ref);
  const double e_fine = norm_h(final_state(5e-4) - ref);
  CHECK(e_coarse / e_fine == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("one-step mean matches the Ito drift including the F_Q term") {
  const int n = 31;
  const auto grid = UniformGrid::create(n);
  SchemeConfig cfg = reference_config(n, 1e-3, 0.1, -1, 4);
  cfg.covariance = SpectralCovariance::power_decay(4, 4.0);

  GridFunction u(grid);
  for (int l = 1; l <= n; ++l) {
    const double x = grid->node(l);
    u[l] = Complex{0.8, 0.3} * std::sin(std::numbers::pi * x) +
           Complex{0.2, 0.0} * std::sin(2.0 * std::numbers::pi * x);
  }

  const GridFunction fq = evaluate_fq(cfg.covariance, grid);
  const GridFunction expected = drift(u, cfg.lambda, fq);

  const NoiseSampler sampler(cfg.covariance, grid);
  const int samples = 20000;
  std::vector<Complex> mean(static_cast<std::size_t>(u.n_nodes()), Complex{});
  std::vector<double> var(static_cast<std::size_t>(u.n_nodes()), 0.0);
  MidpointStepper stepper(grid, cfg);
  for (int m = 0; m < samples; ++m) {
    GaussianStream stream = fork_stream(987, static_cast<std::uint32_t>(m), 0);
    const NoiseIncrement dw = sampler.sample(cfg.dt, stream);
    GridFunction next = u;
    stepper.advance(next, dw, 0.0, 0);
    for (int l = 0; l < u.n_nodes(); ++l) {
      const Complex inc = (next[l] - u[l]) / cfg.dt;
      mean[static_cast<std::size_t>(l)] += inc;
      var[static_cast<std::size_t>(l)] += std::norm(inc);
    }
  }
  double diff_sq = 0.0;
  double se_sq = 0.0;
  const double h = grid->step();
  for (int l = 0; l < u.n_nodes(); ++l) {
    const Complex avg = mean[static_cast<std::size_t>(l)] /
                        static_cast<double>(samples);
    diff_sq += std::norm(avg - expected[l]) * h;
    const double node_var =
        var[static_cast<std::size_t>(l)] / samples - std::norm(avg);
    se_sq += node_var / samples * h;
  }
  CHECK(std::sqrt(diff_sq) <= 3.0 * std::sqrt(se_sq));
}

TEST_CASE("deterministic evolution is bit-reproducible") {
  SchemeConfig cfg = reference_config(31, 1e-3, 0.05, -1, 8);
  const GridFunction u0 = sine_data(31);
  auto run = [&] {
    SpectralNoiseSource src(cfg.covariance, u0.grid_ptr(), cfg.seed, 0, 1.0);
    EvolveOptions opts;
    opts.monitor_every = 0;
    return evolve(cfg, u0, src, opts);
  };
  const EvolveResult a = run();
  const EvolveResult b = run();
  for (int l = 0; l < u0.n_nodes(); ++l) {
    CHECK(a.state.u[l] == b.state.u[l]);
  }
}

TEST_CASE("blow-up is reported structurally with the trajectory retained") {
  SchemeConfig cfg = reference_config(31, 1e-3, 0.1, 1, 4);
  cfg.blowup_threshold = 0.5;  // forced: the state sits near 1
  const GridFunction u0 = sine_data(31);
  SpectralNoiseSource src(cfg.covariance, u0.grid_ptr(), cfg.seed, 0, 1.0);
  const EvolveResult res = evolve(cfg, u0, src);
  REQUIRE_FALSE(res.ok());
  CHECK(res.failure->kind == Failure::Kind::blow_up);
  CHECK(res.failure->step_index == 1);
  CHECK(res.state.step_index == 0);  // state kept from before the failure
  CHECK(res.state.u.all_finite());
}

TEST_CASE("fixed-point divergence at large dt is an error") {
  SchemeConfig cfg = reference_config(15, 0.5, 1.0, 1, 0);
  const GridFunction u0 = sine_data(15, 4.0);
  SpectralNoiseSource src(cfg.covariance, u0.grid_ptr(), cfg.seed, 0, 1.0);
  const EvolveResult res = evolve(cfg, u0, src);
  REQUIRE_FALSE(res.ok());
  CHECK(res.failure->kind == Failure::Kind::fixed_point_diverged);

  SUBCASE("the same failure surfaces as an exception from the raw stepper") {
    MidpointStepper stepper(u0.grid_ptr(), cfg);
    GridFunction u = u0;
    const NoiseIncrement zero{GridFunction::zeros(u0.grid_ptr()), cfg.dt, {}};
    CHECK_THROWS_AS(stepper.advance(u, zero, 0.0, 0),
                    FixedPointDivergedError);
  }
}

TEST_CASE("step rejects an increment sampled with a different dt") {
  SchemeConfig cfg = reference_config(15, 1e-3, 0.1, -1, 4);
  TrajectoryState state;
  state.u = sine_data(15);
  const NoiseIncrement wrong{GridFunction::zeros(state.u.grid_ptr()), 2e-3, {}};
  CHECK_THROWS_AS(step(state, cfg, wrong), std::invalid_argument);
}
