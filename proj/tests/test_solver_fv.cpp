#include <doctest.h>

#include <cmath>
#include <random>

#include "gelab/error.hpp"
#include "gelab/solver_fv.hpp"
#include "oracles.hpp"

using namespace gelab;

namespace {

FvConfig base_config(double v_max, double t_end) {
  FvConfig c;
  c.v_max = v_max;
  c.t_end = t_end;
  c.sample_interval = t_end / 10.0;
  return c;
}

SizeDistribution random_state(std::mt19937_64& rng, const Grid& g, double fill) {
  SizeDistribution d(g);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (u(rng) < fill) d.set_number(i, u(rng));
  return d;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("geometric grids") {
  Grid g = build_grid(1.0, 10.0, 1);
  CHECK(g.edges == std::vector<double>{1.0, 10.0});
  g = build_grid(1.0, 100.0, 1);
  REQUIRE(g.edges.size() == 3);
  CHECK(g.edges[1] == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(g.edges[2] == 100.0);
  g = build_grid(0.1, 10.0, 4);
  CHECK(g.size() == 8);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g.upper(i) / g.lower(i) == doctest::Approx(std::pow(10.0, 0.25)).epsilon(1e-13));
    CHECK(g.pivots[i] > g.lower(i));
    CHECK(g.pivots[i] < g.upper(i));
  }
  CHECK_THROWS_AS(build_grid(0.0, 1.0, 4), DomainError);
  CHECK_THROWS_AS(build_grid(2.0, 1.0, 4), DomainError);
}

TEST_CASE("config validation") {
  FvConfig c;
  CHECK_NOTHROW(c.validate());
  c.bins_per_decade = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.dt_safety = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.v_max = 1e-4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("monodisperse state is a fixed point of one step") {
  const SizeDistribution d = from_atoms(build_grid(1e-3, 1e3, 16), std::vector<Atom>{{1.0, 1.0}});
  const SizeDistribution out = step(d, Kernel::differential_sedimentation(), 10.0);
  CHECK(out.counts == d.counts);
  CHECK(out.gel_mass == 0.0);
}

TEST_CASE("two atoms feed the pivots bracketing their sum") {
  const Kernel k = Kernel::differential_sedimentation();
  const SizeDistribution d = from_atoms(build_grid(1e-3, 1e3, 16), std::vector<Atom>{{1.0, 1.0}, {2.5, 1.0}});
  const double dt = 0.01;
  const SizeDistribution out = step(d, k, dt);
  const std::size_t lo = d.grid.locate(3.5) - (d.grid.pivots[d.grid.locate(3.5)] > 3.5 ? 1 : 0);
  const double pl = d.grid.pivots[lo], pr = d.grid.pivots[lo + 1];
  REQUIRE(pl <= 3.5);
  REQUIRE(pr > 3.5);
  const double rate = k(1.0, 2.5) * dt;
  CHECK(out.number(lo) == doctest::Approx(rate * (pr - 3.5) / (pr - pl)).epsilon(1e-12));
  CHECK(out.number(lo + 1) == doctest::Approx(rate * (3.5 - pl) / (pr - pl)).epsilon(1e-12));
  CHECK(pl * out.number(lo) + pr * out.number(lo + 1) == doctest::Approx(3.5 * rate).epsilon(1e-12));
  for (std::size_t i = 0; i < d.size(); ++i)
    if (i != lo && i != lo + 1 && d.number(i) == 0.0) CHECK(out.number(i) == 0.0);
}

TEST_CASE("constant kernel: one step from a monodisperse state") {
  const SizeDistribution d = from_atoms(build_grid(1e-3, 1e3, 16), std::vector<Atom>{{1.0, 0.8}});
  const double dt = 0.05;
  const SizeDistribution out = step(d, Kernel::constant(1.0), dt);
  CHECK(moment(out, 0.0) == doctest::Approx(0.8 - 0.5 * 0.8 * 0.8 * dt).epsilon(1e-14));
  CHECK(moment(out, 1.0) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("operator step matches the ordered double sum") {
  std::mt19937_64 rng(7);
  const Grid g = build_grid(0.1, 50.0, 6);
  for (const Kernel& k : {Kernel::differential_sedimentation(), Kernel::sum(1.5), Kernel::constant(2.0)}) {
    CAPTURE(k.name());
    for (int trial = 0; trial < 5; ++trial) {
      const SizeDistribution d = random_state(rng, g, 0.6);
      const CoagulationOperator op(g, k);
      const double dt = 0.5 / op.max_loss_rate(d.numbers());
      const SizeDistribution out = step(d, k, dt);
      const auto ref = oracle::brute_force_step(g.pivots, d.numbers(), g.edges.back(), k, dt);
      double scale = 0.0;
      for (double n : d.numbers()) scale = std::max(scale, n);
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(out.number(i) - ref.numbers[i]) <= 1e-12 * scale);
      CHECK(out.gel_mass == doctest::Approx(ref.gel).epsilon(1e-11));
      for (double c : out.counts) CHECK(c >= 0.0);
      const double before = moment(d, 1.0), after = moment(out, 1.0) + out.gel_mass;
      CHECK(rel(after, before) <= 1e-12);
    }
  }
}

TEST_CASE("oversized step is rejected with the admissible step") {
  const Grid g = build_grid(0.1, 50.0, 6);
  std::mt19937_64 rng(1);
  const SizeDistribution d = random_state(rng, g, 1.0);
  const Kernel k = Kernel::sum(1.5);
  const double admissible = 0.5 / CoagulationOperator(g, k).max_loss_rate(d.numbers());
  try {
    (void)step(d, k, 2.0 * admissible);
    FAIL("step accepted");
  } catch (const StepRejected& e) {
    CHECK(e.admissible_dt() == admissible);
  }
  CHECK_NOTHROW((void)step(d, k, admissible));
}

TEST_CASE("Dirac data under the rain kernel stay constant") {
  FvConfig c = base_config(1e3, 100.0);
  const SizeDistribution init = initial_state(init::Dirac{{{1.0, 1.0}}}, c);
  const Kernel k = Kernel::differential_sedimentation();
  const Trajectory tr = run(init, k, c);
  REQUIRE(tr.times.size() == 11);
  CHECK(tr.times.back() == 100.0);
  for (const auto& s : tr.states) {
    CHECK(s.counts == init.counts);
    CHECK(s.gel_mass == 0.0);
  }
  for (double t : {0.0, 37.5, 100.0}) {
    CHECK(weak_form_residual(tr, k, test_fn::HatOnBall{1.0, 0.1, 0.3}, t) <= 1e-12);
    CHECK(weak_form_residual(tr, k, test_fn::PowerTruncated{2.0, 10.0}, t) <= 1e-12);
  }
}

TEST_CASE("constant kernel number decay") {
  FvConfig c = base_config(1e3, 2.0);
  c.sample_interval = 0.01;
  const SizeDistribution init = initial_state(init::Exponential{1.0}, c);
  const Trajectory tr = run(init, Kernel::constant(1.0), c);
  const double N0 = tr.diagnostics.front().M0;
  for (std::size_t s = 0; s < tr.times.size(); ++s) {
    const double exact = N0 / (1.0 + 0.5 * N0 * tr.times[s]);
    CHECK(rel(tr.diagnostics[s].M0, exact) < 0.01);
  }
}

TEST_CASE("additive kernel number decay and mass ledger") {
  FvConfig c = base_config(1e4, 1.0);
  const SizeDistribution init = initial_state(init::Exponential{1.0}, c);
  const Trajectory tr = run(init, Kernel::sum(1.0), c);
  const double N0 = tr.diagnostics.front().M0, v0 = tr.diagnostics.front().M1_in;
  for (std::size_t s = 0; s < tr.times.size(); ++s) {
    CHECK(rel(tr.diagnostics[s].M0, N0 * std::exp(-v0 * tr.times[s])) < 0.02);
    CHECK(rel(tr.diagnostics[s].M1_in, v0) < 0.005);
  }
}

TEST_CASE("rain kernel run keeps the ledger closed and gel nondecreasing") {
  FvConfig c = base_config(256.0, 0.6);
  c.sample_interval = 0.02;
  const SizeDistribution init = initial_state(init::Exponential{1.0}, c);
  const Trajectory tr = run(init, Kernel::differential_sedimentation(), c);
  CHECK_FALSE(tr.gelation_runaway);
  const double M = tr.diagnostics.front().M1_in + tr.diagnostics.front().gel_mass;
  double gel_prev = 0.0;
  for (const auto& row : tr.diagnostics) {
    CHECK(std::abs(row.M1_in + row.gel_mass - M) <= 1e-10 * M);
    CHECK(row.gel_mass >= gel_prev);
    gel_prev = row.gel_mass;
  }
  CHECK(tr.diagnostics.back().gel_mass > 0.0);
  for (const auto& s : tr.states)
    for (double v : s.counts) CHECK(v >= 0.0);
}

TEST_CASE("trajectory interpolation") {
  FvConfig c = base_config(1e3, 1.0);
  const SizeDistribution init = initial_state(init::Exponential{1.0}, c);
  const Trajectory tr = run(init, Kernel::constant(1.0), c);
  const SizeDistribution mid = tr.state_at(0.15);
  for (std::size_t i = 0; i < mid.size(); i += 7)
    CHECK(mid.counts[i] == doctest::Approx(0.5 * (tr.states[1].counts[i] + tr.states[2].counts[i])).epsilon(1e-12));
  CHECK(tr.state_at(0.0).counts == tr.states.front().counts);
}

TEST_CASE("runaway flag when the admissible step collapses") {
  FvConfig c = base_config(1e3, 1.0);
  c.dt_min = 10.0;
  const SizeDistribution init = initial_state(init::Exponential{1.0}, c);
  const Trajectory tr = run(init, Kernel::constant(1.0), c);
  CHECK(tr.gelation_runaway);
  CHECK(tr.last_valid_time == 0.0);
}

TEST_CASE("init grid must end at the truncation volume") {
  FvConfig c = base_config(1e3, 1.0);
  const SizeDistribution init = initial_state(init::Exponential{1.0}, c);
  c.v_max = 500.0;
  CHECK_THROWS_AS(run(init, Kernel::constant(1.0), c), ConfigError);
}

TEST_CASE("weak residual is zero where mass never arrives") {
  FvConfig c = base_config(64.0, 0.5);
  const SizeDistribution init = initial_state(init::Dirac{{{1.0, 1.0}, {2.5, 1.0}}}, c);
  const Kernel k = Kernel::differential_sedimentation();
  const Trajectory tr = run(init, k, c);
  CHECK(weak_form_residual(tr, k, test_fn::HatOnBall{0.4, 0.05, 0.2}, 0.5) == 0.0);
  CHECK_THROWS_AS(weak_form_residual(tr, k, test_fn::HatOnBall{60.0, 1.0, 10.0}, 0.5), DomainError);
  CHECK_THROWS_AS(weak_form_residual(tr, k, test_fn::PowerTruncated{1.0, 64.0}, 0.5), DomainError);
}

TEST_CASE("weak residual on a constant-kernel run is small and shrinks with refinement") {
  const test_fn::HatOnBall phi{1.0, 0.25, 0.75};
  auto residual = [&](int bpd, double cadence) {
    FvConfig c = base_config(1e3, 1.0);
    c.bins_per_decade = bpd;
    c.sample_interval = cadence;
    const SizeDistribution init = initial_state(init::Exponential{1.0}, c);
    return weak_form_residual(run(init, Kernel::constant(1.0), c), Kernel::constant(1.0), phi, 1.0);
  };
  const double coarse = residual(16, 0.1), fine = residual(32, 0.05);
  CHECK(coarse < 1e-2);
  CHECK(fine < coarse);
}

TEST_CASE("test function evaluation") {
  const TestFunction hat = test_fn::HatOnBall{2.0, 0.5, 1.0};
  CHECK(evaluate(hat, 2.0) == 1.0);
  CHECK(evaluate(hat, 2.5) == 1.0);
  CHECK(evaluate(hat, 2.75) == doctest::Approx(0.5));
  CHECK(evaluate(hat, 3.0) == 0.0);
  CHECK(support_upper(hat) == 3.0);
  const TestFunction pw = test_fn::PowerTruncated{2.0, 4.0};
  CHECK(evaluate(pw, 3.0) == 9.0);
  CHECK(evaluate(pw, 4.5) == doctest::Approx(0.5 * 20.25));
  CHECK(evaluate(pw, 6.0) == 0.0);
  CHECK(support_upper(pw) == 5.0);
}
