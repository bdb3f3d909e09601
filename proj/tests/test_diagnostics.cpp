#include <doctest.h>

#include <cmath>
#include <random>

#include "gelab/diagnostics.hpp"
#include "gelab/error.hpp"

using namespace gelab;

namespace {

// Ledger-only trajectory: mass moves to gel at the given linear rate.
Trajectory linear_loss(double mass, double rate, double t_end, int samples) {
  Trajectory tr;
  for (int s = 0; s <= samples; ++s) {
    const double t = t_end * s / samples;
    tr.times.push_back(t);
    tr.diagnostics.push_back(LedgerSample{1.0, mass - rate * t, rate * t});
  }
  return tr;
}

Trajectory two_atom_rain_run(double t_end, double sample) {
  FvConfig c;
  c.v_max = 64.0;
  c.t_end = t_end;
  c.sample_interval = sample;
  return run(initial_state(init::Dirac{{{1.0, 1.0}, {2.5, 1.0}}}, c), Kernel::differential_sedimentation(), c);
}

SizeDistribution atoms(std::vector<Atom> list) { return from_atoms(build_grid(1e-3, 1e3, 16), list); }

}  // namespace

TEST_CASE("gelation time from constructed ledgers") {
  const Trajectory flat = linear_loss(2.0, 0.0, 1.0, 10);
  CHECK_FALSE(gelation_time_from_series(flat, 0.01).t_gel_eps.has_value());

  const Trajectory lin = linear_loss(2.0, 0.5, 1.0, 10);
  const auto est = gelation_time_from_series(lin, 0.01);
  REQUIRE(est.t_gel_eps.has_value());
  CHECK(*est.t_gel_eps == doctest::Approx(0.01 * 2.0 / 0.5).epsilon(1e-12));
  CHECK(est.epsilon == 0.01);

  CHECK_THROWS_AS(gelation_time_from_series(lin, 0.0), DomainError);
  CHECK_THROWS_AS(gelation_time_from_series(lin, 1.0), DomainError);
}

TEST_CASE("gelation time is monotone in the threshold") {
  Trajectory tr;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 0.05);
  double gel = 0.0;
  for (int s = 0; s <= 50; ++s) {
    tr.times.push_back(0.02 * s);
    tr.diagnostics.push_back(LedgerSample{1.0, 1.0 - gel, gel});
    gel = std::min(1.0, gel + u(rng));
  }
  double prev = 0.0;
  for (double eps : {0.001, 0.01, 0.05, 0.1, 0.3, 0.6, 0.9}) {
    const auto est = gelation_time_from_series(tr, eps);
    if (!est.t_gel_eps) break;
    CHECK(*est.t_gel_eps >= prev);
    prev = *est.t_gel_eps;
  }
}

TEST_CASE("rain kernel run at v_max 256 reaches the threshold") {
  FvConfig c;
  c.v_max = 256.0;
  c.t_end = 1.0;
  c.sample_interval = 0.01;
  const Trajectory tr = run(initial_state(init::Exponential{1.0}, c), Kernel::differential_sedimentation(), c);
  const auto est = gelation_time_from_series(tr, 0.01);
  REQUIRE(est.t_gel_eps.has_value());
  CHECK(*est.t_gel_eps > 0.0);
  CHECK(*est.t_gel_eps < 1.0);
  CHECK(est.v_max == 256.0);
}

TEST_CASE("tail fit recovers synthetic exponential decay") {
  const std::vector<double> R{8.0, 27.0, 64.0, 125.0};
  std::vector<double> I;
  for (double r : R) I.push_back(2.0 * std::exp(-0.5 * std::cbrt(r)));
  const DecayFit fit = tail_decay_fit(R, I, 4.0 / 3.0);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(fit.intercept == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.points == 4);
}

TEST_CASE("tail fit needs three positive tail masses") {
  const SizeDistribution d = atoms({{1.0, 1.0}, {2.0, 1.0}});
  CHECK_THROWS_AS(tail_decay_fit(d, 4.0 / 3.0, {4.0, 8.0, 16.0}), InsufficientDataError);
  CHECK_THROWS_AS(tail_decay_fit({1.0, 2.0, 3.0}, {1.0, 0.0, 1.0}, 1.5), InsufficientDataError);
}

TEST_CASE("r squared stays in the unit interval") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> R, I;
    for (int i = 1; i <= 6; ++i) {
      R.push_back(i * 3.0);
      I.push_back(u(rng));
    }
    const DecayFit fit = tail_decay_fit(R, I, 4.0 / 3.0);
    CHECK(fit.r_squared >= 0.0);
    CHECK(fit.r_squared <= 1.0);
  }
}

TEST_CASE("pre-gelation rain snapshot has a decaying tail") {
  FvConfig c;
  c.v_max = 256.0;
  c.t_end = 0.2;
  c.sample_interval = 0.05;
  const Trajectory tr = run(initial_state(init::Exponential{1.0}, c), Kernel::differential_sedimentation(), c);
  const DecayFit fit = tail_decay_fit(tr.states.back(), 4.0 / 3.0, {4.0, 8.0, 16.0, 32.0, 64.0});
  CHECK(fit.slope < 0.0);
  CHECK(fit.r_squared > 0.9);
}

TEST_CASE("blow-up bound exponent and constant chain") {
  const SizeDistribution d = atoms({{10.0, 1.0}});
  const KernelConstants kc;
  const BlowupBound b = blowup_time_bound(d, 0.25, 4.0, 3.0, kc, 1.0);
  CHECK(b.k_m == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(b.moment == doctest::Approx(216.0).epsilon(1e-14));
  const double A = 0.5 * 1.0 / (4.0 * 6.0) * 3.0 * 1.0 * std::pow(2.0, -1.0 / 3.0);
  CHECK(b.bound == doctest::Approx(0.25 + std::pow(216.0, -1.0 / 6.0) / (A * b.k_m)).epsilon(1e-13));
  CHECK(b.bound >= b.t);
  CHECK(b.R_above_crossover);
  REQUIRE(!b.constant_chain.empty());
  CHECK(b.constant_chain.back().first == "k_m");
  CHECK(b.J_half == 0.0);
  CHECK_FALSE(b.dini_ok);
}

TEST_CASE("blow-up bound tends to t as the moment grows") {
  const KernelConstants kc;
  double prev_gap = std::numeric_limits<double>::infinity(), first_gap = 0.0;
  for (double w : {1.0, 1e3, 1e6, 1e9, 1e12}) {
    const BlowupBound b = blowup_time_bound(atoms({{10.0, w}}), 0.3, 4.0, 3.0, kc, 1.0);
    const double gap = b.bound - b.t;
    CHECK(gap > 0.0);
    CHECK(gap < prev_gap);
    if (w == 1.0) first_gap = gap;
    prev_gap = gap;
  }
  // The gap scales as M^(-1/6), so 1e12 more tail mass divides it by 100.
  CHECK(prev_gap == doctest::Approx(first_gap / 100.0).epsilon(1e-12));
  const BlowupBound base = blowup_time_bound(atoms({{10.0, 1.0}}), 0.3, 4.0, 3.0, kc, 1.0);
  const BlowupBound big = blowup_time_bound(atoms({{10.0, 1e6}}), 0.3, 4.0, 3.0, kc, 1.0);
  CHECK((base.bound - base.t) / (big.bound - big.t) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("blow-up bound is antitone in the tail") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> pos(5.0, 40.0), wt(0.1, 2.0);
  const KernelConstants kc;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Atom> list{{pos(rng), wt(rng)}, {pos(rng), wt(rng)}};
    const BlowupBound a = blowup_time_bound(atoms(list), 0.0, 4.0, 4.0, kc, 1.0);
    list.push_back({pos(rng), wt(rng)});
    const BlowupBound b = blowup_time_bound(atoms(list), 0.0, 4.0, 4.0, kc, 1.0);
    CHECK(b.bound <= a.bound);
  }
}

TEST_CASE("blow-up bound across orders at a fixed moment root") {
  // With M = rho^m the gap is rho^(-(gamma-1) m/(m-1)) (m-1) / (c m (gamma-1)):
  // it grows with m when rho > 1 and shrinks with m when rho is small.
  const KernelConstants kc;
  const double R = 4.0;
  for (double rho : {0.05, 20.0}) {
    double prev = 0.0;
    for (int m = 3; m <= 12; ++m) {
      const BlowupBound b = blowup_time_bound(atoms({{R + rho, 1.0}}), 0.0, R, m, kc, 1.0);
      const double c = 0.5 / 24.0 * std::pow(2.0, -1.0 / 3.0);
      const double expected = std::pow(rho, -(1.0 / 3.0) * m / (m - 1.0)) * (m - 1.0) / (c * m * (1.0 / 3.0));
      CHECK(b.bound == doctest::Approx(expected).epsilon(1e-10));
      if (m > 3) {
        if (rho > 1.0)
          CHECK(b.bound > prev);
        else
          CHECK(b.bound < prev);
      }
      prev = b.bound;
    }
  }
}

TEST_CASE("blow-up bound domain checks") {
  const SizeDistribution d = atoms({{10.0, 1.0}});
  const KernelConstants kc;
  CHECK_THROWS_AS(blowup_time_bound(d, 0.0, 4.0, 2.0, kc, 1.0), DomainError);
  CHECK_THROWS_AS(blowup_time_bound(d, 0.0, 0.0, 3.0, kc, 1.0), DomainError);
  KernelConstants bad = kc;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(blowup_time_bound(d, 0.0, 4.0, 3.0, bad, 1.0), DomainError);
  const BlowupBound none = blowup_time_bound(atoms({{1.0, 1.0}}), 0.0, 4.0, 3.0, kc, 1.0);
  CHECK(none.infinite);
  CHECK(std::isinf(none.bound));
}

TEST_CASE("cascade probe before and after interaction") {
  const Trajectory tr = two_atom_rain_run(0.5, 0.05);
  const SeparatedPair pair{1.0, 2.5, 0.25, 2, 4.0};
  const auto at0 = positivity_cascade_probe(tr, pair, 0.0, 1);
  REQUIRE(at0.size() == 1);
  CHECK(at0[0].center == 3.5);
  CHECK(at0[0].radius == 0.625);
  CHECK(at0[0].mass == 0.0);

  const auto later = positivity_cascade_probe(tr, pair, 0.5, 3);
  REQUIRE(later.size() == 3);
  const double floor = 1e-12 * tr.diagnostics.front().M0;
  CHECK(later[0].mass > floor);
  CHECK(later[1].mass > floor);
  CHECK(later[2].mass > floor);
  CHECK(later[1].center == 4.5);
  CHECK(later[1].radius == 0.25);
  CHECK(later[1].mass < later[0].mass);
  CHECK(later[2].mass < later[1].mass);

  SeparatedPair flat = pair;
  flat.eta0 = 0.0;
  CHECK_THROWS_AS(positivity_cascade_probe(tr, flat, 0.5, 1), DomainError);
  CHECK_THROWS_AS(positivity_cascade_probe(tr, pair, 0.5, 0), DomainError);
}

TEST_CASE("first cascade ball fills up over a short horizon") {
  const Trajectory tr = two_atom_rain_run(0.05, 0.005);
  const SeparatedPair pair{1.0, 2.5, 0.25, 2, 4.0};
  double prev = 0.0;
  for (double t : tr.times) {
    const double m = positivity_cascade_probe(tr, pair, t, 1)[0].mass;
    CHECK(m >= prev);
    prev = m;
  }
  CHECK(prev > 0.0);
}
