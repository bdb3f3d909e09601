#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gelab/error.hpp"
#include "gelab/measures.hpp"
#include "gelab/solver_fv.hpp"
#include "oracles.hpp"

using namespace gelab;

namespace {

Grid fine_grid() { return build_grid(1e-3, 1e3, 16); }

SizeDistribution atoms(std::vector<Atom> list, Grid g = fine_grid()) { return from_atoms(std::move(g), list); }

// Random atomic measure: count atoms at uniform positions in (0, top].
SizeDistribution random_atoms(std::mt19937_64& rng, int count, double top) {
  std::uniform_real_distribution<double> pos(1e-3, top), wt(0.0, 2.0);
  std::vector<Atom> list;
  for (int i = 0; i < count; ++i) list.push_back({pos(rng), wt(rng)});
  return from_atoms(build_grid(1e-3, top * 1.01, 16), list);
}

}  // namespace

TEST_CASE("grid construction") {
  const Grid g = Grid::from_edges({1.0, 4.0, 16.0});
  CHECK(g.size() == 2);
  CHECK(g.pivots[0] == 2.0);
  CHECK(g.pivots[1] == 8.0);
  CHECK(g.locate(0.5) == 2);
  CHECK(g.locate(1.0) == 0);
  CHECK(g.locate(4.0) == 1);
  CHECK(g.locate(16.0) == 1);
  CHECK(g.locate(16.5) == 2);
  CHECK_THROWS_AS(Grid::from_edges({0.0, 1.0}), DomainError);
  CHECK_THROWS_AS(Grid::from_edges({1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(Grid::from_edges({1.0}), DomainError);
}

TEST_CASE("moment of a binned atom") {
  const SizeDistribution d = atoms({{2.0, 3.0}});
  CHECK(moment(d, 1.0) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(moment(d, 0.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS(moment(d, -1.0), DomainError);
}

TEST_CASE("moments of an empty distribution vanish") {
  const SizeDistribution d(fine_grid());
  for (double m : {0.0, 1.0, 2.5}) CHECK(moment(d, m) == 0.0);
  CHECK(truncated_moment(d, 1.0, 2.0) == 0.0);
  CHECK(tail_number(d, 1.0) == 0.0);
}

TEST_CASE("second moment of the exponential density") {
  // Reference: Simpson quadrature of v^2 e^-v on (0, 60].
  const double ref = oracle::simpson([](double v) { return v * v * std::exp(-v); }, 0.0, 60.0, 60000);
  CHECK(ref == doctest::Approx(2.0).epsilon(1e-10));
  const SizeDistribution d = discretize(init::Exponential{1.0}, build_grid(1e-4, 100.0, 64));
  CHECK(moment(d, 2.0) == doctest::Approx(ref).epsilon(2e-3));
  // Number outside [1e-4, 100] is not represented.
  CHECK(moment(d, 0.0) == doctest::Approx(std::exp(-1e-4) - std::exp(-100.0)).epsilon(1e-12));
}

TEST_CASE("exponential bin numbers match quadrature") {
  const Grid g = build_grid(1e-2, 50.0, 8);
  const SizeDistribution d = discretize(init::Exponential{2.0}, g);
  for (std::size_t i = 0; i < g.size(); i += 5) {
    const double ref = oracle::simpson([](double v) { return 0.5 * std::exp(-0.5 * v); }, g.lower(i), g.upper(i), 200);
    CHECK(d.number(i) == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("truncated moment hand values") {
  const double R = 1.5;
  for (double m : {2.0, 3.0, 5.0}) {
    const SizeDistribution d = atoms({{3.0 * R, 1.0}});
    CHECK(truncated_moment(d, R, m) == doctest::Approx(std::pow(2.0 * R, m)).epsilon(1e-14));
  }
  CHECK(truncated_moment(atoms({{0.5, 1.0}, {0.9, 4.0}}), 1.0, 3.0) == 0.0);
  CHECK(truncated_moment(atoms({{2.0, 1.0}, {3.0, 1.0}}), 1.0, 2.0) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("cutoff pair hand values") {
  const double R = 4.0;
  auto p = cutoff_pair(atoms({{R / 2.0, 1.0}}), R);
  CHECK(p.I == 0.0);
  CHECK(p.J == doctest::Approx(R / 2.0).epsilon(1e-15));
  p = cutoff_pair(atoms({{R + 2.0, 1.0}}), R);
  CHECK(p.I == doctest::Approx(R + 2.0).epsilon(1e-15));
  CHECK(p.J == 0.0);
  p = cutoff_pair(atoms({{R + 0.5, 1.0}}), R);
  CHECK(p.I == doctest::Approx((R + 0.5) / 2.0).epsilon(1e-15));
  CHECK(p.J == doctest::Approx((R + 0.5) / 2.0).epsilon(1e-15));
  CHECK(cutoff_weight(R, R) == 1.0);
  CHECK(cutoff_weight(R, R + 1.0) == 0.0);
}

TEST_CASE("cutoff pair sums to the first moment") {
  std::mt19937_64 rng(41);
  const SizeDistribution d = discretize(init::Exponential{3.0}, fine_grid());
  for (double R : {0.5, 1.0, 2.0, 5.0, 17.0, 100.0}) {
    const auto p = cutoff_pair(d, R);
    CHECK(p.I + p.J == doctest::Approx(moment(d, 1.0)).epsilon(1e-15));
  }
  for (int trial = 0; trial < 50; ++trial) {
    const SizeDistribution r = random_atoms(rng, 20, 30.0);
    const auto p = cutoff_pair(r, 10.0);
    CHECK(p.I + p.J == doctest::Approx(moment(r, 1.0)).epsilon(1e-15));
  }
}

TEST_CASE("ball mass hand values") {
  const SizeDistribution d = atoms({{3.5, 2.0}});
  CHECK(ball_mass(d, 3.5, 0.1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(ball_mass(d, 5.0, 0.1) == 0.0);
  CHECK(ball_mass(d, 1.0, 10.0) == doctest::Approx(2.0).epsilon(1e-15));

  const Grid g = Grid::from_edges({0.5, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0});
  const SizeDistribution u = discretize(init::Uniform{1.0, 2.0}, g);
  CHECK(ball_mass(u, 1.5, 0.25) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(ball_mass(u, 1.5, 0.1) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("adding mass never decreases a moment") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const SizeDistribution a = random_atoms(rng, 10, 20.0);
    SizeDistribution b = a;
    const std::size_t i = rng() % b.size();
    b.set_number(i, b.number(i) + 0.5);
    for (double m : {0.0, 0.5, 1.0, 3.0}) CHECK(moment(b, m) >= moment(a, m));
  }
}

TEST_CASE("separated pair search: single atom") {
  const auto res = find_separated_mass_pair(atoms({{1.0, 1.0}}), 4.0, 20);
  REQUIRE(std::holds_alternative<SingleAtom>(res));
  CHECK(std::get<SingleAtom>(res).x0 == 1.0);
}

TEST_CASE("separated pair search: two atoms") {
  const auto res = find_separated_mass_pair(atoms({{1.0, 1.0}, {2.5, 1.0}}), 4.0, 20);
  REQUIRE(std::holds_alternative<SeparatedPair>(res));
  const auto p = std::get<SeparatedPair>(res);
  CHECK(p.x1 == 1.0);
  CHECK(p.x2 == 2.5);
  CHECK(p.x2 - p.x1 >= 3.0 * p.eta0);
  CHECK(p.eta0 > 0.0);
}

TEST_CASE("separated pair search: uniform density on [1,2]") {
  const Grid g = Grid::from_edges({0.5, 1.0, 1.25, 1.5, 1.75, 2.0});
  const SizeDistribution u = discretize(init::Uniform{1.0, 2.0}, g);
  const auto res = find_separated_mass_pair(u, 2.0, 20);
  REQUIRE(std::holds_alternative<SeparatedPair>(res));
  const auto p = std::get<SeparatedPair>(res);
  CHECK(p.depth == 3);
  CHECK(p.x1 > 1.0);
  CHECK(p.x1 <= 1.25);
  CHECK(p.x2 > 1.75);
  CHECK(p.x2 <= 2.0);
  const auto hit = oracle::brute_force_dyadic(u, 2.0, 10);
  REQUIRE(hit);
  CHECK(hit->depth == 3);
  CHECK(hit->lo == 4);
  CHECK(hit->hi == 7);
}

TEST_CASE("separated pair search agrees with the exhaustive scan") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int count = 1 + static_cast<int>(rng() % 4);
    std::uniform_real_distribution<double> pos(0.05, 7.9);
    std::vector<Atom> list;
    for (int i = 0; i < count; ++i) list.push_back({pos(rng), 1.0});
    const SizeDistribution d = from_atoms(build_grid(1e-3, 10.0, 16), list);
    const auto res = find_separated_mass_pair(d, 8.0, 12, 0);
    const auto hit = oracle::brute_force_dyadic(d, 8.0, 12);
    if (hit) {
      REQUIRE(std::holds_alternative<SeparatedPair>(res));
      const auto p = std::get<SeparatedPair>(res);
      CHECK(p.depth == hit->depth);
      const double w = 8.0 / std::ldexp(1.0, hit->depth);
      CHECK(p.x1 > hit->lo * w);
      CHECK(p.x1 <= (hit->lo + 1) * w);
      CHECK(p.x2 > hit->hi * w);
      CHECK(p.x2 <= (hit->hi + 1) * w);
      CHECK(ball_mass(d, p.x1, p.eta0) > 0.0);
      CHECK(ball_mass(d, p.x2, p.eta0) > 0.0);
      CHECK(p.x2 - p.x1 >= 3.0 * p.eta0);
    } else {
      CHECK_FALSE(std::holds_alternative<SeparatedPair>(res));
    }
  }
}

TEST_CASE("single atom verdict only for one occupied cell") {
  // Atoms closer than the finest cell width: one shared cell reads as a
  // single atom, two adjacent cells give no verdict.
  const Grid g = Grid::from_edges({0.5, 1.10000000005, 2.0});
  const auto same = find_separated_mass_pair(atoms({{1.1, 1.0}, {1.1 + 1e-10, 1.0}}, g), 4.0, 8);
  CHECK(std::holds_alternative<SingleAtom>(same));
  const Grid h = Grid::from_edges({0.5, 1.0, 2.0});
  const auto straddle = find_separated_mass_pair(atoms({{1.0 - 1e-10, 1.0}, {1.0 + 1e-10, 1.0}}, h), 4.0, 8);
  CHECK(std::holds_alternative<Indeterminate>(straddle));
  const auto single = find_separated_mass_pair(atoms({{3.0, 1.0}}), 4.0, 30);
  CHECK(std::holds_alternative<SingleAtom>(single));
}

TEST_CASE("separated pair search extends the horizon") {
  const auto res = find_separated_mass_pair(atoms({{1.0, 1.0}, {10.0, 1.0}}), 0.75, 20, 4);
  REQUIRE(std::holds_alternative<SeparatedPair>(res));
  CHECK(std::get<SeparatedPair>(res).horizon == 12.0);
  const auto capped = find_separated_mass_pair(atoms({{1.0, 1.0}, {10.0, 1.0}}), 0.75, 20, 1);
  CHECK(std::holds_alternative<Indeterminate>(capped));
  CHECK_THROWS_AS(find_separated_mass_pair(SizeDistribution(fine_grid()), 4.0, 10), EmptyMeasureError);
}

TEST_CASE("moment root inequality hand values") {
  const double R = 2.0;
  auto c = moment_root_inequality_check(atoms({{2.0 * R, 1.0}}), R, 3.0);
  CHECK(c.lhs == doctest::Approx(R).epsilon(1e-14));
  CHECK(c.rhs == doctest::Approx(R).epsilon(1e-14));
  CHECK(c.holds);
  c = moment_root_inequality_check(atoms({{3.0 * R, 1.0}}), R, 2.0);
  CHECK(c.lhs == doctest::Approx(2.0 * R).epsilon(1e-14));
  CHECK(c.rhs == doctest::Approx(R).epsilon(1e-14));
  CHECK(c.holds);
}

TEST_CASE("moment root inequality holds for random atomic measures") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const double R = 1.0 + static_cast<double>(rng() % 4);
    const SizeDistribution d = random_atoms(rng, 50, 10.0 * R);
    for (double m : {2.0, 5.0, 10.0}) {
      const auto c = moment_root_inequality_check(d, R, m);
      // Direct summation oracle over the atoms.
      double M = 0.0, N = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.grid.pivots[i] >= R) M += std::pow(d.grid.pivots[i] - R, m) * d.number(i);
        if (d.grid.pivots[i] >= 2.0 * R) N += d.number(i);
      }
      CHECK(c.lhs == doctest::Approx(std::pow(M, 1.0 / m)).epsilon(1e-12));
      CHECK(c.rhs == doctest::Approx(R * std::pow(N, 1.0 / m)).epsilon(1e-12));
      CHECK(c.holds);
    }
  }
}

TEST_CASE("atoms relocate pivots and stay inside the grid") {
  const SizeDistribution d = atoms({{1.0, 1.0}, {2.5, 3.0}});
  const std::size_t i = d.grid.locate(2.5);
  CHECK(d.grid.point_mass[i]);
  CHECK(d.grid.pivots[i] == 2.5);
  CHECK(d.number(i) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS(atoms({{5000.0, 1.0}}), DomainError);
  CHECK_THROWS_AS(atoms({{1.0, -1.0}}), DomainError);
}

TEST_CASE("distribution csv round trip") {
  SizeDistribution d = discretize(init::Exponential{1.0}, build_grid(1e-2, 10.0, 4));
  d.gel_mass = 0.125;
  std::ostringstream os;
  write_csv(os, d);
  CHECK(os.str().rfind("# gel_mass=0.125\nbin_lower,bin_upper,pivot,count\n", 0) == 0);
  std::istringstream is(os.str());
  const SizeDistribution back = read_csv(is);
  CHECK(back.gel_mass == d.gel_mass);
  CHECK(back.counts == d.counts);
  CHECK(back.grid.edges == d.grid.edges);
  CHECK(back.grid.pivots == d.grid.pivots);

  const SizeDistribution a = atoms({{1.0, 1.0}, {2.5, 1.0}});
  std::ostringstream os2;
  write_csv(os2, a);
  std::istringstream is2(os2.str());
  const SizeDistribution a2 = read_csv(is2);
  CHECK(a2.grid.point_mass == a.grid.point_mass);
  CHECK(a2.grid.pivots == a.grid.pivots);
}

TEST_CASE("format_double gives the shortest round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(1e300) == "1e+300");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
