#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gelab {

// Bin i covers [edges[i], edges[i+1]) with representative volume pivots[i].
// A point-mass bin holds all of its number at the pivot (an atom); other
// bins spread their number uniformly over the bin.
struct Grid {
  std::vector<double> edges;
  std::vector<double> pivots;
  std::vector<std::uint8_t> point_mass;

  // Geometric-midpoint pivots. Throws DomainError unless edges[0] > 0 and
  // edges strictly increase.
  static Grid from_edges(std::vector<double> edges);

  std::size_t size() const noexcept { return pivots.size(); }
  double lower(std::size_t i) const { return edges[i]; }
  double upper(std::size_t i) const { return edges[i + 1]; }
  double width(std::size_t i) const { return edges[i + 1] - edges[i]; }

  // Index of the bin containing v, or size() when v is outside the grid.
  std::size_t locate(double v) const;
};

// Binned stand-in for a nonnegative measure f(v) dv. counts are number
// densities, so the number in bin i is counts[i] * width(i).
struct SizeDistribution {
  Grid grid;
  std::vector<double> counts;
  double gel_mass = 0.0;

  SizeDistribution() = default;
  explicit SizeDistribution(Grid g);

  std::size_t size() const noexcept { return counts.size(); }
  double number(std::size_t i) const { return counts[i] * grid.width(i); }
  void set_number(std::size_t i, double n) { counts[i] = n / grid.width(i); }
  std::vector<double> numbers() const;
};

struct Atom {
  double volume;
  double weight;
};

namespace init {

// Sum of weight * delta_volume.
struct Dirac {
  std::vector<Atom> atoms;
};

// Unit number density (1/mean) exp(-v/mean).
struct Exponential {
  double mean = 1.0;
};

// Unit number spread uniformly on [lower, upper].
struct Uniform {
  double lower;
  double upper;
};

}  // namespace init

using InitialSpec = std::variant<init::Dirac, init::Exponential, init::Uniform>;

std::string describe(const InitialSpec& spec);

// Each atom goes wholly into the bin containing it; a bin receiving exactly
// one atom has its pivot moved onto the atom and is flagged as a point mass.
SizeDistribution from_atoms(Grid grid, std::span<const Atom> atoms);

// Bin numbers from exact cumulative-number differences.
SizeDistribution from_cdf(Grid grid, const std::function<double(double)>& cumulative);

SizeDistribution discretize(const InitialSpec& spec, Grid grid);

// sum_i pivot_i^m * number_i. Throws DomainError for m < 0.
double moment(const SizeDistribution& dist, double m);

// sum over pivot >= R of (pivot - R)^m * number.
double truncated_moment(const SizeDistribution& dist, double R, double m);

// Number of particles with pivot >= threshold.
double tail_number(const SizeDistribution& dist, double threshold);

// 1 on (0,R], 0 beyond R+1, linear in between.
double cutoff_weight(double R, double v);

struct CutoffPair {
  double I;  // mass above the cutoff
  double J;  // mass below the cutoff
};

CutoffPair cutoff_pair(const SizeDistribution& dist, double R);

// Number inside the open ball (center - radius, center + radius), clamped to
// (0, inf). Spread bins contribute by overlap fraction.
double ball_mass(const SizeDistribution& dist, double center, double radius);

// Number inside the half-open cell (a, b].
double cell_mass(const SizeDistribution& dist, double a, double b);

struct SeparatedPair {
  double x1;
  double x2;
  double eta0;
  int depth;
  double horizon;
};

struct SingleAtom {
  double x0;
};

// Dyadic search reached its depth or extension cap without a verdict.
struct Indeterminate {
  double horizon;
  int depth;
};

using PairSearchResult = std::variant<SeparatedPair, SingleAtom, Indeterminate>;

// Splits (0, L] into 2^n cells for n = 1..n_max and stops at the first depth
// where the lowest and highest occupied cells are at least two apart. When
// everything stays inside one adjacent cell pair and mass exists beyond the
// horizon, the horizon doubles (at most max_extensions times). Otherwise a
// single occupied cell at depth n_max gives SingleAtom and two adjacent
// cells give Indeterminate.
PairSearchResult find_separated_mass_pair(const SizeDistribution& dist, double L, int n_max,
                                          int max_extensions = 4);

struct RootInequality {
  double lhs;
  double rhs;
  bool holds;
};

// lhs = M_{R,m}^{1/m}, rhs = R * (number beyond 2R)^{1/m}.
RootInequality moment_root_inequality_check(const SizeDistribution& dist, double R, double m);

// CSV with header bin_lower,bin_upper,pivot,count preceded by
// "# gel_mass=<value>".
void write_csv(std::ostream& os, const SizeDistribution& dist);
SizeDistribution read_csv(std::istream& is);

// Shortest round-trip decimal form, used by every CSV writer.
std::string format_double(double x);

}  // namespace gelab
