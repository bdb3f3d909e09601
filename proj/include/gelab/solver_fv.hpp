#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "gelab/kernels.hpp"
#include "gelab/measures.hpp"

namespace gelab {

struct FvConfig {
  double v_min = 1e-3;
  double v_max = 1e3;  // truncation volume, also the upper grid edge
  int bins_per_decade = 16;
  double dt_safety = 0.5;
  double t_end = 1.0;
  double sample_interval = 0.01;
  // Below this admissible step the run stops and is flagged as a runaway.
  double dt_min = 1e-12;
  // Stop at the first sample whose gel mass reaches this fraction of the
  // initial mass. 0 disables the rule.
  double stop_gel_fraction = 0.0;

  // Throws ConfigError.
  void validate() const;
};

// Geometric grid with ratio 10^(1/bins_per_decade) starting at v_min. The
// last edge is pinned to v_max, so the top bin may be narrower.
Grid build_grid(double v_min, double v_max, int bins_per_decade);

// Discretized initial data on the grid described by the config.
SizeDistribution initial_state(const InitialSpec& spec, const FvConfig& config);

struct LedgerSample {
  double M0 = 0.0;
  double M1_in = 0.0;
  double gel_mass = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SizeDistribution> states;
  std::vector<LedgerSample> diagnostics;
  bool gelation_runaway = false;
  double last_valid_time = 0.0;
  double v_max = 0.0;
  std::uint64_t steps = 0;

  // State at time t, linearly interpolated between bracketing samples.
  SizeDistribution state_at(double t) const;
};

// Fixed-pivot coagulation operator on a frozen grid. A product of volume v
// between pivots p_i <= v < p_{i+1} is split so that number and mass are both
// kept; products above the last pivot but within the upper edge are lumped
// into the last bin by mass; products beyond the upper edge leave as gel.
class CoagulationOperator {
 public:
  CoagulationOperator(const Grid& grid, const Kernel& kernel);

  std::size_t size() const noexcept { return n_; }
  double kernel_at(std::size_t i, std::size_t j) const { return kmat_[i * n_ + j]; }

  // Per-particle loss rate sum_k K_ik N_k, maximized over bins with N_i > 0.
  double max_loss_rate(const std::vector<double>& numbers) const;

  // Explicit Euler step in place. Caller guarantees dt * loss_i <= 1.
  void advance(SizeDistribution& state, double dt) const;

  // d/dt sum_i phi_i N_i under the discrete dynamics, exact for the scheme.
  double weak_rate(const std::vector<double>& numbers, const std::vector<double>& phi) const;

 private:
  enum class Sink : std::uint8_t { Split, Lump, Gel };
  struct PairTarget {
    std::uint32_t j, k;
    std::uint32_t dest;
    Sink sink;
    double weight;    // 1/2 on the diagonal, 1 otherwise
    double frac;      // number fraction sent to dest (Split), or number gain (Lump)
    double volume;    // p_j + p_k
  };

  std::size_t n_;
  std::vector<double> pivots_;
  std::vector<double> kmat_;
  std::vector<PairTarget> pairs_;
  std::vector<double> loss_;  // scratch
};

// One explicit Euler step on the grid's own truncation (upper edge).
// Throws StepRejected carrying the admissible step when dt exceeds
// dt_safety / max loss rate.
SizeDistribution step(const SizeDistribution& state, const Kernel& kernel, double dt,
                      double dt_safety = 0.5);

// Adaptive explicit stepping from init to config.t_end. Samples at multiples
// of config.sample_interval plus t_end. Throws ConfigError when the init grid
// does not end at config.v_max.
Trajectory run(const SizeDistribution& init, const Kernel& kernel, const FvConfig& config);

namespace test_fn {

// 1 on |v - center| <= inner, linear down to 0 at |v - center| = outer.
struct HatOnBall {
  double center;
  double inner;
  double outer;
};

// v^m weighted by the cutoff: v^m on (0,R], 0 beyond R+1.
struct PowerTruncated {
  double m;
  double R;
};

}  // namespace test_fn

using TestFunction = std::variant<test_fn::HatOnBall, test_fn::PowerTruncated>;

double evaluate(const TestFunction& phi, double v);

// Upper end of the support.
double support_upper(const TestFunction& phi);

// |sum phi N(t) - sum phi N(0) - 1/2 int_0^t sum sum K Theta_phi N N ds| with
// Theta_phi(v,v') = phi(v+v') - phi(v) - phi(v'), pivot quadrature in size and
// the trapezoid rule over the trajectory samples in time. Throws DomainError
// when the support of phi reaches beyond the truncation.
double weak_form_residual(const Trajectory& traj, const Kernel& kernel, const TestFunction& phi,
                          double t);

}  // namespace gelab
