#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gelab/measures.hpp"
#include "gelab/solver_fv.hpp"

namespace gelab {

struct GelationEstimate {
  double epsilon = 0.01;
  std::optional<double> t_gel_eps;
  double v_max = 0.0;
};

// First time the gel ledger reaches epsilon times the initial mass, linearly
// interpolated between the bracketing samples. Reads only times and the
// ledger, so states may be absent. Throws DomainError unless 0 < epsilon < 1.
GelationEstimate gelation_time_from_series(const Trajectory& traj, double epsilon);

struct DecayFit {
  double gamma = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

// Least squares of log I_R against R^(gamma-1) over the entries with
// I_R > 0. Throws InsufficientDataError with fewer than three such entries.
DecayFit tail_decay_fit(const std::vector<double>& R_values, const std::vector<double>& I_values, double gamma);
DecayFit tail_decay_fit(const SizeDistribution& dist, double gamma, const std::vector<double>& R_values);

struct KernelConstants {
  double H0 = 0.5;
  double G0 = 1.0;
  double k = 1.0;
  double gamma = 4.0 / 3.0;
  double H = 2.0;  // crossover volume of the lower h bound
};

struct BlowupBound {
  double t = 0.0;
  double R = 0.0;
  double m = 0.0;
  double k_m = 0.0;
  double moment = 0.0;  // truncated moment of order m at R
  double bound = 0.0;   // +inf when the moment vanishes
  bool infinite = false;
  // Factors of the prefactor A in the comparison ODE M' >= A M^(1+k_m), in
  // the order they are multiplied.
  std::vector<std::pair<std::string, double>> constant_chain;
  bool R_above_crossover = false;
  // Mass below the cutoff R/2 - 1 and whether it reaches v0/2.
  double J_half = 0.0;
  bool dini_ok = false;
};

// bound = t + M^(-k_m) / (A k_m) with k_m = (gamma-1)/(m-1),
// A = c_K m v0 (1+v0)^(-(gamma-1)) and c_K = H0 G0 / (4 6^k).
// Throws DomainError unless m > 2, R > 0, v0 > 0 and gamma > 1.
BlowupBound blowup_time_bound(const SizeDistribution& dist, double t, double R, double m,
                              const KernelConstants& consts, double v0);

struct CascadeBall {
  double center;
  double radius;
  double mass;
};

// Ball masses of the trajectory state at t around n x1 + x2 for
// n = 1..n_steps; radius 5 eta0 / 2 for the first ball and eta0 after.
// Throws DomainError when eta0 <= 0 or n_steps < 1.
std::vector<CascadeBall> positivity_cascade_probe(const Trajectory& traj, const SeparatedPair& pair, double t,
                                                  int n_steps);

}  // namespace gelab
