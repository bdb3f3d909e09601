#include "gelab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gelab/error.hpp"

namespace gelab {

GelationEstimate gelation_time_from_series(const Trajectory& traj, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("gelation threshold must lie in (0,1)");
  GelationEstimate est;
  est.epsilon = epsilon;
  est.v_max = traj.v_max;
  if (traj.diagnostics.empty()) return est;
  const auto& d = traj.diagnostics;
  const double threshold = epsilon * (d.front().M1_in + d.front().gel_mass);
  for (std::size_t s = 0; s < d.size(); ++s) {
    if (d[s].gel_mass < threshold) continue;
    if (s == 0) {
      est.t_gel_eps = traj.times.front();
    } else {
      const double g0 = d[s - 1].gel_mass, g1 = d[s].gel_mass;
      const double frac = (threshold - g0) / (g1 - g0);
      est.t_gel_eps = traj.times[s - 1] + frac * (traj.times[s] - traj.times[s - 1]);
    }
    break;
  }
  return est;
}

DecayFit tail_decay_fit(const std::vector<double>& R_values, const std::vector<double>& I_values, double gamma) {
  if (R_values.size() != I_values.size()) throw DomainError("tail_decay_fit: R and I lengths differ");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < R_values.size(); ++i) {
    if (!(I_values[i] > 0.0) || !(R_values[i] > 0.0)) continue;
    x.push_back(std::pow(R_values[i], gamma - 1.0));
    y.push_back(std::log(I_values[i]));
  }
  if (x.size() < 3) throw InsufficientDataError("tail_decay_fit: fewer than three positive tail masses");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientDataError("tail_decay_fit: cutoffs must be distinct");
  DecayFit fit;
  fit.gamma = gamma;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.points = x.size();
  return fit;
}

DecayFit tail_decay_fit(const SizeDistribution& dist, double gamma, const std::vector<double>& R_values) {
  std::vector<double> I;
  I.reserve(R_values.size());
  for (double R : R_values) I.push_back(cutoff_pair(dist, R).I);
  return tail_decay_fit(R_values, I, gamma);
}

BlowupBound blowup_time_bound(const SizeDistribution& dist, double t, double R, double m,
                              const KernelConstants& c, double v0) {
  if (!(m > 2.0)) throw DomainError("blowup_time_bound: order m must exceed 2");
  if (!(R > 0.0) || !(v0 > 0.0)) throw DomainError("blowup_time_bound: need R > 0 and v0 > 0");
  if (!(c.gamma > 1.0)) throw DomainError("blowup_time_bound: gamma must exceed 1");
  if (!(c.H0 > 0.0) || !(c.G0 > 0.0) || !(c.k >= 1.0)) throw DomainError("blowup_time_bound: bad kernel constants");

  BlowupBound b;
  b.t = t;
  b.R = R;
  b.m = m;
  b.k_m = (c.gamma - 1.0) / (m - 1.0);
  b.moment = truncated_moment(dist, R, m);

  const double six_k = std::pow(6.0, c.k);
  const double c_K = c.H0 * c.G0 / (4.0 * six_k);
  const double damping = std::pow(1.0 + v0, -(c.gamma - 1.0));
  const double A = c_K * m * v0 * damping;
  b.constant_chain = {{"H0", c.H0}, {"G0", c.G0},       {"6^k", six_k}, {"c_K", c_K},
                      {"m", m},     {"v0", v0},         {"(1+v0)^-(gamma-1)", damping},
                      {"A", A},     {"k_m", b.k_m}};

  if (b.moment > 0.0) {
    b.bound = t + std::pow(b.moment, -b.k_m) / (A * b.k_m);
  } else {
    b.bound = std::numeric_limits<double>::infinity();
    b.infinite = true;
  }
  b.R_above_crossover = R >= c.H;
  const double half = R / 2.0 - 1.0;
  if (half > 0.0) {
    b.J_half = cutoff_pair(dist, half).J;
    b.dini_ok = b.J_half >= v0 / 2.0;
  }
  return b;
}

std::vector<CascadeBall> positivity_cascade_probe(const Trajectory& traj, const SeparatedPair& pair, double t,
                                                  int n_steps) {
  if (!(pair.eta0 > 0.0)) throw DomainError("cascade probe: pair is not separated");
  if (n_steps < 1) throw DomainError("cascade probe: need at least one step");
  if (!(t >= 0.0)) throw DomainError("cascade probe: t must be >= 0");
  const SizeDistribution state = traj.state_at(t);
  std::vector<CascadeBall> out;
  for (int n = 1; n <= n_steps; ++n) {
    const double center = n * pair.x1 + pair.x2;
    const double radius = n == 1 ? 2.5 * pair.eta0 : pair.eta0;
    out.push_back(CascadeBall{center, radius, ball_mass(state, center, radius)});
  }
  return out;
}

}  // namespace gelab
