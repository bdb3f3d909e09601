#include "gelab/solver_fv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gelab/error.hpp"

namespace gelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

LedgerSample ledger(const SizeDistribution& d) {
  return LedgerSample{moment(d, 0.0), moment(d, 1.0), d.gel_mass};
}

void validate_phi(const TestFunction& phi) {
  std::visit(overloaded{
                 [](const test_fn::HatOnBall& h) {
                   if (!(h.inner >= 0.0) || !(h.outer > h.inner) || !std::isfinite(h.center))
                     throw DomainError("hat test function: need 0 <= inner < outer");
                 },
                 [](const test_fn::PowerTruncated& p) {
                   if (!(p.m >= 0.0) || !(p.R > 0.0))
                     throw DomainError("power test function: need m >= 0 and R > 0");
                 },
             },
             phi);
}

}  // namespace

void FvConfig::validate() const {
  if (!(v_min > 0.0)) throw ConfigError("solver.v_min must be positive");
  if (!(v_max > v_min) || !std::isfinite(v_max)) throw ConfigError("solver.v_max must exceed solver.v_min");
  if (bins_per_decade < 4) throw ConfigError("solver.bins_per_decade must be at least 4");
  if (!(dt_safety > 0.0 && dt_safety <= 1.0)) throw ConfigError("solver.dt_safety must lie in (0,1]");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("solver.t_end must be finite and >= 0");
  if (!(sample_interval > 0.0)) throw ConfigError("solver.sample_interval must be positive");
  if (!(dt_min > 0.0)) throw ConfigError("solver.dt_min must be positive");
  if (!(stop_gel_fraction >= 0.0 && stop_gel_fraction < 1.0))
    throw ConfigError("solver.stop_gel_fraction must lie in [0,1)");
}

Grid build_grid(double v_min, double v_max, int bins_per_decade) {
  if (!(v_min > 0.0)) throw DomainError("build_grid: v_min must be positive");
  if (!(v_max > v_min) || !std::isfinite(v_max)) throw DomainError("build_grid: need v_min < v_max");
  if (bins_per_decade < 1) throw DomainError("build_grid: bins_per_decade must be >= 1");
  const double decades = std::log10(v_max / v_min);
  const auto n = std::max<long>(1, static_cast<long>(std::ceil(bins_per_decade * decades - 1e-9)));
  std::vector<double> edges(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i < n; ++i)
    edges[static_cast<std::size_t>(i)] = v_min * std::pow(10.0, static_cast<double>(i) / bins_per_decade);
  edges.back() = v_max;
  return Grid::from_edges(std::move(edges));
}

SizeDistribution initial_state(const InitialSpec& spec, const FvConfig& config) {
  config.validate();
  return discretize(spec, build_grid(config.v_min, config.v_max, config.bins_per_decade));
}

SizeDistribution Trajectory::state_at(double t) const {
  if (times.empty()) throw DomainError("trajectory: no samples");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  const std::size_t lo = hi - 1;
  const double s = (t - times[lo]) / (times[hi] - times[lo]);
  SizeDistribution out = states[lo];
  for (std::size_t i = 0; i < out.size(); ++i)
    out.counts[i] = (1.0 - s) * states[lo].counts[i] + s * states[hi].counts[i];
  out.gel_mass = (1.0 - s) * states[lo].gel_mass + s * states[hi].gel_mass;
  return out;
}

CoagulationOperator::CoagulationOperator(const Grid& grid, const Kernel& kernel)
    : n_(grid.size()), pivots_(grid.pivots), kmat_(n_ * n_), loss_(n_) {
  std::vector<Kernel::Prepared> prep(n_);
  for (std::size_t i = 0; i < n_; ++i) prep[i] = kernel.prepare(pivots_[i]);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i; j < n_; ++j) kmat_[i * n_ + j] = kmat_[j * n_ + i] = kernel.pair(prep[i], prep[j]);

  const double upper = grid.edges.back();
  const double p_last = pivots_.back();
  for (std::size_t j = 0; j < n_; ++j) {
    for (std::size_t k = j; k < n_; ++k) {
      const double K = kmat_[j * n_ + k];
      if (!(K > 0.0)) continue;
      PairTarget pt{};
      pt.j = static_cast<std::uint32_t>(j);
      pt.k = static_cast<std::uint32_t>(k);
      pt.weight = j == k ? 0.5 : 1.0;
      pt.volume = pivots_[j] + pivots_[k];
      if (pt.volume > upper) {
        pt.sink = Sink::Gel;
      } else if (pt.volume >= p_last) {
        pt.sink = Sink::Lump;
        pt.dest = static_cast<std::uint32_t>(n_ - 1);
        pt.frac = pt.volume / p_last;
      } else {
        const auto hi = std::upper_bound(pivots_.begin(), pivots_.end(), pt.volume) - pivots_.begin();
        const auto i = static_cast<std::size_t>(hi - 1);
        pt.sink = Sink::Split;
        pt.dest = static_cast<std::uint32_t>(i);
        pt.frac = (pivots_[i + 1] - pt.volume) / (pivots_[i + 1] - pivots_[i]);
      }
      pairs_.push_back(pt);
    }
  }
}

double CoagulationOperator::max_loss_rate(const std::vector<double>& numbers) const {
  double best = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (!(numbers[i] > 0.0)) continue;
    const double* row = &kmat_[i * n_];
    double s = 0.0;
    for (std::size_t k = 0; k < n_; ++k) s += row[k] * numbers[k];
    best = std::max(best, s);
  }
  return best;
}

void CoagulationOperator::advance(SizeDistribution& state, double dt) const {
  const std::vector<double> N = state.numbers();
  std::vector<double> gain(n_, 0.0);
  double gel_rate = 0.0;
  for (const PairTarget& pt : pairs_) {
    const double r = pt.weight * kmat_[pt.j * n_ + pt.k] * N[pt.j] * N[pt.k];
    if (r == 0.0) continue;
    switch (pt.sink) {
      case Sink::Split:
        gain[pt.dest] += r * pt.frac;
        gain[pt.dest + 1] += r * (1.0 - pt.frac);
        break;
      case Sink::Lump:
        gain[pt.dest] += r * pt.frac;
        break;
      case Sink::Gel:
        gel_rate += r * pt.volume;
        break;
    }
  }
  for (std::size_t i = 0; i < n_; ++i) {
    double loss = 0.0;
    if (N[i] > 0.0) {
      const double* row = &kmat_[i * n_];
      for (std::size_t k = 0; k < n_; ++k) loss += row[k] * N[k];
    }
    // (1 - dt*loss) >= 0 under the step bound, so counts stay nonnegative.
    state.counts[i] = state.counts[i] * (1.0 - dt * loss) + dt * gain[i] / state.grid.width(i);
  }
  state.gel_mass += dt * gel_rate;
}

double CoagulationOperator::weak_rate(const std::vector<double>& numbers, const std::vector<double>& phi) const {
  double s = 0.0;
  for (const PairTarget& pt : pairs_) {
    const double r = pt.weight * kmat_[pt.j * n_ + pt.k] * numbers[pt.j] * numbers[pt.k];
    if (r == 0.0) continue;
    double gained = 0.0;
    switch (pt.sink) {
      case Sink::Split:
        gained = pt.frac * phi[pt.dest] + (1.0 - pt.frac) * phi[pt.dest + 1];
        break;
      case Sink::Lump:
        gained = pt.frac * phi[pt.dest];
        break;
      case Sink::Gel:
        break;
    }
    s += r * (gained - phi[pt.j] - phi[pt.k]);
  }
  return s;
}

SizeDistribution step(const SizeDistribution& state, const Kernel& kernel, double dt, double dt_safety) {
  if (!(dt >= 0.0)) throw DomainError("step: dt must be nonnegative");
  if (!(dt_safety > 0.0 && dt_safety <= 1.0)) throw DomainError("step: dt_safety must lie in (0,1]");
  const CoagulationOperator op(state.grid, kernel);
  const double L = op.max_loss_rate(state.numbers());
  const double admissible = L > 0.0 ? dt_safety / L : kInf;
  if (dt > admissible) throw StepRejected("step: dt exceeds the positivity bound", admissible);
  SizeDistribution out = state;
  op.advance(out, dt);
  return out;
}

Trajectory run(const SizeDistribution& init, const Kernel& kernel, const FvConfig& config) {
  config.validate();
  if (init.size() == 0) throw DomainError("run: empty grid");
  const double upper = init.grid.edges.back();
  if (std::abs(upper - config.v_max) > 1e-12 * config.v_max)
    throw ConfigError("run: initial grid must end at solver.v_max");

  const CoagulationOperator op(init.grid, kernel);
  Trajectory traj;
  traj.v_max = upper;
  SizeDistribution state = init;
  const double mass0 = moment(init, 1.0) + init.gel_mass;

  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.states.push_back(state);
    traj.diagnostics.push_back(ledger(state));
  };

  double t = 0.0;
  record(t);
  const double dT = config.sample_interval;
  for (long k = 1; t < config.t_end; ++k) {
    double target = static_cast<double>(k) * dT;
    if (target >= config.t_end * (1.0 - 1e-12)) target = config.t_end;
    while (t < target) {
      const double L = op.max_loss_rate(state.numbers());
      const double admissible = L > 0.0 ? config.dt_safety / L : kInf;
      if (admissible < config.dt_min) {
        traj.gelation_runaway = true;
        traj.last_valid_time = t;
        if (t > traj.times.back()) record(t);
        return traj;
      }
      if (admissible >= target - t) {
        op.advance(state, target - t);
        t = target;
      } else {
        op.advance(state, admissible);
        t += admissible;
      }
      ++traj.steps;
    }
    record(t);
    if (config.stop_gel_fraction > 0.0 && state.gel_mass >= config.stop_gel_fraction * mass0) break;
  }
  traj.last_valid_time = t;
  return traj;
}

double evaluate(const TestFunction& phi, double v) {
  return std::visit(overloaded{
                        [v](const test_fn::HatOnBall& h) {
                          const double d = std::abs(v - h.center);
                          if (d <= h.inner) return 1.0;
                          if (d >= h.outer) return 0.0;
                          return (h.outer - d) / (h.outer - h.inner);
                        },
                        [v](const test_fn::PowerTruncated& p) {
                          const double w = cutoff_weight(p.R, v);
                          return w == 0.0 ? 0.0 : w * std::pow(v, p.m);
                        },
                    },
                    phi);
}

double support_upper(const TestFunction& phi) {
  return std::visit(overloaded{
                        [](const test_fn::HatOnBall& h) { return h.center + h.outer; },
                        [](const test_fn::PowerTruncated& p) { return p.R + 1.0; },
                    },
                    phi);
}

double weak_form_residual(const Trajectory& traj, const Kernel& kernel, const TestFunction& phi, double t) {
  validate_phi(phi);
  if (traj.times.empty()) throw DomainError("weak_form_residual: empty trajectory");
  if (!(t >= 0.0) || t > traj.times.back() * (1.0 + 1e-12))
    throw DomainError("weak_form_residual: t outside the trajectory");
  if (support_upper(phi) > traj.v_max)
    throw DomainError("weak_form_residual: test function support exceeds the truncation volume");

  const Grid& grid = traj.states.front().grid;
  const std::size_t n = grid.size();
  std::vector<double> phi_at(n);
  for (std::size_t i = 0; i < n; ++i) phi_at[i] = evaluate(phi, grid.pivots[i]);
  // Pairing matrix K * Theta_phi at pivot pairs.
  std::vector<double> pairing(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j; k < n; ++k) {
      const double p = grid.pivots[j], q = grid.pivots[k];
      const double theta = evaluate(phi, p + q) - phi_at[j] - phi_at[k];
      pairing[j * n + k] = pairing[k * n + j] = theta == 0.0 ? 0.0 : kernel(p, q) * theta;
    }

  auto rate = [&](const SizeDistribution& d) {
    const std::vector<double> N = d.numbers();
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (N[j] == 0.0) continue;
      double row = 0.0;
      for (std::size_t k = 0; k < n; ++k) row += pairing[j * n + k] * N[k];
      s += N[j] * row;
    }
    return 0.5 * s;
  };
  auto pairing_phi = [&](const SizeDistribution& d) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += phi_at[i] * d.number(i);
    return s;
  };

  double integral = 0.0;
  double prev_rate = rate(traj.states.front());
  double prev_t = traj.times.front();
  SizeDistribution at_t = traj.states.front();
  for (std::size_t s = 1; s < traj.times.size() && prev_t < t; ++s) {
    const double ts = std::min(traj.times[s], t);
    at_t = ts == traj.times[s] ? traj.states[s] : traj.state_at(ts);
    const double r = rate(at_t);
    integral += 0.5 * (ts - prev_t) * (prev_rate + r);
    prev_rate = r;
    prev_t = ts;
  }
  return std::abs(pairing_phi(at_t) - pairing_phi(traj.states.front()) - integral);
}

}  // namespace gelab
