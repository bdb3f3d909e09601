#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "gelab/cli.hpp"
#include "gelab/error.hpp"
#include "internal/svg.hpp"

namespace gelab::cli {

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written to slot i so aggregation order does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string fmt_opt(const std::optional<double>& v, const char* missing) {
  return v ? format_double(*v) : std::string(missing);
}

std::string tag(double v) { return format_double(v); }

void fv_diagnostics(const RunConfig& c, const Trajectory& traj, std::vector<DiagnosticRow>& rows,
                    std::vector<Artifact>& plots) {
  const std::string id = "fv";
  const GelationEstimate est = gelation_time_from_series(traj, c.diag.epsilon);
  rows.push_back({id, "steps", std::to_string(traj.steps)});
  rows.push_back({id, "gelation_runaway", traj.gelation_runaway ? "true" : "false"});
  rows.push_back({id, "last_valid_time", format_double(traj.last_valid_time)});
  rows.push_back({id, "t_gel_eps", fmt_opt(est.t_gel_eps, "none")});

  const SizeDistribution& last = traj.states.back();
  if (!c.diag.R_values.empty()) {
    std::vector<double> I;
    for (double R : c.diag.R_values) {
      I.push_back(cutoff_pair(last, R).I);
      rows.push_back({id, "I_R=" + tag(R), format_double(I.back())});
    }
    const double gamma = c.kernel.homogeneous() ? c.kernel.degree() : homogeneity_degree(c.kernel);
    try {
      const DecayFit fit = tail_decay_fit(c.diag.R_values, I, gamma);
      rows.push_back({id, "tail_slope", format_double(fit.slope)});
      rows.push_back({id, "tail_intercept", format_double(fit.intercept)});
      rows.push_back({id, "tail_r_squared", format_double(fit.r_squared)});
    } catch (const InsufficientDataError&) {
      rows.push_back({id, "tail_fit", "insufficient_data"});
    }
    plots.push_back({"tail_decay.svg", svg::line_plot({"Mass above the cutoff at the final sample", "R", "I_R",
                                                       false, true, true},
                                                      {{"I_R", c.diag.R_values, I}})});
  }
  if (!c.diag.m_values.empty()) {
    KernelConstants kc;
    bool usable = true;
    try {
      const KernelParams p = derived_params(c.kernel);
      kc = KernelConstants{p.H0, p.G0, p.k, p.gamma, p.H};
      usable = p.gamma > 1.0 && p.G0 > 0.0;
    } catch (const Error&) {
      usable = false;
    }
    const double v0 = traj.diagnostics.front().M1_in + traj.diagnostics.front().gel_mass;
    for (double m : c.diag.m_values) {
      const std::string key = "blowup_m=" + tag(m);
      if (!usable || !(m > 2.0)) {
        rows.push_back({id, key, "not_applicable"});
        continue;
      }
      const BlowupBound b = blowup_time_bound(last, traj.times.back(), c.diag.blowup_R, m, kc, v0);
      rows.push_back({id, key + ":bound", format_double(b.bound)});
      rows.push_back({id, key + ":k_m", format_double(b.k_m)});
      rows.push_back({id, key + ":R_above_crossover", b.R_above_crossover ? "true" : "false"});
      rows.push_back({id, key + ":dini_ok", b.dini_ok ? "true" : "false"});
    }
  }
}

Report simulate_fv(const RunConfig& c) {
  Report rep;
  const SizeDistribution init = initial_state(c.init, c.fv);
  const Trajectory traj = run(init, c.kernel, c.fv);
  std::vector<DiagnosticRow> rows;
  std::vector<Artifact> plots;
  fv_diagnostics(c, traj, rows, plots);

  std::vector<double> m1, gel, m0;
  for (const auto& d : traj.diagnostics) m0.push_back(d.M0), m1.push_back(d.M1_in), gel.push_back(d.gel_mass);
  rep.artifacts.push_back({"trajectory.csv", trajectory_csv(traj)});
  rep.artifacts.push_back({"final_distribution.csv", distribution_csv(traj.states.back())});
  rep.artifacts.push_back({"diagnostics.csv", diagnostics_csv(rows)});
  rep.artifacts.push_back({"trajectory.svg", svg::line_plot({"Moment ledger", "t", "value", false, false, false},
                                                            {{"M0", traj.times, m0},
                                                             {"M1 in domain", traj.times, m1},
                                                             {"gel mass", traj.times, gel}})});
  for (auto& p : plots) rep.artifacts.push_back(std::move(p));
  rep.runs.push_back({"fv", traj.gelation_runaway ? "gelation_runaway" : "ok"});
  rep.summary.push_back("steps=" + std::to_string(traj.steps) + " t_end=" + format_double(traj.times.back()));
  for (const auto& r : rows)
    if (r.name == "t_gel_eps") rep.summary.push_back("t_gel_eps=" + r.value);
  if (traj.gelation_runaway) {
    rep.summary.push_back("stability bound collapsed at t=" + format_double(traj.last_valid_time));
    rep.exit_code = 3;
  }
  return rep;
}

Report simulate_mc(const RunConfig& c) {
  Report rep;
  McConfig mc = c.mc;
  mc.seed = c.seed;
  const auto R = static_cast<std::size_t>(mc.n_replicas);
  std::vector<EventLog> logs(R);
  parallel_for(R, c.threads, [&](std::size_t r) { logs[r] = simulate(init_system(c.init, mc, r), c.kernel, mc); });

  EnsembleResult ens;
  std::vector<DiagnosticRow> rows;
  for (std::size_t r = 0; r < R; ++r) {
    const auto tg = detect_gelation(logs[r], mc.theta);
    ens.replicas.push_back({tg, logs[r].largest_final, logs[r].events.size()});
    const std::string id = "replica=" + std::to_string(r);
    rows.push_back({id, "events", std::to_string(logs[r].events.size())});
    rows.push_back({id, "final_count", std::to_string(logs[r].final_count)});
    rows.push_back({id, "t_giant", fmt_opt(tg, "none")});
    rep.runs.push_back({id, "ok"});
  }
  rep.artifacts.push_back({"events.csv", events_csv(logs.front())});
  rep.artifacts.push_back({"ensemble.csv", ensemble_csv(ens)});
  rep.artifacts.push_back({"diagnostics.csv", diagnostics_csv(rows)});

  std::vector<double> t{0.0}, n{static_cast<double>(logs.front().n_initial)};
  for (std::size_t i = 0; i < logs.front().events.size(); ++i) {
    t.push_back(logs.front().events[i].time);
    n.push_back(static_cast<double>(logs.front().n_initial) - static_cast<double>(i + 1));
  }
  rep.artifacts.push_back(
      {"particle_count.svg", svg::line_plot({"Particle count, replica 0", "t", "particles", false, false, false},
                                            {{"count", t, n}})});
  rep.summary.push_back("replica 0: " + std::to_string(logs.front().events.size()) + " events, " +
                        std::to_string(logs.front().final_count) + " particles left");
  return rep;
}

Report sweep_vmax(const RunConfig& c) {
  Report rep;
  std::vector<double> vmaxes = c.sweep_vmax;
  std::sort(vmaxes.begin(), vmaxes.end());
  vmaxes.erase(std::unique(vmaxes.begin(), vmaxes.end()), vmaxes.end());
  std::vector<Trajectory> trajs(vmaxes.size());
  parallel_for(vmaxes.size(), c.threads, [&](std::size_t i) {
    FvConfig fv = c.fv;
    fv.v_max = vmaxes[i];
    trajs[i] = run(initial_state(c.init, fv), c.kernel, fv);
  });

  std::vector<GelationEstimate> est;
  std::vector<DiagnosticRow> rows;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < vmaxes.size(); ++i) {
    est.push_back(gelation_time_from_series(trajs[i], c.diag.epsilon));
    const std::string id = "v_max=" + tag(vmaxes[i]);
    rows.push_back({id, "t_gel_eps", fmt_opt(est.back().t_gel_eps, "none")});
    rows.push_back({id, "steps", std::to_string(trajs[i].steps)});
    rep.runs.push_back({id, trajs[i].gelation_runaway ? "gelation_runaway" : "ok"});
    if (trajs[i].gelation_runaway) rep.exit_code = 3;
    if (est.back().t_gel_eps) xs.push_back(vmaxes[i]), ys.push_back(*est.back().t_gel_eps);
    rep.summary.push_back(id + " t_gel_eps=" + fmt_opt(est.back().t_gel_eps, "none"));
  }
  rep.artifacts.push_back({"sweep.csv", sweep_csv(est)});
  for (std::size_t i = 0; i < vmaxes.size(); ++i)
    rep.artifacts.push_back({"trajectory_vmax_" + tag(vmaxes[i]) + ".csv", trajectory_csv(trajs[i])});
  rep.artifacts.push_back({"diagnostics.csv", diagnostics_csv(rows)});
  rep.artifacts.push_back({"sweep.svg", svg::line_plot({"Gelation time against truncation", "v_max", "t_gel_eps",
                                                        true, true, true},
                                                       {{"t_gel_eps", xs, ys}})});
  return rep;
}

Report sweep_n(const RunConfig& c) {
  Report rep;
  std::vector<std::int64_t> ns = c.sweep_n;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::string table = "n_particles,median,q1,q3,censored\n";
  std::vector<DiagnosticRow> rows;
  std::vector<double> xs, ys;
  for (auto n : ns) {
    McConfig mc = c.mc;
    mc.seed = c.seed;
    mc.n_particles = n;
    const EnsembleResult ens = ensemble_tgel(c.init, c.kernel, mc, c.threads);
    const std::string id = "n=" + std::to_string(n);
    table += std::to_string(n) + "," + fmt_opt(ens.median, "censored") + "," + fmt_opt(ens.q1, "censored") + "," +
             fmt_opt(ens.q3, "censored") + "," + std::to_string(ens.censored) + "\n";
    rep.artifacts.push_back({"ensemble_n" + std::to_string(n) + ".csv", ensemble_csv(ens)});
    rows.push_back({id, "median_t_giant", fmt_opt(ens.median, "censored")});
    rows.push_back({id, "censored", std::to_string(ens.censored)});
    rep.runs.push_back({id, ens.all_censored ? "censored" : "ok"});
    if (ens.median && std::isfinite(*ens.median)) xs.push_back(static_cast<double>(n)), ys.push_back(*ens.median);
    rep.summary.push_back(id + " median=" + fmt_opt(ens.median, "censored"));
  }
  rep.artifacts.insert(rep.artifacts.begin(), Artifact{"sweep_n.csv", table});
  rep.artifacts.push_back({"diagnostics.csv", diagnostics_csv(rows)});
  rep.artifacts.push_back({"sweep_n.svg", svg::line_plot({"Median giant-particle time", "n", "median", true, false,
                                                          true},
                                                         {{"median", xs, ys}})});
  return rep;
}

Report certify_kernel(const RunConfig& c) {
  Report rep;
  const CertificateReport cert = certify_assumption(c.kernel, c.declared, c.sampling);
  rep.artifacts.push_back({"certificate.csv", certificate_csv(cert)});
  bool ok = true;
  for (const auto& b : cert.bounds) {
    if (b.status == BoundStatus::Pass) continue;
    if (b.name == "diagonal_vanishing" && !c.assert_diagonal_vanishing) continue;
    ok = false;
    rep.summary.push_back(b.name + " FAIL margin=" + format_double(b.margin) + " witness=(" +
                          format_double(b.witness_v) + "," + format_double(b.witness_vprime) + ")");
  }
  rep.runs.push_back({"certificate", ok ? "pass" : "fail"});
  if (!ok) rep.exit_code = 3;
  rep.summary.push_back(std::string("certificate ") + (ok ? "passed" : "failed") + " for " + cert.kernel_name);
  return rep;
}

Report cascade_probe(const RunConfig& c) {
  Report rep;
  const SizeDistribution init = initial_state(c.init, c.fv);
  const PairSearchResult found = find_separated_mass_pair(init, c.diag.search_L, c.diag.search_depth,
                                                          c.diag.search_extensions);
  std::vector<DiagnosticRow> rows;
  const double m0 = moment(init, 0.0);
  rows.push_back({"cascade", "M0_initial", format_double(m0)});
  if (const auto* single = std::get_if<SingleAtom>(&found)) {
    rows.push_back({"cascade", "pair", "single_atom"});
    rows.push_back({"cascade", "x0", format_double(single->x0)});
    rep.artifacts.push_back({"diagnostics.csv", diagnostics_csv(rows)});
    rep.runs.push_back({"cascade", "single_atom"});
    rep.summary.push_back("initial data is a single atom at " + format_double(single->x0) + "; no cascade");
    return rep;
  }
  if (const auto* ind = std::get_if<Indeterminate>(&found))
    throw IndeterminateError("separated pair search inconclusive up to horizon " + format_double(ind->horizon));
  const auto& pair = std::get<SeparatedPair>(found);
  rows.push_back({"cascade", "x1", format_double(pair.x1)});
  rows.push_back({"cascade", "x2", format_double(pair.x2)});
  rows.push_back({"cascade", "eta0", format_double(pair.eta0)});
  rows.push_back({"cascade", "depth", std::to_string(pair.depth)});

  const Trajectory traj = run(init, c.kernel, c.fv);
  if (traj.gelation_runaway && traj.last_valid_time < c.diag.cascade_t)
    throw NumericalFailure("stability bound collapsed before the probe time");
  const auto balls = positivity_cascade_probe(traj, pair, c.diag.cascade_t, c.diag.cascade_steps);
  std::string table = "step,center,radius,mass\n";
  std::vector<std::string> labels;
  std::vector<double> masses;
  const double floor = 1e-12 * m0;
  bool all_positive = true;
  for (std::size_t i = 0; i < balls.size(); ++i) {
    table += std::to_string(i + 1) + "," + format_double(balls[i].center) + "," + format_double(balls[i].radius) +
             "," + format_double(balls[i].mass) + "\n";
    labels.push_back(format_double(balls[i].center));
    masses.push_back(balls[i].mass);
    all_positive = all_positive && balls[i].mass > floor;
  }
  rows.push_back({"cascade", "all_above_floor", all_positive ? "true" : "false"});
  rep.artifacts.push_back({"cascade.csv", table});
  rep.artifacts.push_back({"diagnostics.csv", diagnostics_csv(rows)});
  rep.artifacts.push_back({"cascade.svg", svg::bar_chart({"Ball masses at t = " + format_double(c.diag.cascade_t),
                                                          "ball center", "number", false, true, false},
                                                         labels, masses)});
  rep.runs.push_back({"cascade", all_positive ? "ok" : "below_floor"});
  rep.summary.push_back(std::string("cascade masses ") + (all_positive ? "all above" : "not all above") +
                        " the floor " + format_double(floor));
  return rep;
}

}  // namespace

Report run_scenario(const RunConfig& config) {
  switch (config.scenario) {
    case Scenario::SimulateFv: return simulate_fv(config);
    case Scenario::SimulateMc: return simulate_mc(config);
    case Scenario::SweepVmax: return sweep_vmax(config);
    case Scenario::SweepN: return sweep_n(config);
    case Scenario::CertifyKernel: return certify_kernel(config);
    case Scenario::CascadeProbe: return cascade_probe(config);
  }
  throw ConfigError("unknown scenario");
}

}  // namespace gelab::cli
