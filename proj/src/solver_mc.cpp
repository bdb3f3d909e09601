#include "gelab/solver_mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "gelab/error.hpp"

namespace gelab {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Power-of-two quantum leaving total ticks below 2^52, with headroom for the
// per-particle rounding, so every tick count and every merged volume is also
// exact in double.
double quantum_for(double total) {
  int e = 0;
  std::frexp(total, &e);
  return std::ldexp(1.0, e - 52);
}

ParticleSystem from_volumes(const std::vector<double>& volumes, CounterRng rng, std::int64_t n_initial) {
  double total = 0.0;
  for (double v : volumes) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("particle volumes must be positive and finite");
    total += v;
  }
  ParticleSystem s;
  s.quantum = quantum_for(total);
  s.ticks.reserve(volumes.size());
  for (double v : volumes) s.ticks.push_back(std::max<std::int64_t>(1, std::llround(v / s.quantum)));
  s.n_initial = n_initial;
  s.rng = rng;
  return s;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void McConfig::validate() const {
  if (n_particles < 2) throw ConfigError("mc.n_particles must be at least 2");
  if (!(t_end >= 0.0)) throw ConfigError("mc.t_end must be >= 0");
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("diagnostics.theta must lie in (0,1)");
  if (n_replicas < 1) throw ConfigError("mc.n_replicas must be at least 1");
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(mix64(seed ^ mix64(stream * kGolden + 0x632BE59BD9B4E019ULL))) {}

std::uint64_t CounterRng::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::exponential() noexcept { return -std::log1p(-uniform()); }

std::int64_t ParticleSystem::total_ticks() const {
  return std::accumulate(ticks.begin(), ticks.end(), std::int64_t{0});
}

ParticleSystem system_from_volumes(const std::vector<double>& volumes, std::uint64_t seed, std::uint64_t stream) {
  return from_volumes(volumes, CounterRng(seed, stream), static_cast<std::int64_t>(volumes.size()));
}

ParticleSystem init_system(const InitialSpec& spec, const McConfig& config, std::uint64_t replica) {
  config.validate();
  CounterRng rng(config.seed, replica);
  const auto n = config.n_particles;
  std::vector<double> volumes;
  volumes.reserve(static_cast<std::size_t>(n));
  std::visit(overloaded{
                 [&](const init::Dirac& d) {
                   double W = 0.0;
                   for (const Atom& a : d.atoms) {
                     if (!(a.weight >= 0.0)) throw DomainError("dirac init: negative weight");
                     if (!(a.volume > 0.0)) throw DomainError("dirac init: volumes must be positive");
                     W += a.weight;
                   }
                   if (!(W > 0.0)) throw EmptyMeasureError("dirac init: weights sum to zero");
                   std::vector<std::int64_t> alloc(d.atoms.size());
                   std::vector<std::pair<double, std::size_t>> rem;
                   std::int64_t used = 0;
                   for (std::size_t i = 0; i < d.atoms.size(); ++i) {
                     const double share = static_cast<double>(n) * d.atoms[i].weight / W;
                     alloc[i] = static_cast<std::int64_t>(std::floor(share));
                     used += alloc[i];
                     rem.emplace_back(share - std::floor(share), i);
                   }
                   std::stable_sort(rem.begin(), rem.end(),
                                    [](const auto& a, const auto& b) { return a.first > b.first; });
                   for (std::size_t r = 0; used < n; ++r, ++used) ++alloc[rem[r % rem.size()].second];
                   for (std::size_t i = 0; i < d.atoms.size(); ++i)
                     volumes.insert(volumes.end(), static_cast<std::size_t>(alloc[i]), d.atoms[i].volume);
                 },
                 [&](const init::Exponential& e) {
                   if (!(e.mean > 0.0)) throw DomainError("exponential init: mean must be positive");
                   for (std::int64_t i = 0; i < n; ++i) volumes.push_back(e.mean * rng.exponential());
                 },
                 [&](const init::Uniform& u) {
                   if (!(u.upper > u.lower) || !(u.lower >= 0.0))
                     throw DomainError("uniform init: need 0 <= lower < upper");
                   for (std::int64_t i = 0; i < n; ++i)
                     volumes.push_back(u.lower + (u.upper - u.lower) * rng.uniform());
                 },
             },
             spec);
  // A zero draw would give a zero volume; from_volumes rounds up to one tick.
  for (double& v : volumes) v = std::max(v, std::numeric_limits<double>::min());
  return from_volumes(volumes, rng, n);
}

EventLog simulate(ParticleSystem system, const Kernel& kernel, const McConfig& config,
                  const SimulateOptions& options) {
  if (!(config.t_end >= 0.0)) throw ConfigError("mc.t_end must be >= 0");
  EventLog log;
  log.n_initial = system.n_initial;
  log.total_volume = system.total_volume();
  const double q = system.quantum;
  auto& ticks = system.ticks;
  std::size_t n = ticks.size();
  for (auto t : ticks) log.initial_largest = std::max(log.initial_largest, static_cast<double>(t) * q);

  std::vector<Kernel::Prepared> prep(n);
  for (std::size_t i = 0; i < n; ++i) prep[i] = kernel.prepare(static_cast<double>(ticks[i]) * q);
  std::vector<double> rate(n, 0.0);
  std::vector<double> row(n, 0.0);

  auto refresh = [&] {
    std::fill(rate.begin(), rate.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double k = kernel.pair(prep[i], prep[j]);
        rate[i] += k;
        rate[j] += k;
      }
  };
  refresh();

  const double scale = 1.0 / static_cast<double>(system.n_initial);
  const std::size_t period = options.refresh_every ? options.refresh_every
                                                   : static_cast<std::size_t>(std::max<std::int64_t>(1, system.n_initial));
  const double giant = config.theta * log.total_volume;
  double t = system.clock;
  bool stopped_early = false;
  std::size_t since_refresh = 0;

  while (n >= 2) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += rate[i];
    if (!(total > 0.0)) break;
    t += system.rng.exponential() / (0.5 * total * scale);
    if (t > config.t_end) break;

    // First particle with probability rate_i / total.
    const double u = system.rng.uniform() * total;
    std::size_t i = n;
    double acc = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      acc += rate[l];
      if (rate[l] > 0.0) i = l;
      if (u < acc && rate[l] > 0.0) break;
    }
    // Partner with probability K_ij / sum_l K_il, using the exact row.
    double row_sum = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      row[l] = l == i ? 0.0 : kernel.pair(prep[i], prep[l]);
      row_sum += row[l];
    }
    if (!(row_sum > 0.0)) {
      // Accumulated drift attributed rate to a dead row.
      refresh();
      since_refresh = 0;
      continue;
    }
    const double u2 = system.rng.uniform() * row_sum;
    std::size_t j = n;
    acc = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      acc += row[l];
      if (row[l] > 0.0) j = l;
      if (u2 < acc && row[l] > 0.0) break;
    }

    const Kernel::Prepared old_j = prep[j];
    const std::int64_t merged = ticks[i] + ticks[j];
    const double vi = static_cast<double>(ticks[i]) * q;
    const double vj = static_cast<double>(ticks[j]) * q;
    const double vm = static_cast<double>(merged) * q;
    log.events.push_back(CoalescenceEvent{t, std::min(vi, vj), std::max(vi, vj), vm});

    ticks[i] = merged;
    prep[i] = kernel.prepare(vm);
    double new_rate = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      if (l == i || l == j) continue;
      const double k_new = kernel.pair(prep[l], prep[i]);
      rate[l] += k_new - row[l] - kernel.pair(prep[l], old_j);
      new_rate += k_new;
    }
    rate[i] = new_rate;

    // Drop j by moving the last particle into its slot.
    const std::size_t last = n - 1;
    if (j != last) {
      ticks[j] = ticks[last];
      prep[j] = prep[last];
      rate[j] = rate[last];
    }
    ticks.pop_back();
    --n;

    if (vm > giant && options.stop_at_giant) {
      stopped_early = true;
      break;
    }
    if (++since_refresh >= period) {
      refresh();
      since_refresh = 0;
    }
  }

  log.final_count = n;
  for (std::size_t l = 0; l < n; ++l) log.largest_final = std::max(log.largest_final, static_cast<double>(ticks[l]) * q);
  log.end_time = stopped_early ? t : config.t_end;
  return log;
}

std::optional<double> detect_gelation(const EventLog& log, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("detect_gelation: theta must lie in (0,1)");
  const double giant = theta * log.total_volume;
  if (log.initial_largest > giant) return 0.0;
  for (const auto& e : log.events)
    if (e.v_merged > giant) return e.time;
  return std::nullopt;
}

std::int64_t particle_count_at(const EventLog& log, double t) {
  const auto it = std::upper_bound(log.events.begin(), log.events.end(), t,
                                   [](double x, const CoalescenceEvent& e) { return x < e.time; });
  return log.n_initial - static_cast<std::int64_t>(it - log.events.begin());
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InsufficientDataError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double s = h - static_cast<double>(lo);
  if (s == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
  if (std::isinf(sorted[hi])) return sorted[hi];
  return sorted[lo] + s * (sorted[hi] - sorted[lo]);
}

EnsembleResult ensemble_tgel(const InitialSpec& spec, const Kernel& kernel, const McConfig& config, int threads) {
  config.validate();
  const auto R = static_cast<std::size_t>(config.n_replicas);
  EnsembleResult out;
  out.replicas.resize(R);
  SimulateOptions opts;
  opts.stop_at_giant = true;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < R; r = next++) {
      const EventLog log = simulate(init_system(spec, config, r), kernel, config, opts);
      out.replicas[r] = ReplicaOutcome{detect_gelation(log, config.theta), log.largest_final, log.events.size()};
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::clamp(threads, 1, config.n_replicas));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<double> values;
  for (const auto& rep : out.replicas) {
    if (!rep.t_gel) ++out.censored;
    values.push_back(rep.t_gel.value_or(std::numeric_limits<double>::infinity()));
  }
  out.all_censored = out.censored == R;
  if (!out.all_censored) {
    std::sort(values.begin(), values.end());
    out.q1 = quantile_sorted(values, 0.25);
    out.median = quantile_sorted(values, 0.5);
    out.q3 = quantile_sorted(values, 0.75);
  }
  return out;
}

}  // namespace gelab
