#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gelab/kernels.hpp"
#include "gelab/measures.hpp"

namespace gelab {

struct McConfig {
  std::int64_t n_particles = 1000;
  double t_end = 1.0;
  double theta = 0.2;  // giant-particle fraction of the total volume
  std::uint64_t seed = 0;
  int n_replicas = 1;

  // Throws ConfigError.
  void validate() const;
};

// SplitMix64 applied to a counter, keyed by (seed, stream). Streams with
// different keys are independent for all practical purposes, and a stream's
// output depends only on the key and the draw index.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next_u64() noexcept;
  // 53-bit uniform on [0, 1).
  double uniform() noexcept;
  // Unit-mean exponential.
  double exponential() noexcept;

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Volumes are integer multiples of a power-of-two quantum so that merging is
// exact integer addition.
struct ParticleSystem {
  std::vector<std::int64_t> ticks;
  double quantum = 1.0;
  std::int64_t n_initial = 0;
  double clock = 0.0;
  CounterRng rng{0, 0};

  std::size_t size() const noexcept { return ticks.size(); }
  double volume(std::size_t i) const { return static_cast<double>(ticks[i]) * quantum; }
  std::int64_t total_ticks() const;
  double total_volume() const { return static_cast<double>(total_ticks()) * quantum; }
};

// Atoms: proportional allocation with largest-remainder rounding (ties go to
// the earlier atom). Densities: inverse-transform sampling from the stream
// keyed by (config.seed, replica).
ParticleSystem init_system(const InitialSpec& spec, const McConfig& config, std::uint64_t replica = 0);

// Builds a system from explicit volumes (all positive).
ParticleSystem system_from_volumes(const std::vector<double>& volumes, std::uint64_t seed,
                                   std::uint64_t stream = 0);

struct CoalescenceEvent {
  double time;
  double v_small;
  double v_large;
  double v_merged;
};

struct EventLog {
  std::int64_t n_initial = 0;
  double total_volume = 0.0;
  double initial_largest = 0.0;
  std::vector<CoalescenceEvent> events;
  std::size_t final_count = 0;
  double largest_final = 0.0;
  double end_time = 0.0;
};

struct SimulateOptions {
  // Stop right after the first event that creates a particle above
  // theta * total volume.
  bool stop_at_giant = false;
  // Full rate-table recompute period in events; 0 means n_initial.
  std::size_t refresh_every = 0;
};

// Direct-method Marcus-Lushnikov simulation: pair (i,j) merges at rate
// K(v_i,v_j)/n_initial. Runs to config.t_end or a single particle.
EventLog simulate(ParticleSystem system, const Kernel& kernel, const McConfig& config,
                  const SimulateOptions& options = {});

// First time the largest particle exceeds theta * total volume; 0 when the
// initial system already holds such a particle.
std::optional<double> detect_gelation(const EventLog& log, double theta);

// Particles alive at time t.
std::int64_t particle_count_at(const EventLog& log, double t);

struct ReplicaOutcome {
  std::optional<double> t_gel;
  double largest_final = 0.0;
  std::size_t events = 0;
};

struct EnsembleResult {
  std::vector<ReplicaOutcome> replicas;  // by replica index
  std::size_t censored = 0;
  bool all_censored = false;
  // Order statistics with censored replicas counted as +inf; unset when every
  // replica is censored.
  std::optional<double> median;
  std::optional<double> q1;
  std::optional<double> q3;
};

// Replica r draws from the stream (config.seed, r). Results do not depend on
// the thread count.
EnsembleResult ensemble_tgel(const InitialSpec& spec, const Kernel& kernel, const McConfig& config,
                             int threads = 1);

// Linear-interpolation quantile (the usual "type 7") of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace gelab
