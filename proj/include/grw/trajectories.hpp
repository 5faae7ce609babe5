#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "grw/analytic.hpp"
#include "grw/core_model.hpp"
#include "grw/gaussian_state.hpp"

namespace grw {

using State = GaussianState<double>;

/// Independent random stream for one trajectory. The engine seed is derived
/// from (seed, stream) with SplitMix64, so trajectory i draws the same numbers
/// no matter which worker runs it.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  double exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }
  double normal(double mean, double sd) { return std::normal_distribution<double>(mean, sd)(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

inline constexpr double kNoHit = std::numeric_limits<double>::infinity();

/// Exponential waiting time with mean 1/rate; kNoHit when rate is zero.
double sample_hit_time(double rate, RngStream& rng);

struct HitEvent {
  double time;
  double center;
};

/// Samples a hit center from the predictive law and localizes the state.
std::pair<State, HitEvent> apply_hit(const State& state, const CollapseParams& cp, double hbar, RngStream& rng);

struct MomentEstimate {
  double mean = 0.0;
  double se = 0.0;
};

struct EnsembleRow {
  double time = 0.0;
  MomentEstimate q, q2, p, p2, qp;
};

struct EnsembleStats {
  std::size_t n_traj = 0;
  std::uint64_t seed = 0;
  std::vector<EnsembleRow> rows;
};

struct EnsembleOptions {
  unsigned workers = 0;  // 0: hardware concurrency
  std::size_t max_hits_per_trajectory = 10'000'000;
};

/// One trajectory in the caller's units: states at each grid time plus the hit log.
struct Trajectory {
  std::vector<State> states;
  std::vector<HitEvent> hits;
};

Trajectory simulate_trajectory(const WavepacketParams& wp, const CollapseParams& cp, const UnitSystem& units,
                               const std::vector<double>& t_grid, std::uint64_t seed, std::uint64_t index);

/// Mean and standard error of the quantum second moments over n_traj
/// trajectories. Bit-reproducible for a fixed seed at any worker count.
EnsembleStats run_ensemble(const WavepacketParams& wp, const CollapseParams& cp, const UnitSystem& units,
                           const std::vector<double>& t_grid, std::size_t n_traj, std::uint64_t seed,
                           const EnsembleOptions& options = {});

/// Final states of n_traj trajectories at time t, in trajectory order.
std::vector<State> sample_final_states(const WavepacketParams& wp, const CollapseParams& cp, const UnitSystem& units,
                                       double t, std::size_t n_traj, std::uint64_t seed,
                                       const EnsembleOptions& options = {});

}  // namespace grw
