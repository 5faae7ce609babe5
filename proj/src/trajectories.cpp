#include "grw/trajectories.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace grw {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t key = splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double sample_hit_time(double rate, RngStream& rng) {
  if (!(rate >= 0.0)) throw DomainError("hit rate must be >= 0");
  if (rate == 0.0) return kNoHit;
  return rng.exponential(rate);
}

std::pair<State, HitEvent> apply_hit(const State& state, const CollapseParams& cp, double hbar, RngStream& rng) {
  const double alpha = cp.alpha();
  const auto law = hit_center_law(state, alpha);
  const double x = rng.normal(law.mean, std::sqrt(law.variance));
  return {localize(state, alpha, x, hbar), HitEvent{state.time, x}};
}

namespace {

// Natural-unit view of a run; converts results back to the caller's units.
struct Frame {
  NaturalParams np;
  double rate = 0.0;

  Frame(const WavepacketParams& wp, const CollapseParams& cp, const UnitSystem& units)
      : np(to_natural(cp, wp, units, natural_scales(wp, units))),
        rate(np.wavepacket.effective_rate(np.collapse)) {}

  double length() const { return np.scales.length; }
  double time() const { return np.scales.time; }
  double momentum() const { return np.mass_unit * np.scales.length / np.scales.time; }

  std::vector<double> to_natural_times(const std::vector<double>& t) const {
    std::vector<double> out(t.size());
    std::transform(t.begin(), t.end(), out.begin(), [&](double x) { return x / time(); });
    return out;
  }

  State to_caller(const State& s) const {
    State out;
    out.inv_width = s.inv_width / (length() * length());
    out.center = s.center * length();
    out.momentum = s.momentum * momentum();
    out.time = s.time * time();
    return out;
  }
};

void validate_grid(const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw DomainError("time grid is empty");
  if (!(t_grid.front() >= 0.0)) throw DomainError("time grid must start at t >= 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw DomainError("time grid must be strictly ascending");
  }
}

class HitBudgetExceeded : public std::exception {};

// Event-driven walk in natural units: free flight between exponential hit
// times, a localization at each hit, a record at each grid time.
template <typename Record>
void walk(const Frame& f, const std::vector<double>& grid, RngStream& rng, std::size_t max_hits, Record&& record,
          std::vector<HitEvent>* log) {
  const double hbar = f.np.hbar;
  const double mass = f.np.wavepacket.mass;
  State s = State::minimum_uncertainty(f.np.wavepacket);
  double next_hit = sample_hit_time(f.rate, rng);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    while (next_hit <= grid[i]) {
      s = free_evolve(s, next_hit - s.time, mass, hbar);
      s.time = next_hit;
      auto [post, event] = apply_hit(s, f.np.collapse, hbar, rng);
      s = post;
      if (log) log->push_back(event);
      if (++hits > max_hits) throw HitBudgetExceeded{};
      next_hit += sample_hit_time(f.rate, rng);
    }
    s = free_evolve(s, grid[i] - s.time, mass, hbar);
    s.time = grid[i];
    record(i, s);
  }
}

struct Accumulator {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean);
  }

  void merge(const Accumulator& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double total = n + o.n;
    const double delta = o.mean - mean;
    mean += delta * o.n / total;
    m2 += o.m2 + delta * delta * n * o.n / total;
    n = total;
  }

  MomentEstimate estimate(double scale) const {
    const double se = n > 1.0 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
    return {mean * scale, se * std::abs(scale)};
  }
};

constexpr std::size_t kBlockSize = 1024;

unsigned resolve_workers(unsigned requested, std::size_t jobs) {
  unsigned w = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(jobs, 1)));
}

// Runs job(i) for i in [0, jobs) on `workers` threads. The first exception
// stops further scheduling and is rethrown after all threads join.
template <typename Job>
void parallel_for(std::size_t jobs, unsigned workers, Job&& job) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop.store(true);
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

Trajectory simulate_trajectory(const WavepacketParams& wp, const CollapseParams& cp, const UnitSystem& units,
                               const std::vector<double>& t_grid, std::uint64_t seed, std::uint64_t index) {
  validate_grid(t_grid);
  const Frame f(wp, cp, units);
  RngStream rng(seed, index);
  Trajectory out;
  walk(
      f, f.to_natural_times(t_grid), rng, std::numeric_limits<std::size_t>::max(),
      [&](std::size_t, const State& s) { out.states.push_back(f.to_caller(s)); }, &out.hits);
  for (auto& h : out.hits) {
    h.time *= f.time();
    h.center *= f.length();
  }
  return out;
}

EnsembleStats run_ensemble(const WavepacketParams& wp, const CollapseParams& cp, const UnitSystem& units,
                           const std::vector<double>& t_grid, std::size_t n_traj, std::uint64_t seed,
                           const EnsembleOptions& options) {
  if (n_traj < 1) throw DomainError("n_traj must be >= 1");
  validate_grid(t_grid);
  const Frame f(wp, cp, units);
  const auto grid = f.to_natural_times(t_grid);
  const std::size_t n_times = grid.size();

  using Block = std::vector<std::array<Accumulator, 5>>;
  const std::size_t n_blocks = (n_traj + kBlockSize - 1) / kBlockSize;
  std::vector<Block> blocks(n_blocks, Block(n_times));
  std::atomic<std::size_t> completed{0};

  try {
    parallel_for(n_blocks, resolve_workers(options.workers, n_blocks), [&](std::size_t b) {
      Block& acc = blocks[b];
      const std::size_t end = std::min(n_traj, (b + 1) * kBlockSize);
      for (std::size_t i = b * kBlockSize; i < end; ++i) {
        RngStream rng(seed, i);
        walk(
            f, grid, rng, options.max_hits_per_trajectory,
            [&](std::size_t k, const State& s) {
              const auto m = s.moments(f.np.hbar);
              acc[k][0].add(m.mean_q);
              acc[k][1].add(m.mean_q2);
              acc[k][2].add(m.mean_p);
              acc[k][3].add(m.mean_p2);
              acc[k][4].add(m.mean_qp_sym);
            },
            nullptr);
        completed.fetch_add(1);
      }
    });
  } catch (const HitBudgetExceeded&) {
    throw EnsembleLimitError("hit budget per trajectory exceeded", completed.load());
  }

  // Fixed-order reduction over blocks.
  Block total(n_times);
  for (const auto& b : blocks) {
    for (std::size_t k = 0; k < n_times; ++k) {
      for (std::size_t j = 0; j < 5; ++j) total[k][j].merge(b[k][j]);
    }
  }

  const double L = f.length();
  const double P = f.momentum();
  EnsembleStats stats;
  stats.n_traj = n_traj;
  stats.seed = seed;
  stats.rows.reserve(n_times);
  for (std::size_t k = 0; k < n_times; ++k) {
    EnsembleRow row;
    row.time = t_grid[k];
    row.q = total[k][0].estimate(L);
    row.q2 = total[k][1].estimate(L * L);
    row.p = total[k][2].estimate(P);
    row.p2 = total[k][3].estimate(P * P);
    row.qp = total[k][4].estimate(L * P);
    stats.rows.push_back(row);
  }
  return stats;
}

std::vector<State> sample_final_states(const WavepacketParams& wp, const CollapseParams& cp, const UnitSystem& units,
                                       double t, std::size_t n_traj, std::uint64_t seed,
                                       const EnsembleOptions& options) {
  if (n_traj < 1) throw DomainError("n_traj must be >= 1");
  const std::vector<double> t_grid{t};
  validate_grid(t_grid);
  const Frame f(wp, cp, units);
  const auto grid = f.to_natural_times(t_grid);
  std::vector<State> out(n_traj);
  std::atomic<std::size_t> completed{0};
  try {
    parallel_for(n_traj, resolve_workers(options.workers, n_traj), [&](std::size_t i) {
      RngStream rng(seed, i);
      walk(
          f, grid, rng, options.max_hits_per_trajectory,
          [&](std::size_t, const State& s) { out[i] = f.to_caller(s); }, nullptr);
      completed.fetch_add(1);
    });
  } catch (const HitBudgetExceeded&) {
    throw EnsembleLimitError("hit budget per trajectory exceeded", completed.load());
  }
  return out;
}

}  // namespace grw
