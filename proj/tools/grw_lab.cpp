// grw_lab: command-line front end for the GRW collapse engines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "grw/analytic.hpp"
#include "grw/core_model.hpp"
#include "grw/errors.hpp"
#include "grw/io.hpp"
#include "grw/master_equation.hpp"
#include "grw/measurement.hpp"
#include "grw/scan.hpp"
#include "grw/trajectories.hpp"

namespace fs = std::filesystem;
using grw::io::json;

namespace {

struct Common {
  std::string config;
  std::string out_dir = ".";
  std::string units;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold_low, threshold_high;
  std::optional<double> lambda, r_c, mass, dq0, q0, p0;
  std::optional<long long> n_particles;
  std::string convention;
  bool svg = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value parameter file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "RNG seed (default 42)");
  cmd->add_option("--out-dir", c.out_dir, "directory for output files")->capture_default_str();
  cmd->add_option("--units", c.units, "unit system")->check(CLI::IsMember({"si", "natural"}));
  cmd->add_option("--threshold-low", c.threshold_low, "CQR below this is strongly quantum (default 1e-2)");
  cmd->add_option("--threshold-high", c.threshold_high, "CQR above this is strongly classical (default 1e2)");
  cmd->add_option("--lambda", c.lambda, "collapse rate [1/s]");
  cmd->add_option("--r-c", c.r_c, "collapse length [m]");
  cmd->add_option("--convention", c.convention, "collapse convention")
      ->check(CLI::IsMember({"plain", "mass_proportional"}));
  cmd->add_option("--mass", c.mass, "particle mass");
  cmd->add_option("--dq0", c.dq0, "initial width");
  cmd->add_option("--q0", c.q0, "initial mean position");
  cmd->add_option("--p0", c.p0, "initial mean momentum");
  cmd->add_option("--n-particles", c.n_particles, "particle count N (rate N*lambda)");
  cmd->add_flag("--svg", c.svg, "also write SVG plots");
}

// Config file first, then every flag given on the command line on top.
// Flag --foo-bar maps to config key foo_bar.
grw::KeyValueConfig merged_config(const Common& c, const CLI::App* cmd) {
  auto cfg = c.config.empty() ? grw::KeyValueConfig{} : grw::KeyValueConfig::from_file(c.config);
  static const std::vector<std::string> skip = {"config", "out-dir", "svg", "overlay", "schrodinger",
                                                "grid-check", "workers", "help"};
  for (const auto* opt : cmd->get_options()) {
    if (opt->count() == 0 || opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
    std::string key = name;
    std::replace(key.begin(), key.end(), '-', '_');
    cfg.set(key, opt->results().back());
  }
  return cfg;
}

std::uint64_t seed_of(const grw::KeyValueConfig& cfg) { return static_cast<std::uint64_t>(cfg.get_int("seed", 42)); }

grw::PhaseThresholds thresholds_of(const grw::KeyValueConfig& cfg) {
  grw::PhaseThresholds th{cfg.get_double("threshold_low", 1e-2), cfg.get_double("threshold_high", 1e2)};
  th.validate();
  return th;
}

fs::path prepare_out(const Common& c) {
  fs::path dir(c.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw grw::UsageError("cannot write '" + path.string() + "'");
  out << text;
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw grw::UsageError("cannot write '" + path.string() + "'");
  fn(out);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json base_metadata(const char* command, const grw::KeyValueConfig& cfg) {
  json meta = grw::io::metadata(command);
  json params = json::object();
  for (const auto& e : cfg.entries()) params[e.key] = e.value;
  meta["config"] = params;
  return meta;
}

std::vector<double> linear_times(double t_max, int points) {
  if (!(t_max > 0)) throw grw::UsageError("--t-max must be positive");
  if (points < 2) throw grw::UsageError("--points must be >= 2");
  std::vector<double> t(points);
  for (int i = 0; i < points; ++i) t[i] = t_max * i / (points - 1);
  return t;
}

// ---------------------------------------------------------------------------

struct TimeOpts {
  double t_max = 2.0;
  int points = 41;
  bool schrodinger = false;
};

int run_moments(const Common& c, const CLI::App* cmd, const TimeOpts& o) {
  const auto cfg = merged_config(c, cmd);
  const auto units = grw::units_from_config(cfg);
  const auto wp = grw::wavepacket_from_config(cfg);
  const auto cp = grw::collapse_from_config(cfg);
  std::vector<grw::MomentSet<double>> rows;
  for (double t : linear_times(cfg.get_double("t_max", o.t_max), static_cast<int>(cfg.get_int("points", o.points)))) {
    const auto s = grw::schrodinger_moments(wp, units.hbar, t);
    rows.push_back(o.schrodinger ? s : grw::grw_moments(wp, cp, units.hbar, s, t));
  }
  const auto dir = prepare_out(c);
  write_with(dir / "moments.csv", [&](std::ostream& out) { grw::io::write_moments_csv(out, rows); });
  json meta = base_metadata("moments", cfg);
  meta["collapse"] = grw::io::to_json(cp);
  meta["wavepacket"] = grw::io::to_json(wp);
  meta["units"] = grw::io::to_json(units);
  meta["schrodinger"] = o.schrodinger;
  write_json(dir / "moments.json", meta);
  if (c.svg) {
    grw::io::PlotSeries q2{"<q^2>", {}, {}};
    for (const auto& m : rows) {
      q2.x.push_back(m.time);
      q2.y.push_back(m.mean_q2);
    }
    write_text(dir / "moments.svg", grw::io::svg_line_plot({q2}, {"second moment of position", "t", "<q^2>"}));
  }
  return 0;
}

int run_width(const Common& c, const CLI::App* cmd, const TimeOpts& o) {
  const auto cfg = merged_config(c, cmd);
  const auto units = grw::units_from_config(cfg);
  const auto wp = grw::wavepacket_from_config(cfg);
  const auto cp = grw::collapse_from_config(cfg);
  grw::SpreadCurve<double> curve;
  for (double t : linear_times(cfg.get_double("t_max", o.t_max), static_cast<int>(cfg.get_int("points", o.points)))) {
    curve.push_back(o.schrodinger ? grw::schrodinger_spread(wp, units.hbar, t) : grw::grw_spread(wp, cp, units.hbar, t));
  }
  const auto dir = prepare_out(c);
  write_with(dir / "width.csv", [&](std::ostream& out) { grw::io::write_spread_csv(out, curve); });
  json meta = base_metadata("width", cfg);
  meta["collapse"] = grw::io::to_json(cp);
  meta["wavepacket"] = grw::io::to_json(wp);
  meta["units"] = grw::io::to_json(units);
  meta["schrodinger"] = o.schrodinger;
  if (cp.lambda > 0 && !o.schrodinger) meta["cqr_at_t_max"] = grw::cqr(wp, cp, curve.times.back());
  write_json(dir / "width.json", meta);
  if (c.svg) {
    grw::io::PlotSeries w{o.schrodinger ? "Schrodinger" : "GRW", curve.times, curve.widths};
    write_text(dir / "width.svg", grw::io::svg_line_plot({w}, {"wavepacket width", "t", "width"}));
  }
  return 0;
}

struct TrajOpts {
  TimeOpts time{2.0, 5, false};
  long long n_traj = 10000;
  unsigned workers = 0;
};

int run_trajectories(const Common& c, const CLI::App* cmd, const TrajOpts& o) {
  const auto cfg = merged_config(c, cmd);
  const auto units = grw::units_from_config(cfg);
  const auto wp = grw::wavepacket_from_config(cfg);
  const auto cp = grw::collapse_from_config(cfg);
  const auto seed = seed_of(cfg);
  const auto n_traj = cfg.get_int("n_traj", o.n_traj);
  if (n_traj < 2) throw grw::UsageError("--n-traj must be >= 2");
  const auto times =
      linear_times(cfg.get_double("t_max", o.time.t_max), static_cast<int>(cfg.get_int("points", o.time.points)));
  grw::EnsembleOptions opts;
  opts.workers = o.workers;
  const auto stats = grw::run_ensemble(wp, cp, units, times, static_cast<std::size_t>(n_traj), seed, opts);

  const auto dir = prepare_out(c);
  write_with(dir / "ensemble.csv", [&](std::ostream& out) { grw::io::write_ensemble_csv(out, stats); });
  json meta = base_metadata("trajectories", cfg);
  meta["seed"] = seed;
  meta["collapse"] = grw::io::to_json(cp);
  meta["wavepacket"] = grw::io::to_json(wp);
  meta["units"] = grw::io::to_json(units);
  meta["ensemble"] = grw::io::ensemble_json(stats);
  json analytic = json::array();
  for (double t : times) {
    analytic.push_back(grw::io::to_json(grw::grw_moments(wp, cp, units.hbar, grw::schrodinger_moments(wp, units.hbar, t), t)));
  }
  meta["analytic"] = analytic;
  write_json(dir / "ensemble.json", meta);
  if (c.svg) {
    grw::io::PlotSeries sim{"ensemble <q^2>", {}, {}}, exact{"analytic <q^2>", {}, {}, "#d62728", true};
    for (const auto& r : stats.rows) {
      sim.x.push_back(r.time);
      sim.y.push_back(r.q2.mean);
      exact.x.push_back(r.time);
      exact.y.push_back(grw::grw_moments(wp, cp, units.hbar, grw::schrodinger_moments(wp, units.hbar, r.time), r.time).mean_q2);
    }
    write_text(dir / "ensemble.svg", grw::io::svg_line_plot({sim, exact}, {"trajectory ensemble", "t", "<q^2>"}));
  }
  return 0;
}

struct RhoOpts {
  long long grid_points = 256;
  double half_width = 0.0;  // in units of dq0; 0 picks 12 dq0 + drift room
  double t_max = 1.0;
  double dt = 0.0;
  long long snapshots = 20;
};

int run_rho_evolve(const Common& c, const CLI::App* cmd, const RhoOpts& o) {
  const auto cfg = merged_config(c, cmd);
  const auto units = grw::units_from_config(cfg);
  const auto wp = grw::wavepacket_from_config(cfg);
  const auto cp = grw::collapse_from_config(cfg);
  // The grid runs in natural units (hbar = m = 1, length dq0).
  const auto scales = grw::natural_scales(wp, units);
  const auto np = grw::to_natural(cp, wp, units, scales);
  const double t_max = cfg.get_double("t_max", o.t_max) / scales.time;
  if (!(t_max > 0)) throw grw::UsageError("--t-max must be positive");
  const auto n = static_cast<Eigen::Index>(cfg.get_int("grid_points", o.grid_points));
  if (n < 16) throw grw::UsageError("--grid-points must be >= 16");
  double half_width = cfg.get_double("half_width", o.half_width);
  if (half_width <= 0) {
    const double spread = grw::grw_width(np.wavepacket, np.collapse, np.hbar, t_max);
    half_width = 2.0 * (std::abs(np.wavepacket.q0) + std::abs(np.wavepacket.p0) * t_max + 6.0 * spread);
  }
  auto grid = grw::render_state(grw::GaussianState<double>::minimum_uncertainty(np.wavepacket), np.hbar, half_width, n);

  const double limit = grw::max_stable_dt(grid, 1.0, np.hbar);
  double dt = cfg.get_double("dt", o.dt) / scales.time;
  const long snaps = static_cast<long>(std::max<long long>(1, cfg.get_int("snapshots", o.snapshots)));
  if (dt <= 0) dt = limit;
  const long per_snap = std::max(1L, static_cast<long>(std::ceil(t_max / snaps / dt)));
  dt = t_max / static_cast<double>(snaps * per_snap);

  const auto dir = prepare_out(c);
  std::ofstream log(dir / "evolution.jsonl", std::ios::binary);
  auto to_caller = [&](json e) {
    e["time"] = e["time"].get<double>() * scales.time;
    return e;
  };
  grw::EvolveOptions<double> opts;
  opts.observe_every = per_snap;
  opts.observer = [&](const grw::DensityGrid<double>& g, long) {
    log << to_caller(grw::io::evolution_log_entry(g)).dump() << '\n';
  };
  const auto final_grid = grw::evolve(grid, np.wavepacket, np.collapse, np.hbar, dt, snaps * per_snap, opts);
  log.close();

  write_with(dir / "rho_final.bin", [&](std::ostream& out) { grw::io::write_grid_binary(out, final_grid.rho); });
  write_with(dir / "rho_final_magnitude.csv",
             [&](std::ostream& out) { grw::io::write_grid_magnitude_csv(out, final_grid); });
  const auto grid_m = grw::grid_moments(final_grid, np.hbar);
  const auto exact = grw::grw_moments(np.wavepacket, np.collapse, np.hbar,
                                      grw::schrodinger_moments(np.wavepacket, np.hbar, t_max), t_max);
  json meta = base_metadata("rho-evolve", cfg);
  meta["collapse"] = grw::io::to_json(cp);
  meta["wavepacket"] = grw::io::to_json(wp);
  meta["units"] = grw::io::to_json(units);
  meta["grid"] = {{"points", n}, {"half_width_natural", half_width}, {"dt_natural", dt},
                  {"steps", snaps * per_snap}, {"length_scale", scales.length}, {"time_scale", scales.time},
                  {"binary_layout", "u64 rows, u64 cols, row-major (re, im) float64, little-endian"}};
  meta["final_moments_natural"] = {{"grid", grw::io::to_json(grid_m)}, {"analytic", grw::io::to_json(exact)}};
  meta["final"] = grw::io::evolution_log_entry(final_grid);
  write_json(dir / "rho_evolve.json", meta);
  if (c.svg) {
    write_text(dir / "rho_final.svg",
               grw::io::svg_matrix_heatmap(final_grid.rho.cwiseAbs(), half_width, "|rho(q', q'')|, natural units"));
  }
  return 0;
}

struct MeasureOpts {
  std::optional<double> t;
  long long pointer_particles = 1;
  bool grid_check = false;
};

json matrix_json(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

int run_measure(const Common& c, const CLI::App* cmd, const MeasureOpts& o) {
  const auto cfg = merged_config(c, cmd);
  const auto units = grw::units_from_config(cfg);
  const auto cp = grw::collapse_from_config(cfg);
  const auto setup = grw::setup_from_config(cfg);
  const double t = o.t ? *o.t : setup.ramp.t1;
  const int n_pointer = static_cast<int>(cfg.get_int("pointer_particles", o.pointer_particles));
  const auto branches = grw::entangle(setup, units, t);

  json overlaps = json::array();
  for (std::size_t n = 0; n < branches.branches.size(); ++n) {
    for (std::size_t m = n + 1; m < branches.branches.size(); ++m) {
      const auto ov = grw::pointer_overlap(branches, n, m, units);
      overlaps.push_back({{"n", n}, {"m", m}, {"re", ov.real()}, {"im", ov.imag()}, {"abs", std::abs(ov)},
                          {"diagonalization_time", grw::pointer_diagonalization_time(setup, cp, n_pointer, n, m)}});
    }
  }
  json meta = base_metadata("measure", cfg);
  meta["collapse"] = grw::io::to_json(cp);
  meta["units"] = grw::io::to_json(units);
  meta["time"] = t;
  meta["beta"] = setup.ramp(t);
  meta["pointer_particles"] = n_pointer;
  meta["overlaps"] = overlaps;
  meta["rho_pre"] = matrix_json(grw::reduced_density(branches, grw::ReductionMode::pre, units));
  meta["rho_post"] = matrix_json(grw::reduced_density(branches, grw::ReductionMode::post, units));
  if (o.grid_check && setup.outcomes.size() >= 2) {
    const auto check = grw::measure_diagonalization_time(setup, cp, n_pointer, units);
    meta["grid_check"] = {{"separation", check.separation}, {"predicted", check.predicted},
                          {"measured", check.measured}, {"relative_error", check.relative_error}};
  }
  // Non-finite times (lambda = 0) are not representable in JSON; emit null.
  for (auto& ov : meta["overlaps"]) {
    if (!std::isfinite(ov["diagonalization_time"].get<double>())) ov["diagonalization_time"] = nullptr;
  }
  const auto dir = prepare_out(c);
  write_json(dir / "measure.json", meta);
  return 0;
}

struct ScanOpts {
  double lambda_min = 1e-20, lambda_max = 1e-4;
  long long lambda_points = 65;
  double rc_min = 1e-8, rc_max = std::pow(10.0, -4.5);
  long long rc_points = 57;
  double t = 1e17;
  std::vector<std::string> overlays;
};

// Least-squares line through (log10 r_c, log10 lambda).
std::pair<double, double> loglog_fit(const std::vector<grw::CurvePoint>& pts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(pts.size());
  for (const auto& p : pts) {
    const double x = std::log10(p.r_c), y = std::log10(p.lambda);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

grw::WavepacketParams hydrogen_packet(const grw::KeyValueConfig& cfg) {
  // Hydrogen defaults: dq0^2 = 1e-20 m^2.
  grw::WavepacketParams wp;
  wp.mass = cfg.get_double("mass", 3.35e-27);
  wp.dq0 = cfg.get_double("dq0", 1e-10);
  wp.n_particles = static_cast<int>(cfg.get_int("n_particles", 1));
  wp.validate();
  return wp;
}

int run_scan(const Common& c, const CLI::App* cmd, const ScanOpts& o) {
  const auto cfg = merged_config(c, cmd);
  const auto wp = hydrogen_packet(cfg);
  const auto th = thresholds_of(cfg);
  const double t = cfg.get_double("t", o.t);
  const auto lambdas = grw::log_axis(cfg.get_double("lambda_min", o.lambda_min),
                                     cfg.get_double("lambda_max", o.lambda_max),
                                     static_cast<std::size_t>(cfg.get_int("lambda_points", o.lambda_points)));
  const auto r_cs =
      grw::log_axis(cfg.get_double("rc_min", o.rc_min), cfg.get_double("rc_max", o.rc_max),
                    static_cast<std::size_t>(cfg.get_int("rc_points", o.rc_points)));
  auto scan = grw::scan_plane(lambdas, r_cs, wp, t, th);

  std::vector<grw::BoundCurve> curves;
  for (const auto& path : o.overlays) curves.push_back(grw::read_bound_curve(fs::path(path)));
  for (const auto& e : cfg.get_all("overlay")) curves.push_back(grw::read_bound_curve(fs::path(e.value)));
  const auto merged = grw::overlay_bounds(scan, curves);

  const auto dir = prepare_out(c);
  write_with(dir / "scan.csv", [&](std::ostream& out) { grw::io::write_scan_csv(out, scan); });
  write_with(dir / "coexistence.csv",
             [&](std::ostream& out) { grw::io::write_curve_csv(out, scan.coexistence, "lambda_coex"); });
  if (!curves.empty()) {
    write_with(dir / "envelope.csv",
               [&](std::ostream& out) { grw::io::write_curve_csv(out, merged.envelope, "lambda_envelope"); });
  }
  const auto [slope, intercept] = loglog_fit(scan.coexistence);
  json meta = base_metadata("scan", cfg);
  meta["t"] = t;
  meta["dq0_sq"] = scan.dq0_sq;
  meta["n_particles"] = wp.n_particles;
  meta["thresholds"] = {{"low", th.low}, {"high", th.high}};
  meta["axes"] = {{"lambda", {lambdas.front(), lambdas.back(), lambdas.size()}},
                  {"r_c", {r_cs.front(), r_cs.back(), r_cs.size()}}};
  meta["coexistence_fit"] = {{"slope", slope}, {"intercept_log10", intercept}, {"prefactor", std::pow(10.0, intercept)}};
  json labels = json::array();
  for (const auto& cv : curves) labels.push_back({{"label", cv.label}, {"points", cv.points.size()}});
  meta["overlays"] = labels;
  write_json(dir / "scan.json", meta);
  if (c.svg) {
    std::vector<grw::io::PlotSeries> lines;
    const char* palette[] = {"#ffffff", "#ff7f0e", "#e377c2", "#17becf", "#bcbd22"};
    for (std::size_t i = 0; i < curves.size(); ++i) {
      grw::io::PlotSeries s{curves[i].label, {}, {}, palette[i % 5], true};
      for (const auto& p : curves[i].points) {
        s.x.push_back(p.r_c);
        s.y.push_back(p.lambda);
      }
      lines.push_back(s);
    }
    write_text(dir / "scan.svg", grw::io::svg_scan_heatmap(scan, lines));
  }
  std::cout << "coexistence: log10 lambda = " << slope << " log10 r_c + " << intercept << "\n";
  return 0;
}

struct BoundsOpts {
  double t = 1e17;
  double species = grw::kHydrogenSpeciesFactor;
};

int run_bounds(const Common& c, const CLI::App* cmd, const BoundsOpts& o) {
  const auto cfg = merged_config(c, cmd);
  const auto wp = hydrogen_packet(cfg);
  const double r_c = cfg.get_double("r_c", 1e-7);
  const double t = cfg.get_double("t", o.t);
  const double species = cfg.get_double("species_factor", o.species);
  const auto conv = grw::parse_convention(cfg.get_string("convention", "plain"));

  json meta = base_metadata("bounds", cfg);
  json results = json::array();
  for (auto cv : {grw::Convention::plain, grw::Convention::mass_proportional}) {
    const auto b = grw::bound_from_cqr(wp, r_c, t, cv, species);
    results.push_back({{"convention", grw::to_string(cv)}, {"lambda_max", b.lambda_max}, {"t_used", b.t_used},
                       {"r_c", b.r_c}, {"dq0_sq", b.dq0_sq}, {"species_factor", b.species_factor}});
    std::cout << "lambda_max (" << grw::to_string(cv) << ") = " << b.lambda_max << " 1/s\n";
  }
  meta["bounds"] = results;
  if (cfg.contains("lambda")) {
    grw::CollapseParams cp{cfg.get_double("lambda", 0.0), r_c, conv == grw::Convention::mass_proportional};
    cp.validate();
    const double td = grw::dominance_time(wp, cp, conv, species);
    meta["dominance"] = {{"lambda", cp.lambda}, {"convention", grw::to_string(conv)},
                         {"time", std::isfinite(td) ? json(td) : json(nullptr)}};
    std::cout << "dominance time (" << grw::to_string(conv) << ", lambda = " << cp.lambda << ") = " << td << " s\n";
  }
  const auto dir = prepare_out(c);
  write_json(dir / "bounds.json", meta);
  return 0;
}

void print_error(const std::exception& e) {
  json err = {{"error", "internal_error"}, {"message", e.what()}};
  if (const auto* g = dynamic_cast<const grw::Error*>(&e)) err["error"] = g->kind();
  if (const auto* n = dynamic_cast<const grw::NumericalError*>(&e)) err["achieved_tolerance"] = n->achieved_tolerance();
  if (const auto* i = dynamic_cast<const grw::InvariantError*>(&e)) {
    err["step"] = i->step();
    err["drift"] = i->drift();
  }
  if (const auto* l = dynamic_cast<const grw::EnsembleLimitError*>(&e)) err["completed"] = l->completed();
  if (const auto* p = dynamic_cast<const grw::ParseError*>(&e)) err["line"] = p->line();
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GRW spontaneous-collapse numerical lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GRW_VERSION);

  Common common;
  TimeOpts moments_opts, width_opts;
  TrajOpts traj_opts;
  RhoOpts rho_opts;
  MeasureOpts measure_opts;
  ScanOpts scan_opts;
  BoundsOpts bounds_opts;

  auto* moments = app.add_subcommand("moments", "analytic first and second moments");
  add_common(moments, common);
  moments->add_option("--t-max", moments_opts.t_max, "final time")->capture_default_str();
  moments->add_option("--points", moments_opts.points, "time samples")->capture_default_str();
  moments->add_flag("--schrodinger", moments_opts.schrodinger, "collapse-free moments");

  auto* width = app.add_subcommand("width", "wavepacket width and its decomposition");
  add_common(width, common);
  width->add_option("--t-max", width_opts.t_max, "final time")->capture_default_str();
  width->add_option("--points", width_opts.points, "time samples")->capture_default_str();
  width->add_flag("--schrodinger", width_opts.schrodinger, "collapse-free width");

  auto* traj = app.add_subcommand("trajectories", "Monte Carlo ensemble of collapse trajectories");
  add_common(traj, common);
  traj->add_option("--t-max", traj_opts.time.t_max, "final time")->capture_default_str();
  traj->add_option("--points", traj_opts.time.points, "time samples")->capture_default_str();
  traj->add_option("--n-traj", traj_opts.n_traj, "trajectory count")->capture_default_str();
  traj->add_option("--workers", traj_opts.workers, "worker threads (0: all cores)")->capture_default_str();

  auto* rho = app.add_subcommand("rho-evolve", "density-matrix master equation on a position grid");
  add_common(rho, common);
  rho->add_option("--grid-points", rho_opts.grid_points, "grid size")->capture_default_str();
  rho->add_option("--half-width", rho_opts.half_width, "grid half width in natural units (0: automatic)");
  rho->add_option("--t-max", rho_opts.t_max, "final time")->capture_default_str();
  rho->add_option("--dt", rho_opts.dt, "time step (0: stability limit)");
  rho->add_option("--snapshots", rho_opts.snapshots, "log records")->capture_default_str();

  auto* measure = app.add_subcommand("measure", "von Neumann pointer measurement with collapse");
  add_common(measure, common);
  measure->add_option("--t", measure_opts.t, "evaluation time (default: end of ramp)");
  measure->add_option("--pointer-particles", measure_opts.pointer_particles, "pointer particle count")
      ->capture_default_str();
  measure->add_flag("--grid-check", measure_opts.grid_check, "verify the diagonalization time on the grid engine");

  auto* scan = app.add_subcommand("scan", "CQR phase diagram over the (lambda, r_c) plane");
  add_common(scan, common);
  scan->add_option("--lambda-min", scan_opts.lambda_min, "smallest lambda [1/s]")->capture_default_str();
  scan->add_option("--lambda-max", scan_opts.lambda_max, "largest lambda [1/s]")->capture_default_str();
  scan->add_option("--lambda-points", scan_opts.lambda_points, "lambda samples (log spaced)")->capture_default_str();
  scan->add_option("--rc-min", scan_opts.rc_min, "smallest r_c [m]")->capture_default_str();
  scan->add_option("--rc-max", scan_opts.rc_max, "largest r_c [m]")->capture_default_str();
  scan->add_option("--rc-points", scan_opts.rc_points, "r_c samples (log spaced)")->capture_default_str();
  scan->add_option("--t", scan_opts.t, "observation time [s]")->capture_default_str();
  scan->add_option("--overlay", scan_opts.overlays, "two-column (r_c, lambda) CSV bound curve")
      ->check(CLI::ExistingFile);

  auto* bounds = app.add_subcommand("bounds", "CQR bound on lambda and dominance time");
  add_common(bounds, common);
  bounds->add_option("--t", bounds_opts.t, "observation time [s]")->capture_default_str();
  bounds->add_option("--species-factor", bounds_opts.species, "m_species / m_nucleon")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*moments) return run_moments(common, moments, moments_opts);
    if (*width) return run_width(common, width, width_opts);
    if (*traj) return run_trajectories(common, traj, traj_opts);
    if (*rho) return run_rho_evolve(common, rho, rho_opts);
    if (*measure) return run_measure(common, measure, measure_opts);
    if (*scan) return run_scan(common, scan, scan_opts);
    if (*bounds) return run_bounds(common, bounds, bounds_opts);
  } catch (const grw::UsageError& e) {
    print_error(e);
    return 2;
  } catch (const grw::ParseError& e) {
    print_error(e);
    return 2;
  } catch (const grw::UnitError& e) {
    print_error(e);
    return 2;
  } catch (const std::exception& e) {
    print_error(e);
    return 1;
  }
  return 2;
}
