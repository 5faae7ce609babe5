#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "grw/core_model.hpp"
#include "grw/gaussian_state.hpp"

namespace grw {

enum class RampProfile { smoothstep, linear };

/// Interaction switch-on beta(t): 0 for t <= t0, 1 for t >= t1, non-decreasing.
struct InteractionRamp {
  double t0 = 0.0;
  double t1 = 1.0;
  RampProfile profile = RampProfile::smoothstep;

  double operator()(double t) const;
  void validate() const;
};

struct Outcome {
  double eigenvalue = 0.0;
  std::complex<double> amplitude;
  double pointer_shift = 0.0;  // f(O_n), a length
};

struct MeasurementSetup {
  std::vector<Outcome> outcomes;
  WavepacketParams pointer;  // mass M and width of the apparatus pointer
  InteractionRamp ramp;

  void validate() const;
};

struct Branch {
  GaussianState<double> pointer;
  std::complex<double> amplitude;
  double weight = 0.0;
};

struct BranchState {
  double time = 0.0;
  std::vector<Branch> branches;
};

/// Branch n carries the free-evolved pointer displaced by beta(t) f(O_n).
BranchState entangle(const MeasurementSetup& setup, const UnitSystem& units, double t);

/// <A_n|A_m>.
std::complex<double> pointer_overlap(const BranchState& branches, std::size_t n, std::size_t m,
                                     const UnitSystem& units);

enum class ReductionMode { pre, post };

/// System-space density matrix: c_n c_m* <A_m|A_n> before reduction, diag |c_n|^2 after.
Eigen::MatrixXcd reduced_density(const BranchState& branches, ReductionMode mode, const UnitSystem& units);

/// 1 / (N lambda (1 - exp(-alpha s^2 / 4))) for the final separation s of
/// branches n and m; infinity when lambda is zero.
double pointer_diagonalization_time(const MeasurementSetup& setup, const CollapseParams& cp, int n_particles,
                                    std::size_t n = 0, std::size_t m = 1);

struct DiagonalizationCheck {
  double separation = 0.0;  // on the grid
  double predicted = 0.0;
  double measured = 0.0;
  double relative_error = 0.0;
};

struct GridCheckOptions {
  Eigen::Index grid_points = 256;
  int samples = 20;
  double e_foldings = 2.0;  // simulated span in units of the predicted time
};

/// Evolves the two-branch pointer superposition on the density grid and fits
/// the decay of the coherence between the branches.
DiagonalizationCheck measure_diagonalization_time(const MeasurementSetup& setup, const CollapseParams& cp,
                                                  int n_particles, const UnitSystem& units, std::size_t n = 0,
                                                  std::size_t m = 1, const GridCheckOptions& options = {});

/// Reads `outcome = <eigenvalue> <amp_re> <amp_im> <f_value>` lines plus
/// pointer_mass, pointer_dq0, t0, t1 and ramp (smoothstep | linear).
MeasurementSetup setup_from_config(const KeyValueConfig& cfg);

}  // namespace grw
