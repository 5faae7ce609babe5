#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "grw/errors.hpp"

namespace grw {

enum class UnitMode { si, natural };

/// CODATA 2018 reduced Planck constant, J*s.
inline constexpr double kHbarSI = 1.054571817e-34;

struct UnitSystem {
  UnitMode mode = UnitMode::natural;
  double hbar = 1.0;
  std::string description = "natural (hbar = 1)";

  static UnitSystem si() { return {UnitMode::si, kHbarSI, "SI (J*s, m, kg, s)"}; }
  static UnitSystem natural() { return {}; }
  static UnitSystem parse(std::string_view name);
};

/// GRW collapse parameters: hit rate lambda [1/s] and localization length r_c [m].
struct CollapseParams {
  double lambda = 0.0;
  double r_c = 1.0;
  bool mass_proportional = false;

  double alpha() const { return 1.0 / (r_c * r_c); }

  static CollapseParams from_alpha(double lambda, double alpha, bool mass_proportional = false);
  void validate() const;
};

struct WavepacketParams {
  double mass = 1.0;
  double dq0 = 1.0;
  double q0 = 0.0;
  double p0 = 0.0;
  int n_particles = 1;

  /// N-particle generalization: the rate seen by the engines is N * lambda.
  double effective_rate(const CollapseParams& cp) const { return n_particles * cp.lambda; }
  double dq0_sq() const { return dq0 * dq0; }
  void validate() const;
};

struct UnitScales {
  double length = 1.0;
  double time = 1.0;
};

/// Parameters rescaled to units where the wavepacket mass is 1. hbar holds
/// hbar * time / (mass * length^2), which is exactly 1 for natural_scales().
struct NaturalParams {
  CollapseParams collapse;
  WavepacketParams wavepacket;
  double hbar = 1.0;
  UnitScales scales;
  double mass_unit = 1.0;
};

NaturalParams to_natural(const CollapseParams& cp, const WavepacketParams& wp,
                         const UnitSystem& units, const UnitScales& scales);
std::pair<CollapseParams, WavepacketParams> from_natural(const NaturalParams& np);

/// Length scale dq0, time scale m*dq0^2/hbar; yields hbar = m = 1.
UnitScales natural_scales(const WavepacketParams& wp, const UnitSystem& units);

/// Flat `key = value` file. '#' starts a comment; keys may repeat.
class KeyValueConfig {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line;
  };

  static KeyValueConfig from_string(std::string_view text);
  static KeyValueConfig from_file(const std::filesystem::path& path);

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::vector<Entry> get_all(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  std::string get_string(std::string_view key, std::string fallback) const;
  void set(std::string key, std::string value);

  const std::vector<Entry>& entries() const { return entries_; }

 private:
  const Entry* find_last(std::string_view key) const;
  std::vector<Entry> entries_;
};

CollapseParams collapse_from_config(const KeyValueConfig& cfg);
WavepacketParams wavepacket_from_config(const KeyValueConfig& cfg);
UnitSystem units_from_config(const KeyValueConfig& cfg);

}  // namespace grw
