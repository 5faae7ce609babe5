#include "grw/core_model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace grw {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const KeyValueConfig::Entry& e) {
  // std::from_chars for double is available in libstdc++ 11.
  double out = 0.0;
  const char* begin = e.value.data();
  const char* end = begin + e.value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("key '" + e.key + "': expected a number, got '" + e.value + "'", e.line);
  }
  return out;
}

}  // namespace

UnitSystem UnitSystem::parse(std::string_view name) {
  if (name == "si" || name == "SI") return si();
  if (name == "natural") return natural();
  throw UnitError("unknown unit system '" + std::string(name) + "' (expected si or natural)");
}

CollapseParams CollapseParams::from_alpha(double lambda, double alpha, bool mass_proportional) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  CollapseParams cp{lambda, 1.0 / std::sqrt(alpha), mass_proportional};
  cp.validate();
  return cp;
}

void CollapseParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and >= 0");
  if (!(r_c > 0.0) || !std::isfinite(r_c)) throw DomainError("r_c must be finite and > 0");
}

void WavepacketParams::validate() const {
  if (!(mass > 0.0)) throw DomainError("mass must be > 0");
  if (!(dq0 > 0.0)) throw DomainError("dq0 must be > 0");
  if (n_particles < 1) throw DomainError("n_particles must be >= 1");
  if (!std::isfinite(q0) || !std::isfinite(p0)) throw DomainError("q0 and p0 must be finite");
}

NaturalParams to_natural(const CollapseParams& cp, const WavepacketParams& wp,
                         const UnitSystem& units, const UnitScales& scales) {
  if (!(scales.length > 0.0) || !(scales.time > 0.0)) {
    throw UnitError("unit scales must be strictly positive");
  }
  if (!(units.hbar > 0.0)) throw UnitError("hbar must be positive");
  cp.validate();
  wp.validate();

  const double L = scales.length;
  const double T = scales.time;
  const double M = wp.mass;

  NaturalParams np;
  np.scales = scales;
  np.mass_unit = M;
  np.hbar = units.hbar * T / (M * L * L);
  np.collapse = {cp.lambda * T, cp.r_c / L, cp.mass_proportional};
  np.wavepacket = {1.0, wp.dq0 / L, wp.q0 / L, wp.p0 * T / (M * L), wp.n_particles};
  return np;
}

std::pair<CollapseParams, WavepacketParams> from_natural(const NaturalParams& np) {
  const double L = np.scales.length;
  const double T = np.scales.time;
  const double M = np.mass_unit;
  if (!(L > 0.0) || !(T > 0.0) || !(M > 0.0)) throw UnitError("unit scales must be strictly positive");
  CollapseParams cp{np.collapse.lambda / T, np.collapse.r_c * L, np.collapse.mass_proportional};
  WavepacketParams wp{np.wavepacket.mass * M, np.wavepacket.dq0 * L, np.wavepacket.q0 * L,
                      np.wavepacket.p0 * M * L / T, np.wavepacket.n_particles};
  return {cp, wp};
}

UnitScales natural_scales(const WavepacketParams& wp, const UnitSystem& units) {
  wp.validate();
  return {wp.dq0, wp.mass * wp.dq0 * wp.dq0 / units.hbar};
}

KeyValueConfig KeyValueConfig::from_string(std::string_view text) {
  KeyValueConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    cfg.entries_.push_back({std::string(key), std::string(value), line_no});
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

const KeyValueConfig::Entry* KeyValueConfig::find_last(std::string_view key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->key == key) return &*it;
  }
  return nullptr;
}

bool KeyValueConfig::contains(std::string_view key) const { return find_last(key) != nullptr; }

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  if (const auto* e = find_last(key)) return e->value;
  return std::nullopt;
}

std::vector<KeyValueConfig::Entry> KeyValueConfig::get_all(std::string_view key) const {
  std::vector<Entry> out;
  for (const auto& e : entries_) {
    if (e.key == key) out.push_back(e);
  }
  return out;
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
  const auto* e = find_last(key);
  return e ? parse_double(*e) : fallback;
}

long long KeyValueConfig::get_int(std::string_view key, long long fallback) const {
  const auto* e = find_last(key);
  if (!e) return fallback;
  long long out = 0;
  auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), out);
  if (ec != std::errc() || ptr != e->value.data() + e->value.size()) {
    // Accept integral values written in float notation, e.g. "1e4".
    const double d = parse_double(*e);
    if (d != std::floor(d)) throw ParseError("key '" + e->key + "': expected an integer", e->line);
    return static_cast<long long>(d);
  }
  return out;
}

std::string KeyValueConfig::get_string(std::string_view key, std::string fallback) const {
  const auto* e = find_last(key);
  return e ? e->value : std::move(fallback);
}

void KeyValueConfig::set(std::string key, std::string value) {
  entries_.push_back({std::move(key), std::move(value), 0});
}

CollapseParams collapse_from_config(const KeyValueConfig& cfg) {
  CollapseParams cp;
  cp.lambda = cfg.get_double("lambda", 0.0);
  cp.r_c = cfg.get_double("r_c", 1.0);
  const auto conv = cfg.get_string("convention", "plain");
  if (conv != "plain" && conv != "mass_proportional") {
    throw UsageError("convention must be 'plain' or 'mass_proportional', got '" + conv + "'");
  }
  cp.mass_proportional = conv == "mass_proportional";
  cp.validate();
  return cp;
}

WavepacketParams wavepacket_from_config(const KeyValueConfig& cfg) {
  WavepacketParams wp;
  wp.mass = cfg.get_double("mass", 1.0);
  wp.dq0 = cfg.get_double("dq0", 1.0);
  wp.q0 = cfg.get_double("q0", 0.0);
  wp.p0 = cfg.get_double("p0", 0.0);
  wp.n_particles = static_cast<int>(cfg.get_int("n_particles", 1));
  wp.validate();
  return wp;
}

UnitSystem units_from_config(const KeyValueConfig& cfg) {
  return UnitSystem::parse(cfg.get_string("units", "natural"));
}

}  // namespace grw
