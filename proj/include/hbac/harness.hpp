// Command layer behind the `hbac` CLI: run configuration, config-file
// parsing, and the CSV-producing commands.
//
// Exit codes: 0 success, 1 invalid config, 2 computation/fit failure,
// 3 I/O failure.
#pragma once

#include "hbac/coherent.hpp"
#include "hbac/core.hpp"
#include "hbac/fit.hpp"
#include "hbac/kinetics.hpp"
#include "hbac/protocol.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hbac {

enum ExitCode : int { kExitOk = 0, kExitInvalidConfig = 1, kExitComputation = 2, kExitIo = 3 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ComputationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Engine { Ideal, Kinetic, CoherentCheck };

inline const char* to_string(Engine e) {
  switch (e) {
    case Engine::Ideal: return "ideal";
    case Engine::Kinetic: return "kinetic";
    case Engine::CoherentCheck: return "coherent-check";
  }
  return "?";
}

struct RunConfig {
  Engine mode = Engine::Kinetic;
  int n_p = 6;
  double tau = 28.0;
  double tau_ev = 0.0;
  std::optional<double> tau_prime = 18.0;  // unset: same as tau
  SpinSystemParams spin{};
  std::string out;  // empty: stdout
  std::vector<double> tau_grid;
  std::vector<double> tau_ev_grid;
  std::string coefficients_path;  // empty: bundled coefficients
  int steps = kDefaultPulseSteps;
  FrameConvention convention = FrameConvention::CarrierShift;

  double final_reset() const { return tau_prime.value_or(tau); }

  void validate() const {
    if (n_p < 0) throw ConfigError("np must be >= 0");
    if (!(tau >= 0.0) || !(tau_ev >= 0.0) || !(final_reset() >= 0.0))
      throw ConfigError("durations must be >= 0");
    if (steps < 1) throw ConfigError("steps must be >= 1");
    try {
      spin.validate();
      check_epsilon(epsilon(spin));
      if (!tau_grid.empty()) check_grid(tau_grid, "tau-grid");
      if (!tau_ev_grid.empty()) check_grid(tau_ev_grid, "tau-ev-grid");
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(std::string_view text, std::string_view key) {
  const std::string t = trim(text);
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (begin != end && *begin == '+') ++begin;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError("invalid number for '" + std::string(key) + "': '" + t + "'");
  return v;
}

inline int parse_int(std::string_view text, std::string_view key) {
  const std::string t = trim(text);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError("invalid integer for '" + std::string(key) + "': '" + t + "'");
  return v;
}

}  // namespace detail

/// Grid syntax: "v1,v2,..." or "lin:start:stop:count" or "log:start:stop:count".
inline std::vector<double> parse_grid(std::string_view text, std::string_view key = "grid") {
  const std::string t = detail::trim(text);
  std::vector<double> out;
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    return parts;
  };
  if (t.rfind("lin:", 0) == 0 || t.rfind("log:", 0) == 0) {
    const auto parts = split(t, ':');
    if (parts.size() != 4) throw ConfigError("grid '" + t + "' must be kind:start:stop:count");
    const double a = detail::parse_double(parts[1], key);
    const double b = detail::parse_double(parts[2], key);
    const int n = detail::parse_int(parts[3], key);
    if (n < 1) throw ConfigError("grid count must be >= 1");
    const bool log = parts[0] == "log";
    if (log && !(a > 0.0 && b > 0.0)) throw ConfigError("log grid bounds must be positive");
    for (int i = 0; i < n; ++i) {
      const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
      out.push_back(log ? a * std::pow(b / a, f) : a + (b - a) * f);
    }
    if (n > 1) out.back() = b;
  } else {
    for (const auto& item : split(t, ',')) out.push_back(detail::parse_double(item, key));
  }
  return out;
}

inline Engine parse_engine(std::string_view text) {
  const std::string t = detail::trim(text);
  if (t == "ideal") return Engine::Ideal;
  if (t == "kinetic") return Engine::Kinetic;
  if (t == "coherent-check") return Engine::CoherentCheck;
  throw ConfigError("unknown mode '" + t + "' (ideal | kinetic | coherent-check)");
}

inline FrameConvention parse_convention(std::string_view text) {
  const std::string t = detail::trim(text);
  if (t == "carrier") return FrameConvention::CarrierShift;
  if (t == "resonance") return FrameConvention::ResonanceOffset;
  throw ConfigError("unknown convention '" + t + "' (carrier | resonance)");
}

/// Applies one `key = value` setting. Keys match the CLI flag names without
/// the leading dashes; '_' and '-' are interchangeable.
inline void apply_setting(RunConfig& cfg, std::string key, const std::string& value) {
  for (char& c : key)
    if (c == '_') c = '-';
  if (key == "mode") cfg.mode = parse_engine(value);
  else if (key == "np") cfg.n_p = detail::parse_int(value, key);
  else if (key == "tau") cfg.tau = detail::parse_double(value, key);
  else if (key == "tau-ev") cfg.tau_ev = detail::parse_double(value, key);
  else if (key == "tau-prime") cfg.tau_prime = detail::parse_double(value, key);
  else if (key == "t1") cfg.spin.t1_s = detail::parse_double(value, key);
  else if (key == "ts") cfg.spin.ts_s = detail::parse_double(value, key);
  else if (key == "j") cfg.spin.j_coupling_hz = detail::parse_double(value, key);
  else if (key == "delta-ppm") cfg.spin.delta_shift_ppm = detail::parse_double(value, key);
  else if (key == "b0") cfg.spin.b0_tesla = detail::parse_double(value, key);
  else if (key == "gamma") cfg.spin.gamma = detail::parse_double(value, key);
  else if (key == "temperature") cfg.spin.temperature_k = detail::parse_double(value, key);
  else if (key == "out") cfg.out = detail::trim(value);
  else if (key == "tau-grid") cfg.tau_grid = parse_grid(value, key);
  else if (key == "tau-ev-grid") cfg.tau_ev_grid = parse_grid(value, key);
  else if (key == "coefficients") cfg.coefficients_path = detail::trim(value);
  else if (key == "steps") cfg.steps = detail::parse_int(value, key);
  else if (key == "convention") cfg.convention = parse_convention(value);
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Plain-text `key = value` lines; '#' starts a comment.
inline void parse_config(std::istream& in, RunConfig& cfg) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    apply_setting(cfg, detail::trim(body.substr(0, eq)), detail::trim(body.substr(eq + 1)));
  }
}

inline void load_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  parse_config(in, cfg);
}

// ---------------------------------------------------------------------------
// CSV rendering

/// Shortest round-trip decimal representation, independent of locale.
inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::logic_error("format_number failed");
  return std::string(buf.data(), ptr);
}

inline constexpr const char* kSignalNote =
    "# signal is normalized so that 1 equals the thermal-equilibrium signal of an ideal 90 degree pulse";

struct CommandResult {
  std::string csv;
  int exit_code = kExitOk;
  std::string message;  // diagnostic for stderr, empty on success
};

inline CommandResult cmd_pump(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.mode == Engine::CoherentCheck) throw ConfigError("pump: mode must be ideal or kinetic");
  const double eps = epsilon(cfg.spin);
  std::ostringstream os;
  os << "n_p,so,signal,closed_form_so\n" << kSignalNote << "\n";
  for (int n = 0; n <= cfg.n_p; ++n) {
    double so = 0.0;
    if (cfg.mode == Engine::Ideal) {
      so = measure_order(run_ideal(n, eps), Order::Singlet);
    } else {
      so = run_kinetic(n, cfg.tau, cfg.tau_ev, cfg.spin).so;
    }
    os << n << ',' << format_number(so) << ',' << format_number(detected_signal(so, eps)) << ',';
    if (cfg.mode == Engine::Ideal) os << format_number(closed_form_so(n, eps));
    os << '\n';
  }
  return {os.str()};
}

inline CommandResult cmd_sweep_tau(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.tau_grid.empty()) throw ConfigError("sweep-tau: tau-grid is required");
  const TauSweep sweep = sweep_tau(cfg.n_p, cfg.tau_grid, cfg.spin);
  std::ostringstream os;
  os << "tau,signal\n" << kSignalNote << "\n";
  for (const auto& [tau, signal] : sweep.points)
    os << format_number(tau) << ',' << format_number(signal) << '\n';
  os << "# optimum,tau_star=" << format_number(sweep.tau_star)
     << ",signal_star=" << format_number(sweep.signal_star) << '\n';
  return {os.str()};
}

inline CommandResult cmd_decay(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.tau_ev_grid.size() < 3)
    throw ConfigError("decay: tau-ev-grid needs at least 3 points for the exponential fit");
  const auto curve = decay_curve(cfg.n_p, cfg.tau, cfg.tau_ev_grid, cfg.spin);
  const ExponentialFit fit = fit_monoexponential(curve);
  std::ostringstream os;
  os << "tau_ev,signal\n" << kSignalNote << "\n";
  for (const auto& [t, s] : curve) os << format_number(t) << ',' << format_number(s) << '\n';
  os << "# fit,amplitude=" << format_number(fit.amplitude)
     << ",time_constant=" << format_number(fit.time_constant)
     << ",relative_deviation=" << format_number(fit.time_constant / cfg.spin.ts_s - 1.0)
     << ",residual_norm=" << format_number(fit.residual_norm) << ",status=" << to_string(fit.status)
     << '\n';
  CommandResult r{os.str()};
  if (!fit.ok()) {
    r.exit_code = kExitComputation;
    r.message = std::string("decay: exponential fit failed (") + to_string(fit.status) + ")";
  }
  return r;
}

struct EnhancementSummary {
  double zo_final = 0.0;
  double zo_eq = 0.0;
  double ratio = 0.0;
  double temperature_ratio = 0.0;
};

inline EnhancementSummary run_enhancement(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.n_p % 2 != 0) throw ConfigError("enhance: np must be even");
  if (cfg.mode == Engine::CoherentCheck) throw ConfigError("enhance: mode must be ideal or kinetic");
  const double eps = epsilon(cfg.spin);
  EnhancementSummary s;
  s.zo_eq = equilibrium_zeeman_order(eps);
  if (cfg.mode == Engine::Ideal) {
    s.zo_final = measure_order(enhance_zeeman(run_ideal(cfg.n_p, eps), eps), Order::Zeeman);
  } else {
    s.zo_final = *run_kinetic_enhance(cfg.n_p, cfg.tau, cfg.final_reset(), cfg.spin).zo_final;
  }
  s.ratio = s.zo_final / s.zo_eq;
  s.temperature_ratio = 1.0 / s.ratio;
  return s;
}

inline CommandResult cmd_enhance(const RunConfig& cfg) {
  const EnhancementSummary s = run_enhancement(cfg);
  std::ostringstream os;
  os << "engine,n_p,zo_final,zo_eq,ratio,temperature_ratio\n"
     << to_string(cfg.mode) << ',' << cfg.n_p << ',' << format_number(s.zo_final) << ','
     << format_number(s.zo_eq) << ',' << format_number(s.ratio) << ','
     << format_number(s.temperature_ratio) << '\n';
  return {os.str()};
}

/// True when the largest entry of every column of `t` is where `target`
/// has its 1.
inline bool argmax_pattern_matches(const TransferMatrix& t, const TransferMatrix& target) {
  for (int c = 0; c < kNumStates; ++c) {
    int best = 0;
    for (int r = 1; r < kNumStates; ++r)
      if (t(r, c) > t(best, c)) best = r;
    if (target(best, c) != 1.0) return false;
  }
  return true;
}

inline CommandResult cmd_coherent_check(const RunConfig& cfg) {
  cfg.validate();
  PulseShape shape = default_apsoc_shape();
  if (!cfg.coefficients_path.empty()) {
    try {
      shape.coefficients = load_pulse_coefficients(cfg.coefficients_path);
    } catch (const std::system_error& e) {
      throw IoError(e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(cfg.coefficients_path + ": " + e.what());
    }
  }

  std::ostringstream os;
  os << "section,label,x,y\n";
  const auto lines = ab_spectrum(cfg.spin);
  for (std::size_t i = 0; i < lines.size(); ++i)
    os << "ab_line," << i + 1 << ',' << format_number(lines[i].frequency_hz) << ','
       << format_number(lines[i].intensity) << '\n';
  os << "ab_inner_splitting,hz," << format_number(lines[2].frequency_hz - lines[1].frequency_hz) << ",\n";

  const AmplitudeRange range = apsoc_amplitude_range(shape);
  os << "apsoc_amplitude,min_rad_per_s," << format_number(range.min) << ",\n";
  os << "apsoc_amplitude,max_rad_per_s," << format_number(range.max) << ",\n";

  for (Permutation kind : {Permutation::Pi124, Permutation::Pi142}) {
    const PermutationSimulation sim = simulate_permutation(kind, cfg.spin, shape, cfg.steps, cfg.convention);
    os << "permutation," << to_string(kind) << ',' << format_number(sim.fidelity) << ','
       << (argmax_pattern_matches(sim.transfer, permutation_matrix(kind)) ? 1 : 0) << '\n';
  }

  for (int k = 0; k <= 12; ++k) {
    const double scale = 0.7 + 0.05 * k;
    os << "composite_overlap,composite," << format_number(scale) << ','
       << format_number(x_to_z_overlap(composite_pulse_propagator(+1, scale), +1)) << '\n';
    os << "composite_overlap,simple," << format_number(scale) << ','
       << format_number(x_to_z_overlap(simple_pulse_propagator(+1, scale), +1)) << '\n';
  }
  return {os.str()};
}

enum class Command { Pump, SweepTau, Decay, Enhance, CoherentCheck };

/// Runs a command and writes its CSV to cfg.out (or `stdout_stream`).
/// Errors are reported on `err` and mapped to the exit-code contract.
inline int execute(Command cmd, const RunConfig& cfg, std::ostream& stdout_stream, std::ostream& err) {
  CommandResult r;
  try {
    switch (cmd) {
      case Command::Pump: r = cmd_pump(cfg); break;
      case Command::SweepTau: r = cmd_sweep_tau(cfg); break;
      case Command::Decay: r = cmd_decay(cfg); break;
      case Command::Enhance: r = cmd_enhance(cfg); break;
      case Command::CoherentCheck: r = cmd_coherent_check(cfg); break;
    }
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "computation failed: " << e.what() << '\n';
    return kExitComputation;
  }

  if (cfg.out.empty()) {
    stdout_stream << r.csv;
  } else {
    std::ofstream f(cfg.out, std::ios::binary);
    f << r.csv;
    f.close();
    if (!f) {
      err << "i/o error: cannot write '" << cfg.out << "'\n";
      return kExitIo;
    }
  }
  if (!r.message.empty()) err << r.message << '\n';
  return r.exit_code;
}

}  // namespace hbac
