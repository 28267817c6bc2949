// hbac: run the singlet-pumping protocol engines and emit CSV.
//
//   hbac pump            build-up of singlet order vs permutation count
//   hbac sweep-tau       signal vs reset delay, with the optimum
//   hbac decay           signal vs evolution delay, with an exponential fit
//   hbac enhance         Zeeman-order enhancement of the magnetization protocol
//   hbac coherent-check  AB spectrum, pulse-level permutation fidelities,
//                        composite-pulse robustness
#include "hbac/harness.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Overrides {
  std::optional<std::string> config;
  std::vector<std::pair<std::string, std::string>> settings;
};

void add_options(CLI::App* sub, Overrides& ov) {
  sub->add_option("--config", ov.config, "key = value config file (flags override it)");
  const std::vector<std::pair<std::string, std::string>> keys = {
      {"mode", "engine: ideal | kinetic | coherent-check"},
      {"np", "number of permutations"},
      {"tau", "triplet reset delay [s]"},
      {"tau-ev", "evolution delay before detection [s]"},
      {"tau-prime", "final reset delay of the magnetization protocol [s]"},
      {"t1", "T1 [s]"},
      {"ts", "singlet-order lifetime TS [s]"},
      {"j", "scalar coupling J [Hz]"},
      {"delta-ppm", "chemical shift difference [ppm]"},
      {"b0", "static field [T]"},
      {"gamma", "magnetogyric ratio [rad/s/T]"},
      {"temperature", "sample temperature [K]"},
      {"out", "output CSV path (default stdout)"},
      {"tau-grid", "reset-delay grid: v1,v2,.. | lin:a:b:n | log:a:b:n"},
      {"tau-ev-grid", "evolution-delay grid: v1,v2,.. | lin:a:b:n | log:a:b:n"},
      {"coefficients", "APSOC coefficient file (21 lines)"},
      {"steps", "time steps for the APSOC pulse"},
      {"convention", "carrier-offset sign convention: carrier | resonance"},
  };
  for (const auto& [key, help] : keys) {
    sub->add_option_function<std::string>(
        "--" + key, [&ov, key = key](const std::string& v) { ov.settings.emplace_back(key, v); }, help);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heat-bath algorithmic cooling of spin-1/2 pairs via the singlet state"};
  app.require_subcommand(1);

  Overrides ov;
  const std::vector<std::pair<std::string, hbac::Command>> commands = {
      {"pump", hbac::Command::Pump},
      {"sweep-tau", hbac::Command::SweepTau},
      {"decay", hbac::Command::Decay},
      {"enhance", hbac::Command::Enhance},
      {"coherent-check", hbac::Command::CoherentCheck},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, cmd] : commands) {
    CLI::App* sub = app.add_subcommand(name);
    add_options(sub, ov);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return hbac::kExitInvalidConfig;
  }

  hbac::RunConfig cfg;
  try {
    if (ov.config) hbac::load_config_file(*ov.config, cfg);
    for (const auto& [key, value] : ov.settings) hbac::apply_setting(cfg, key, value);
  } catch (const hbac::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return hbac::kExitIo;
  } catch (const hbac::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return hbac::kExitInvalidConfig;
  }

  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) return hbac::execute(commands[i].second, cfg, std::cout, std::cerr);
  return hbac::kExitInvalidConfig;
}
