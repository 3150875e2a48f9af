#ifndef SDDESTAB_CONFIG_HPP
#define SDDESTAB_CONFIG_HPP

#include <string>
#include <vector>

#include "sddestab/certify.hpp"
#include "sddestab/model.hpp"

namespace sddestab {

// Everything needed to run any subcommand: the system, its design data for
// certification, and schedule/run defaults. Modes are 1-based in files and
// reports, 0-based in the API.
struct RunConfig {
  SystemSpec system;
  ControlSchedule schedule;     // runtime schedule (obs_gap used by simulation)
  std::vector<ModeGains> gains; // may be empty when only simulating
  RateConstants rates;
  GridSpec grid;
  double cert_delta = 1e-5; // observation gap the certificate is evaluated at
  double epsilon = 1.0;     // rate-chain parameter
  bool has_gains = false;
  bool has_rates = false;
};

// Built-in two-mode cubic benchmark system with sawtooth delay, its control
// design gains, and its rate constants.
RunConfig example5_preset();

RunConfig load_config(const std::string& path);
RunConfig parse_config_json(const std::string& text);
std::string config_json(const RunConfig& config);

} // namespace sddestab

#endif // SDDESTAB_CONFIG_HPP
