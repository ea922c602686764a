// cli.hpp: Subcommands of the sfd command-line tool
//
//   sfd <simulate|ensemble|fit|bounds|wigner|analytic|synth> [-c FILE] [key=value ...]
//
// Each command writes its artifacts under the `output` prefix and prints a JSON
// summary (with the resolved configuration) to stdout.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfd/config.hpp"

namespace sfd {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3, kExitModel = 4 };

nlohmann::ordered_json cmd_simulate(const ConfigMap& config);
nlohmann::ordered_json cmd_ensemble(const ConfigMap& config);
nlohmann::ordered_json cmd_fit(const ConfigMap& config);
nlohmann::ordered_json cmd_bounds(const ConfigMap& config);
nlohmann::ordered_json cmd_wigner(const ConfigMap& config);
nlohmann::ordered_json cmd_analytic(const ConfigMap& config);
nlohmann::ordered_json cmd_synth(const ConfigMap& config);

// Parses arguments (without the program name), runs the command and maps errors to exit codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace sfd
