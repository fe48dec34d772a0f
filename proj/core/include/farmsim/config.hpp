#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "farmsim/simengine.hpp"

namespace farmsim::cfg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` text, one setting per line, `#` comments. Keys carry
/// section prefixes (workload., scheduler., eviction., node., store.,
/// provisioner., engine.). Later lines win; order is preserved for echo.
struct KeyValues {
  std::map<std::string, std::string> values;

  /// Throws ConfigError with file:line diagnostics.
  static KeyValues from_file(const std::string& path);
  static KeyValues from_string(const std::string& text,
                               const std::string& origin = "<inline>");
};

/// Applies one setting. Throws ConfigError naming the key on unknown keys
/// or unparseable values.
void apply_key(sim::SimConfig& config, const std::string& key,
               const std::string& value);

/// Defaults overlaid with every entry in kv. Keys beginning with "sweep."
/// are rejected here; the sweep driver strips them first.
sim::SimConfig build_config(const KeyValues& kv);

/// Fully-resolved flat listing of every setting, suitable for re-running.
std::string echo_config(const sim::SimConfig& config);

/// Applies a named bundled preset. Returns false if the name is unknown.
bool apply_preset(sim::SimConfig& config, const std::string& name);

std::vector<std::string> preset_names();

}  // namespace farmsim::cfg
