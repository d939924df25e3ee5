#pragma once

// Configuration-driven front end for mcs-lab.
//
// A config file is flat "key = value" text. Lines starting with '#' or ';'
// are comments. Keys may appear at top level or under a section header:
// [metric] takes the metric keys, [run] the general keys and
// [<command name>] the keys of that command. Keys of a command section that
// is not the selected command are checked but unused. Unknown keys and keys
// under the wrong section are rejected by name.

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcs::cli {

// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

// Thrown for malformed configs, unknown keys and out-of-range values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeyInfo {
  std::string key;
  std::string section;  // "run", "metric" or a command name
  std::string default_value;
  std::string help;
};

// Every key with its default, in documentation order.
const std::vector<KeyInfo>& known_keys();
const std::vector<std::string>& command_names();

class RunConfig {
 public:
  // All keys at their defaults.
  RunConfig();

  // Sets a key; throws ConfigError for unknown keys or keys that do not
  // belong to `section` (empty section means top level).
  void set(const std::string& key, const std::string& value,
           const std::string& section = "");

  const std::string& raw(const std::string& key) const;
  std::string command() const;

  // Typed accessors; throw ConfigError when the value does not parse or
  // lies outside [lo, hi].
  double real(const std::string& key, double lo, double hi) const;
  int integer(const std::string& key, int lo, int hi) const;
  bool flag(const std::string& key) const;

  // key = value lines for every key, sorted by section.
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
};

// Parses config text on top of the defaults. `origin` names the source in
// error messages.
RunConfig parse_config(const std::string& text,
                       const std::string& origin = "config");
RunConfig load_config(const std::string& path);

// Runs the selected command. The human-readable summary goes to `summary`,
// the table to the file named by the `out` key (to `summary` when empty).
// Returns 0, 1 (a mathematical check failed) or 2 (usage or precondition).
int run(const RunConfig& config, std::ostream& summary, std::ostream& errors);

// Command-line entry point: --config, --out, --seed, --verbose and
// repeated --set key=value, applied in that order of precedence over the
// file.
int main_entry(int argc, char** argv);

}  // namespace mcs::cli
