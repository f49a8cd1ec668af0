#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

namespace fuld::cli {

using json = nlohmann::json;

enum class Verb { table, simulate, field, optimize, validate_sampler };

Verb parse_verb(const std::string& name);
std::string verb_name(Verb verb);

// Documented defaults of every configuration key, with a one-line
// description per key (defaults_reference).
json defaults(Verb verb);
json defaults_reference(Verb verb);

// Merges `user` over the defaults. Unknown keys and type mismatches throw
// ConfigError naming the key. Simulate resolves integrator-dependent
// defaults (histogram range, expected divergence).
json resolve(Verb verb, const json& user);

// Parses a flag value against the type of the key's default.
json parse_flag_value(Verb verb, const std::string& key, const std::string& text);

struct RunOptions {
  std::filesystem::path cache_dir;  // kinetic-table cache
  unsigned threads = 0;
};

struct Outcome {
  int exit_code = 0;
  std::string message;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitValidation = 4;

// Runs a resolved spec, writing config.json and the verb's CSV artifacts
// into `out`. Artifacts written by a failing run are removed. Library
// exceptions are mapped onto the exit codes above.
Outcome run(Verb verb, const json& resolved, const std::filesystem::path& out, const RunOptions& options,
            std::ostream& log);

// Side-by-side report of two simulate artifact directories; bin mismatch
// is a configuration error.
Outcome compare(const std::filesystem::path& a, const std::filesystem::path& b, std::ostream& report);

// FULD_CACHE_DIR when set, otherwise ".fuld-cache".
std::filesystem::path default_cache_dir();

}  // namespace fuld::cli
