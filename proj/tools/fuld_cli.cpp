// fuld: experiment harness. One verb per invocation; see `fuld --help`.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "fuld/error.hpp"
#include "fuld/experiment.hpp"

namespace cli = fuld::cli;

namespace {

std::string dashed(std::string key) {
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

struct VerbCommand {
  cli::Verb verb;
  CLI::App* app = nullptr;
  std::string config_path;
  std::string out_dir = "out";
  bool dump_defaults = false;
  std::map<std::string, std::string> flags;
  std::map<std::string, CLI::Option*> options;
};

int run_verb(VerbCommand& cmd, const std::string& cache_dir, unsigned threads) {
  if (cmd.dump_defaults) {
    std::cout << cli::defaults_reference(cmd.verb).dump(2) << '\n';
    return cli::kExitOk;
  }
  cli::json user = cli::json::object();
  try {
    if (!cmd.config_path.empty()) {
      std::ifstream in(cmd.config_path);
      if (!in) throw fuld::ConfigError("config", "cannot open " + cmd.config_path);
      try {
        user = cli::json::parse(in);
      } catch (const cli::json::parse_error& e) {
        throw fuld::ConfigError("config", e.what());
      }
    }
    for (const auto& [key, opt] : cmd.options) {
      if (opt->count()) user[key] = cli::parse_flag_value(cmd.verb, key, cmd.flags[key]);
    }
    const auto resolved = cli::resolve(cmd.verb, user);
    cli::RunOptions options;
    options.cache_dir = cache_dir.empty() ? cli::default_cache_dir() : std::filesystem::path(cache_dir);
    options.threads = threads;
    const auto outcome = cli::run(cmd.verb, resolved, cmd.out_dir, options, std::cout);
    if (outcome.exit_code != cli::kExitOk) std::cerr << "fuld " << cli::verb_name(cmd.verb) << ": " << outcome.message << '\n';
    return outcome.exit_code;
  } catch (const fuld::ConfigError& e) {
    std::cerr << "fuld " << cli::verb_name(cmd.verb) << ": config error: " << e.what() << '\n';
    return cli::kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional underdamped Langevin dynamics experiments"};
  app.require_subcommand(1);
  std::string cache_dir;
  unsigned threads = 0;
  app.add_option("--cache-dir", cache_dir, "kinetic-table cache (default: $FULD_CACHE_DIR or .fuld-cache)");
  app.add_option("--threads", threads, "worker threads (0 = hardware concurrency)");

  std::vector<VerbCommand> verbs;
  verbs.reserve(5);
  const std::pair<cli::Verb, const char*> described[] = {
      {cli::Verb::table, "tabulate the SaS kinetic energy and export it"},
      {cli::Verb::simulate, "run an ensemble of FULD / UD / overdamped trajectories"},
      {cli::Verb::field, "export the conformal Hamiltonian vector field"},
      {cli::Verb::optimize, "train the tiny MLP with FULD momentum"},
      {cli::Verb::validate_sampler, "KS test of the stable sampler against the integrated density"},
  };
  for (const auto& [verb, help] : described) {
    auto& cmd = verbs.emplace_back();
    cmd.verb = verb;
    cmd.app = app.add_subcommand(cli::verb_name(verb), help);
    cmd.app->add_option("--config", cmd.config_path, "JSON config; flags override its values");
    cmd.app->add_option("--out", cmd.out_dir, "artifact directory")->capture_default_str();
    cmd.app->add_flag("--dump-defaults", cmd.dump_defaults, "print every key with its default and exit");
    const auto reference = cli::defaults_reference(verb);
    for (const auto& [key, entry] : reference.items()) {
      cmd.options[key] = cmd.app->add_option("--" + dashed(key), cmd.flags[key],
                                             entry["description"].get<std::string>() + " (default " +
                                                 entry["default"].dump() + ")");
    }
  }

  std::string compare_a, compare_b, compare_out;
  auto* compare = app.add_subcommand("compare", "compare two simulate artifact directories");
  compare->add_option("run_a", compare_a, "first artifact directory")->required();
  compare->add_option("run_b", compare_b, "second artifact directory")->required();
  compare->add_option("--out", compare_out, "write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitConfig;
  }

  if (compare->parsed()) {
    std::ofstream file;
    if (!compare_out.empty()) {
      file.open(compare_out, std::ios::trunc);
      if (!file) {
        std::cerr << "fuld compare: cannot write " << compare_out << '\n';
        return cli::kExitConfig;
      }
    }
    const auto outcome = cli::compare(compare_a, compare_b, compare_out.empty() ? std::cout : file);
    if (outcome.exit_code != cli::kExitOk) std::cerr << "fuld compare: " << outcome.message << '\n';
    return outcome.exit_code;
  }
  for (auto& cmd : verbs) {
    if (cmd.app->parsed()) return run_verb(cmd, cache_dir, threads);
  }
  return cli::kExitConfig;
}
