#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "rwre/cli.hpp"

int main(int argc, char** argv) {
  using namespace rwre::cli;
  CLI::App app{"Quenched random walk in random environment: simulation and verification"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  RunOptions opts;
  std::string seed_text;
  std::string centering_text;
  unsigned workers = 0;
  const std::map<std::string, std::string> help{
      {"simulate", "sample hitting times and positions in one quenched environment"},
      {"analyze", "environment conditions and model-level moments"},
      {"clt-hitting", "normal limit of the centered hitting time T(n)"},
      {"clt-position", "normal limit of the centered position X(t)"},
      {"lln", "laws of large numbers for T(n)/n and X(t)/t"},
      {"diagnostics", "rel1/rel2 errors and fluctuation of the centering"},
      {"oracle-check", "series moments against exact linear solves and Monte Carlo"},
  };
  for (const auto& name : commands()) {
    const auto it = help.find(name);
    auto* sub = app.add_subcommand(name, it == help.end() ? std::string{} : it->second);
    sub->add_option("--config", opts.config_path, "experiment config (JSON) or a previous manifest.json")
        ->required();
    sub->add_option("--out", opts.out_dir, "output directory")->required();
    sub->add_option("--seed", seed_text, "master seed (overrides RWRE_SEED and the config)");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::Range(1u, 4096u));
    sub->add_option("--centering", centering_text, "position centering")
        ->check(CLI::IsMember({"explicit", "implicit"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  opts.command = app.get_subcommands().front()->get_name();
  try {
    if (!seed_text.empty()) opts.seed = parse_seed(seed_text, "--seed");
  } catch (const rwre::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (workers > 0) opts.workers = workers;
  if (centering_text == "explicit") opts.centering = rwre::harness::Centering::kExplicit;
  if (centering_text == "implicit") opts.centering = rwre::harness::Centering::kImplicit;
  if (const char* s = std::getenv("RWRE_SEED"); s != nullptr && *s != '\0') opts.env_seed = s;
  return run(opts, std::cout, std::cerr);
}
