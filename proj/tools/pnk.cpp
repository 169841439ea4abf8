#include "pnk/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Poincare-Nekhoroshev maps around invariant tori of commuting vector fields"};
  app.set_version_flag("--version", pnk::cli::kVersion);
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  bool verbose = false;

  auto* run = app.add_subcommand("run", "Run the analysis described by a config file");
  run->add_option("config", config, "JSON run configuration")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  run->add_flag("--verbose", verbose, "Progress messages on stderr");

  auto* validate = app.add_subcommand("validate", "Check a config file without running it");
  validate->add_option("config", config, "JSON run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const pnk::cli::RunConfig cfg = pnk::cli::load_config(config);
    if (*validate) {
      pnk::cli::build_system(cfg);
      std::cout << "ok: " << cfg.system.name << " / " << cfg.analysis.type << "\n";
      return 0;
    }
    pnk::cli::RunOptions opts;
    if (!out_dir.empty()) opts.out_dir = out_dir;
    opts.verbose = verbose;
    const auto outcome = pnk::cli::run(cfg, opts);
    if (outcome.exit_code != 0) {
      const auto& err = outcome.report["error"];
      std::cerr << "pnk: " << (err.is_object() ? err["message"].get<std::string>() : "failed") << "\n";
    }
    return outcome.exit_code;
  } catch (const pnk::Error& e) {
    std::cerr << "pnk: " << e.what() << "\n";
    return pnk::cli::exit_code(e.kind());
  }
}
