#include <iostream>

#include <CLI11.hpp>

#include "inflap/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Discrete solver and checks for the inhomogeneous infinity-Laplace equation"};
  app.set_help_flag("--help", "print usage and exit");
  std::string action, config, out = ".";
  std::optional<double> h;
  unsigned seed = 0;
  app.add_option("action", action, "solve | perron | probe | radial | family | criteria | verify")
      ->required()
      ->check(CLI::IsMember({"solve", "perron", "probe", "radial", "family", "criteria", "verify"}));
  app.add_option("--config", config, "JSON run description")->required();
  app.add_option("--out", out, "output directory");
  app.add_option("--h", h, "grid spacing, overrides domain.h")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for the random start of the uniqueness check");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    auto cfg = inflap::load_config(config, action);
    auto res = inflap::run(cfg, out, h, seed);
    std::cout << (std::filesystem::path(out) / "report.json").string() << "\n";
    return res.exit_code;
  } catch (const inflap::Error& e) {
    std::cerr << "inflap: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "inflap: " << e.what() << "\n";
  }
  return 1;
}
