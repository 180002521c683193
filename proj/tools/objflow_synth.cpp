#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "objflow/pipeline/demo.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic bundle and pipeline config"};
  std::string scenario, out;
  std::uint64_t seed = 1;
  app.add_option("scenario", scenario, "trajopt, pusht or door")->required()->check(CLI::IsMember({"trajopt", "pusht", "door"}));
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--seed", seed, "fixture and pipeline seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    std::cout << objflow::demo::write_demo(out, objflow::demo::parse_scenario(scenario), seed) << '\n';
  } catch (const std::exception& e) {
    std::cerr << "objflow-synth: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
