#include <iostream>

#include "CLI11.hpp"
#include "neckspec/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"neckspec: spectral experiments on glued cylindrical ends"};
  app.require_subcommand(1);
  std::string config, out;
  for (const char* name : {"roots", "q0check", "paircheck", "glue", "density"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory (overrides the config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  std::optional<std::filesystem::path> out_dir;
  if (!out.empty()) out_dir = out;
  return neckspec::run_command(cmd, config, out_dir, std::cout, std::cerr);
}
