#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "passforge/commands.hpp"
#include "passforge/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Pass-selection compiler: train, compile, evaluate and search transpilation pipelines"};
  app.require_subcommand(1, 1);
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  for (const char* name : {"train", "compile", "eval", "bruteforce", "bench"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Overrides the config seed");
    sub->add_option("--out", out, "Root directory for run outputs");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    auto cfg = passforge::RunConfig::load(config);
    if (seed) cfg.set_seed(*seed);
    if (out) cfg.out = std::filesystem::absolute(*out).string();
    std::filesystem::path dir;
    if (command == "train") dir = passforge::cmd_train(cfg);
    else if (command == "compile") dir = passforge::cmd_compile(cfg);
    else if (command == "eval") dir = passforge::cmd_eval(cfg);
    else if (command == "bruteforce") dir = passforge::cmd_bruteforce(cfg);
    else dir = passforge::cmd_bench(cfg);
    std::cout << dir.string() << '\n';
    return EXIT_SUCCESS;
  } catch (const passforge::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
