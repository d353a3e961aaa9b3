#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "lkl/error.hpp"

namespace {

using namespace lkl::cli;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "Experiment config (JSON)")->required();
  sub->add_option("--out", f.out, "Output directory (overrides LKL_OUT_DIR and the config)");
  sub->add_option("--seed", f.seed, "Overrides simulation.seed and assumptions.seed");
  sub->add_flag("--quiet", f.quiet, "Only report errors");
}

int run(int (*command)(const ExperimentConfig&, const RunContext&), const Flags& f) {
  ExperimentConfig config = load_config(f.config);
  if (f.seed) {
    config.simulation.seed = *f.seed;
    config.assumptions.seed = *f.seed;
  }
  RunContext ctx;
  ctx.out_dir = resolve_out_dir(f.out, config);
  ctx.quiet = f.quiet;
  ctx.log = f.quiet ? nullptr : &std::cout;
  std::filesystem::create_directories(ctx.out_dir);
  return command(config, ctx);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Langevin / Fokker-Planck KL dissipation experiments"};
  app.require_subcommand(1);
  Flags flags;

  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const ExperimentConfig&, const RunContext&);
  };
  const Entry entries[] = {
      {"verify-identity", "Grid solve and check the dissipation identity", cmd_verify_identity},
      {"oracle", "Closed-form Gaussian check in chain-rule and finite-difference modes",
       cmd_oracle},
      {"check-assumptions", "Probe regularity and dissipativity of the target family",
       cmd_check_assumptions},
      {"simulate", "Euler-Maruyama particles, optionally compared with the grid solver",
       cmd_simulate},
      {"fp-solve", "Grid solver trajectory dump", cmd_fp_solve},
  };
  int (*selected)(const ExperimentConfig&, const RunContext&) = nullptr;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub, flags);
    sub->callback([&selected, fn = e.fn] { selected = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }

  try {
    return run(selected, flags);
  } catch (const ConfigError& e) {
    std::cerr << "lkl: invalid config: " << e.what() << '\n';
  } catch (const lkl::InvalidArgument& e) {
    std::cerr << "lkl: invalid input: " << e.what() << '\n';
  } catch (const lkl::StabilityError& e) {
    std::cerr << "lkl: " << e.what() << '\n';
  } catch (const lkl::NumericalError& e) {
    std::cerr << "lkl: numerical failure: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "lkl: i/o error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "lkl: error: " << e.what() << '\n';
  }
  return kExitInvalidInput;
}
