// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: one subcommand per task, a shared set of
// override flags, and the exit codes documented on lenscope::run.
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <lenscope/runner.hpp>

namespace {

struct CliArgs {
  std::string config;
  std::string out_dir;
  std::optional<double> tol;
  std::optional<unsigned> seed;
};

void add_common_options(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("config,--config", args.config,
                  "run configuration (JSON)")
      ->required();
  cmd->add_option("--out", args.out_dir,
                  "output directory, overriding output.directory");
  cmd->add_option("--tol", args.tol,
                  "override numerics.quad_tol and numerics.route_tol");
  cmd->add_option("--seed", args.seed,
                  "jitter crosscheck sample planes deterministically");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"lenscope: paraxial optics, aberration coefficients and "
               "wave propagation for round magnetic lenses"};
  app.require_subcommand(0, 1);

  CliArgs args;
  static constexpr const char* tasks[] = {"trace", "cardinal",
                                          "aberrations", "propagate",
                                          "crosscheck"};
  static constexpr const char* blurbs[] = {
      "propagate a centroid state through the lens",
      "image plane, magnification, focal length and rotation",
      "third-order aberration coefficients between conjugate planes",
      "propagate a wavefunction between two planes",
      "compare the fundamental-pair routes against each other"};
  for (int i = 0; i < 5; ++i)
    add_common_options(app.add_subcommand(tasks[i], blurbs[i]), args);

  // A bare invocation with --config is allowed; the task then comes from
  // the configuration file alone.
  app.add_option("--config", args.config, "run configuration (JSON)");
  app.add_option("--out", args.out_dir,
                 "output directory, overriding output.directory");
  app.add_option("--tol", args.tol,
                 "override numerics.quad_tol and numerics.route_tol");
  app.add_option("--seed", args.seed,
                 "jitter crosscheck sample planes deterministically");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::string subcommand;
  for (const CLI::App* sub : app.get_subcommands())
    subcommand = sub->get_name();
  if (subcommand.empty() && args.config.empty()) {
    std::cerr << app.help();
    return 2;
  }

  lenscope::RunOverrides ov;
  ov.subcommand = subcommand;
  ov.out_dir = args.out_dir;
  ov.tol = args.tol;
  ov.seed = args.seed;
  return lenscope::run(args.config, ov);
}
