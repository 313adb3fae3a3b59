#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gclab: geometric control laboratory"};
  app.set_version_flag("--version", "gclab 0.3.0");
  app.require_subcommand(1);

  gclab::RunOptions opt;
  double epsilon = 0.0;
  double epsilon0 = 0.0;
  std::string preset;
  int resolution = 0;
  std::string out;
  std::string manifest;

  const char* scenario[] = {"region", "gcc", "coarea", "simulate", "observe", "quasistab"};
  const char* about[] = {"build and verify a control region",
                         "check the geometric control condition by ray tracing",
                         "coarea and prism checks",
                         "simulate the damped wave equation",
                         "observability experiment over a seeded ensemble",
                         "quasi-stability fit over seeded pairs"};
  for (int k = 0; k < 6; ++k) {
    CLI::App* sub = app.add_subcommand(scenario[k], about[k]);
    sub->add_option("--config", opt.config_path, "scenario JSON (or a run manifest)")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "run directory");
    sub->add_option("--epsilon", epsilon, "measure bound of the admissible region");
    sub->add_option("--epsilon0", epsilon0, "target measure, below epsilon");
    sub->add_option("--preset", preset, "preset region")->check(CLI::IsMember({"omega1", "omega2", "omega3"}));
    sub->add_option("--resolution", resolution, "cells per unit length");
  }
  CLI::App* report = app.add_subcommand("report", "summarize run manifests");
  report->add_option("--out", out, "output root to scan");
  report->add_option("--manifest", manifest, "single manifest")->check(CLI::ExistingFile);
  CLI::App* render = app.add_subcommand("render", "regenerate figures from stored CSVs");
  render->add_option("--manifest", manifest, "run manifest")->required()->check(CLI::ExistingFile);
  render->add_option("--what", opt.what, "figure")
      ->check(CLI::IsMember({"all", "region", "rays", "energy", "field", "ratios", "zeta"}));
  CLI::App* rerun = app.add_subcommand("rerun", "re-execute a manifest and compare CSV hashes");
  rerun->add_option("--manifest", manifest, "run manifest")->required()->check(CLI::ExistingFile);
  rerun->add_option("--out", out, "directory for the rerun");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gclab::kInvalid;
  }

  CLI::App* chosen = app.get_subcommands().front();
  opt.subcommand = chosen->get_name();
  opt.out = out;
  opt.manifest = manifest;
  auto given = [&](const char* name) {
    const CLI::Option* o = chosen->get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };
  if (given("--epsilon")) opt.epsilon = epsilon;
  if (given("--epsilon0")) opt.epsilon0 = epsilon0;
  if (given("--preset")) opt.preset = preset;
  if (given("--resolution")) opt.resolution = resolution;
  return gclab::run_command(opt, std::cout);
}
