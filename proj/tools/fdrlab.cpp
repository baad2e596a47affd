// Copyright (c) 2026 The fdrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0.txt
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// fdrlab: configuration-averaged quantum dynamics, linear response and
// fluctuation-dissipation checks from a JSON experiment description.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fdrlab/app/commands.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("fdrlab");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("FDRLAB_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; keep info unless "off" was asked for.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fdrlab;
  setup_logging();

  CLI::App app{"fdrlab: mean dynamics, linear response and fluctuation-dissipation checks"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<std::size_t> steps;
  unsigned threads = 1;

  const char* names[] = {"equilibrium", "evolve", "response", "fdr", "check"};
  const char* help[] = {"Gibbs and adjusted equilibrium states",
                        "configuration-averaged state, deviation term, residual and entropy margin",
                        "finite-difference response, extra term and Kubo comparison",
                        "line spectra, KMS check and windowed transforms",
                        "run the invariant suite; exit status 3 on any failure"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config_path, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides outputs.directory)");
    sub->add_option("--seed", seed, "master seed (overrides sampling.master_seed)");
    sub->add_option("--threads", threads, "worker threads for ensemble propagation")->check(CLI::Range(1u, 1024u));
    sub->add_option("--dt", dt, "time step override")->check(CLI::PositiveNumber);
    sub->add_option("--steps", steps, "number of steps override");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : app::kInvalidConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  app::RunOptions opts;
  opts.threads = threads;
  if (out) opts.out = *out;
  opts.seed = seed;
  opts.dt = dt;
  opts.steps = steps;

  try {
    auto cfg = app::apply_overrides(io::load_config(config_path), opts);
    spdlog::info("{}: config '{}' (d={}, beta={}, family={}, dt={}, n_steps={}, seed={})", command, cfg.name, cfg.dim,
                 cfg.beta, cfg.family, cfg.grid.dt, cfg.grid.n_steps, cfg.master_seed);
    app::Run run(command, std::move(cfg), opts, [](const std::string& m) { spdlog::info("{}", m); });
    int code = app::kSuccess;
    if (command == "equilibrium") code = app::cmd_equilibrium(run);
    else if (command == "evolve") code = app::cmd_evolve(run);
    else if (command == "response") code = app::cmd_response(run);
    else if (command == "fdr") code = app::cmd_fdr(run);
    else code = app::cmd_check(run, std::cout);
    spdlog::debug("outputs in {}", run.dir().string());
    return code;
  } catch (const ConfigError& e) {
    spdlog::error("invalid configuration: {}", e.what());
    return app::kInvalidConfig;
  } catch (const std::exception& e) {
    spdlog::error("{} failed: {}", command, e.what());
    return app::kNumericalFailure;
  }
}
