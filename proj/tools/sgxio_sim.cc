/*
 *
 * Copyright 2026 The sgxio-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "sgxio/scenario.h"
#include "sgxio/simulator.h"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitExpectationFailed = 1;
constexpr int kExitConfigError = 2;

int RunScenario(const std::string &path,
                const sgxio::scenario::RunOptions &options,
                const std::string &trace_path) {
  auto scenario = sgxio::scenario::LoadScenario(path);
  if (!scenario.ok()) {
    std::cerr << "config error: " << scenario.error().detail << "\n";
    return kExitConfigError;
  }
  auto result = sgxio::scenario::Run(*scenario, options);
  if (!result.ok()) {
    std::cerr << "config error: " << result.error().detail << "\n";
    return kExitConfigError;
  }
  if (!trace_path.empty()) {
    std::ofstream out(trace_path, std::ios::binary);
    out << result->trace.Render();
    if (!out) {
      std::cerr << "cannot write trace to " << trace_path << "\n";
      return kExitConfigError;
    }
  }
  for (const auto &e : result->expectations) {
    std::cout << sgxio::scenario::OutcomeName(e.outcome) << " " << e.name
              << " (" << e.detail << ")\n";
  }
  std::cout << "scenario " << scenario->name << " seed=" << result->seed << ": "
            << (result->pass ? "PASS" : "FAIL") << "\n";
  return result->pass ? kExitPass : kExitExpectationFailed;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Discrete-event simulator for enclave-protected trusted I/O"};
  app.require_subcommand(1);

  std::string path;
  std::string trace_path;
  uint64_t seed = 0;
  sgxio::scenario::RunOptions options;
  CLI::App *run = app.add_subcommand("run", "Run one scenario file");
  run->add_option("scenario-file", path, "Scenario YAML")->required();
  CLI::Option *seed_opt =
      run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--trace", trace_path, "Write the event trace here");
  run->add_flag("--no-aik-pinning", options.no_aik_pinning,
                "Accept quotes signed by whatever TPM answers");
  run->add_flag("--expose-tpm-to-os", options.expose_tpm_to_os,
                "Grant vm-os the TPM and a TB channel");
  run->add_flag("--disable-debug-tweak", options.disable_debug_tweak,
                "Leave enclave debug instructions untrapped");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfigError;
  }
  if (seed_opt->count() > 0) options.seed = seed;
  return RunScenario(path, options, trace_path);
}
