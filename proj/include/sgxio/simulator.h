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

// Runs a scenario on a freshly built machine and evaluates its
// expectations against the resulting trace.

#ifndef SGXIO_SIMULATOR_H_
#define SGXIO_SIMULATOR_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgxio/bytes.h"
#include "sgxio/scenario.h"
#include "sgxio/status.h"
#include "sgxio/trace.h"

namespace sgxio::scenario {

// Command-line overrides. Each one can only switch a defense off.
struct RunOptions {
  std::optional<uint64_t> seed;
  bool no_aik_pinning = false;
  bool expose_tpm_to_os = false;
  bool disable_debug_tweak = false;
};

Toggles EffectiveToggles(const Scenario &scenario, const RunOptions &options);

enum class Outcome { kPass, kFail, kSkip };
std::string_view OutcomeName(Outcome outcome);

struct ExpectationResult {
  std::string name;
  Outcome outcome = Outcome::kFail;
  std::string detail;
};

struct RunResult {
  bool pass = false;
  uint64_t seed = 0;
  Toggles toggles;
  std::vector<ExpectationResult> expectations;
  Trace trace;
  // Named byte strings produced during the run (typed input, provisioned
  // secrets, session keys, attacker buffers).
  std::map<std::string, Bytes> values;
};

// ConfigError if an action names something that does not exist or is not
// running. Expectation failures are reported in the result, not as errors.
StatusOr<RunResult> Run(const Scenario &scenario, const RunOptions &options);

}  // namespace sgxio::scenario

#endif  // SGXIO_SIMULATOR_H_
