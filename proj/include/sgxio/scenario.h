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

// Declarative scenario files: platform toggles, devices, enclave images,
// the boot script, an ordered action script and named expectations.
// Loading validates against a fixed schema and rejects unknown keys.

#ifndef SGXIO_SCENARIO_H_
#define SGXIO_SCENARIO_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgxio/bytes.h"
#include "sgxio/platform.h"
#include "sgxio/status.h"
#include "sgxio/tpm.h"
#include "sgxio/trace.h"

namespace sgxio::scenario {

using Params = std::map<std::string, std::string>;

struct Toggles {
  bool encls_tweak = true;
  bool expose_tpm_to_os = false;
  bool aik_pinning = true;
};

struct ImageSpec {
  std::vector<Bytes> pages;
  bool debug = false;
  // Loaded instead of |pages|; policies still use |pages|.
  std::optional<std::vector<Bytes>> substitute_pages;
};

struct DriverSpec {
  std::string name;
  std::string device;
  ImageSpec image;
};

struct AppSpec {
  std::string name;
  ImageSpec image;
  std::vector<std::string> drivers;  // the app's driver policy
};

struct NamedImage {
  std::string name;
  ImageSpec image;
};

struct BootSpec {
  std::vector<platform::BootStage> stages;
  tpm::Digest golden_pcr;
  std::optional<platform::BootStage> compromised;  // replaces the named stage
};

struct Action {
  std::string op;
  Params params;
};

struct Expectation {
  std::string name;
  std::string check;
  Params params;
  EventMatcher matcher;
  std::vector<EventMatcher> sequence;
  std::map<std::string, bool> when;
};

struct Scenario {
  std::string name;
  uint64_t seed = 1;
  Toggles toggles;
  std::vector<platform::Capability> capabilities;
  std::vector<platform::DeviceInfo> devices;
  ImageSpec tb;
  std::vector<DriverSpec> drivers;
  std::vector<AppSpec> apps;
  std::vector<NamedImage> others;
  BootSpec boot;
  std::vector<Action> actions;
  std::vector<Expectation> expectations;
};

// ConfigError on any syntax or schema problem.
StatusOr<Scenario> ParseScenario(const std::string &text);
StatusOr<Scenario> LoadScenario(const std::string &path);

// "tpm", "device:<id>", "tb-channel:<domain>" or "mem:<base>-<limit>".
std::optional<platform::Resource> ParseResource(std::string_view name);

}  // namespace sgxio::scenario

#endif  // SGXIO_SCENARIO_H_
