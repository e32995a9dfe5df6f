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

#include "sgxio/scenario.h"

#include <gtest/gtest.h>

namespace sgxio::scenario {
namespace {

constexpr char kMinimal[] = R"(
name: minimal
seed: 7
platform:
  encls_tweak: false
  capabilities:
    - {holder: vm-os, resource: "device:nic"}
devices:
  - {id: nic, direction: bidirectional, mmio: [0x100, 0x200]}
  - {id: keyboard, direction: input, mmio: [0x200, 0x300]}
enclaves:
  tb:
    pages: ["text:tb"]
  drivers:
    kbd:
      device: keyboard
      pages: ["6b6264"]
      debug: true
  apps:
    app:
      pages: ["text:app"]
      substitute_pages: ["text:other app"]
      drivers: [kbd]
  others:
    helper:
      pages: ["text:helper"]
boot:
  stages:
    - {name: fw, blob: "text:firmware"}
    - {name: hv, blob: "00ff"}
  golden_pcr: "0000000000000000000000000000000000000000000000000000000000000000"
  compromised: {stage: hv, blob: "text:evil"}
actions:
  - {op: boot}
  - {op: type, device: keyboard, data: "random:4", name: x}
expect:
  - name: booted
    check: event_count
    event: boot
    domain: hypervisor
    fields: {hypervisor: honest}
    equals: 1
    when: {encls_tweak: false}
  - name: order
    check: ordering
    sequence:
      - {event: boot}
      - {event: device_input}
  - name: hidden
    check: substring_absent
    value: x
    min_len: 2
  - name: audit
    check: capability_audit
    clean: true
)";

// Replaces the first occurrence of |from| in the minimal document.
std::string Edit(const std::string &from, const std::string &to) {
  std::string doc = kMinimal;
  const auto pos = doc.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  if (pos != std::string::npos) doc.replace(pos, from.size(), to);
  return doc;
}

void ExpectConfigError(const std::string &doc, const std::string &needle) {
  auto parsed = ParseScenario(doc);
  ASSERT_FALSE(parsed.ok());
  EXPECT_EQ(parsed.code(), ErrorCode::kConfigError);
  EXPECT_NE(parsed.error().detail.find(needle), std::string::npos)
      << parsed.error().detail;
}

TEST(ParseScenarioTest, MinimalDocument) {
  auto parsed = ParseScenario(kMinimal);
  ASSERT_TRUE(parsed.ok()) << parsed.error().ToString();
  const Scenario &s = *parsed;
  EXPECT_EQ(s.name, "minimal");
  EXPECT_EQ(s.seed, 7u);
  EXPECT_FALSE(s.toggles.encls_tweak);
  EXPECT_TRUE(s.toggles.aik_pinning);
  EXPECT_FALSE(s.toggles.expose_tpm_to_os);
  ASSERT_EQ(s.capabilities.size(), 1u);
  EXPECT_EQ(platform::ResourceName(s.capabilities[0].resource), "device:nic");
  ASSERT_EQ(s.devices.size(), 2u);
  EXPECT_EQ(s.devices[0].mmio.base, 0x100u);
  EXPECT_EQ(s.devices[0].mmio.limit, 0x200u);
  EXPECT_EQ(s.tb.pages[0], Bytes({'t', 'b'}));
  ASSERT_EQ(s.drivers.size(), 1u);
  EXPECT_EQ(s.drivers[0].device, "keyboard");
  EXPECT_EQ(s.drivers[0].image.pages[0], Bytes({'k', 'b', 'd'}));
  EXPECT_TRUE(s.drivers[0].image.debug);
  ASSERT_EQ(s.apps.size(), 1u);
  EXPECT_TRUE(s.apps[0].image.substitute_pages.has_value());
  EXPECT_EQ(s.apps[0].drivers, std::vector<std::string>{"kbd"});
  ASSERT_EQ(s.others.size(), 1u);
  ASSERT_EQ(s.boot.stages.size(), 2u);
  EXPECT_EQ(s.boot.stages[1].blob, Bytes({0x00, 0xff}));
  ASSERT_TRUE(s.boot.compromised.has_value());
  EXPECT_EQ(s.boot.compromised->name, "hv");
  ASSERT_EQ(s.actions.size(), 2u);
  EXPECT_EQ(s.actions[1].op, "type");
  EXPECT_EQ(s.actions[1].params.at("data"), "random:4");
  ASSERT_EQ(s.expectations.size(), 4u);
  EXPECT_EQ(s.expectations[0].matcher.type, "boot");
  EXPECT_EQ(s.expectations[0].matcher.domain, "hypervisor");
  EXPECT_EQ(s.expectations[0].matcher.fields.at("hypervisor"), "honest");
  EXPECT_EQ(s.expectations[0].params.at("equals"), "1");
  EXPECT_FALSE(s.expectations[0].when.at("encls_tweak"));
  EXPECT_EQ(s.expectations[1].sequence.size(), 2u);
  EXPECT_EQ(s.expectations[2].params.at("min_len"), "2");
  EXPECT_EQ(s.expectations[3].params.at("clean"), "true");
}

TEST(ParseScenarioTest, UnknownKeysRejectedAtEveryLevel) {
  ExpectConfigError(Edit("seed: 7", "sed: 7"), "unknown key 'sed'");
  ExpectConfigError(Edit("encls_tweak: false", "encls_twaek: false"),
                    "unknown key 'encls_twaek'");
  ExpectConfigError(Edit("direction: input", "direction: input, irq: 3"),
                    "unknown key 'irq'");
  ExpectConfigError(Edit("      debug: true", "      debgu: true"),
                    "unknown key 'debgu'");
  ExpectConfigError(Edit("  compromised: {stage: hv,", "  compromized: {stage: hv,"),
                    "unknown key 'compromized'");
  ExpectConfigError(Edit("{op: boot}", "{op: boot, compromized: true}"),
                    "unknown key 'compromized'");
  ExpectConfigError(Edit("    min_len: 2", "    min_len: 2\n    equals: 1"),
                    "unknown key 'equals'");
  ExpectConfigError(Edit("when: {encls_tweak: false}", "when: {tweak: false}"),
                    "unknown key 'tweak'");
  ExpectConfigError(Edit("- {event: device_input}", "- {event: device_input, at: 1}"),
                    "unknown key 'at'");
}

TEST(ParseScenarioTest, MissingRequiredKeys) {
  ExpectConfigError(Edit("name: minimal\n", ""), "missing key 'name'");
  ExpectConfigError(Edit("{op: type, device: keyboard,", "{op: type,"),
                    "missing key 'device'");
  ExpectConfigError(Edit("    value: x\n", ""), "missing key 'value'");
  ExpectConfigError(Edit("    clean: true\n", ""), "missing key 'clean'");
}

TEST(ParseScenarioTest, BadValues) {
  ExpectConfigError(Edit("{op: boot}", "{op: reboot}"), "unknown op 'reboot'");
  ExpectConfigError(Edit("check: ordering", "check: order"), "unknown check");
  ExpectConfigError(Edit("seed: 7", "seed: seven"), "unsigned integer");
  ExpectConfigError(Edit("encls_tweak: false", "encls_tweak: no"),
                    "expected true or false");
  ExpectConfigError(Edit("\"00ff\"", "\"0g\""), "expected hex");
  ExpectConfigError(Edit("golden_pcr: \"00", "golden_pcr: \""), "32 bytes");
  ExpectConfigError(Edit("direction: input", "direction: sideways"),
                    "unknown direction");
  ExpectConfigError(Edit("mmio: [0x100, 0x200]", "mmio: [0x200, 0x100]"),
                    "empty range");
  ExpectConfigError(Edit("resource: \"device:nic\"", "resource: \"gpu\""),
                    "bad resource");
  ExpectConfigError(Edit("holder: vm-os", "holder: driver(1)"), "only vm-os");
  ExpectConfigError(Edit("name: booted", "name: order"), "duplicate name");
  ExpectConfigError("- a\n- b\n", "not a mapping");
  ExpectConfigError("name: [unclosed\n", "");
}

TEST(ParseScenarioTest, CrossReferences) {
  ExpectConfigError(Edit("device: keyboard\n", "device: mouse\n"),
                    "unknown device mouse");
  ExpectConfigError(Edit("drivers: [kbd]", "drivers: [mouse]"),
                    "unknown driver mouse");
  ExpectConfigError(Edit("{stage: hv,", "{stage: bios,"), "no such stage");
}

TEST(ParseScenarioTest, LoadMissingFile) {
  auto parsed = LoadScenario("/nonexistent/scenario.yaml");
  ASSERT_FALSE(parsed.ok());
  EXPECT_EQ(parsed.code(), ErrorCode::kConfigError);
}

TEST(ParseResourceTest, AllForms) {
  EXPECT_EQ(platform::ResourceName(*ParseResource("tpm")), "tpm");
  EXPECT_EQ(platform::ResourceName(*ParseResource("device:nic")), "device:nic");
  EXPECT_EQ(platform::ResourceName(*ParseResource("tb-channel:vm-os")),
            "tb-channel:vm-os");
  EXPECT_EQ(platform::ResourceName(*ParseResource("tb-channel:driver(3)")),
            "tb-channel:driver(3)");
  EXPECT_EQ(platform::ResourceName(*ParseResource("mem:0x10-0x20")),
            "mem:16-32");
  for (const char *bad : {"", "device:", "tb-channel:hypervisor",
                          "tb-channel:driver(x)", "mem:5", "mem:9-3", "disk"}) {
    EXPECT_FALSE(ParseResource(bad).has_value()) << bad;
  }
}

}  // namespace
}  // namespace sgxio::scenario
