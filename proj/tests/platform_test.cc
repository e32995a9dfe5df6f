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

#include "sgxio/platform.h"

#include <gtest/gtest.h>

#include "oracle.h"

namespace sgxio::platform {
namespace {

using crypto::DeterministicRng;

Bytes B(std::string_view s) { return Bytes(s.begin(), s.end()); }

class PlatformTest : public ::testing::Test {
 protected:
  explicit PlatformTest(PlatformConfig config = {})
      : rng(1), tpm("local", rng.NextSigningKey()), hv(trace, config) {
    hv.RegisterDevice({"keyboard", DeviceDirection::kInput, {0x50000, 0x50100}});
    hv.RegisterDevice({"screen", DeviceDirection::kOutput, {0x51000, 0x52000}});
    hv.RegisterDevice({"nic", DeviceDirection::kBidirectional, {0x53000, 0x53100}});
    hv.RegisterDriver(DomainId::Driver(1));
    hv.RegisterDriver(DomainId::Driver(2));
    stages = {{"firmware", B("fw")}, {"bootloader", B("bl")},
              {"hypervisor", B("hv")}};
  }

  void Boot(bool compromised = false) {
    hv.Boot(tpm, stages, compromised);
  }

  DeterministicRng rng;
  Trace trace;
  tpm::Tpm tpm;
  Hypervisor hv;
  std::vector<BootStage> stages;
};

TEST_F(PlatformTest, BootPcrMatchesOracle) {
  Boot();
  EXPECT_EQ(tpm.pcr().ToBytes(), oracle::BootPcr({B("fw"), B("bl"), B("hv")}));
  EXPECT_EQ(hv.epoch(), 1u);
  stages[1].blob[0] ^= 1;
  Boot();
  EXPECT_NE(tpm.pcr().ToBytes(), oracle::BootPcr({B("fw"), B("bl"), B("hv")}));
  EXPECT_EQ(hv.epoch(), 2u);
}

TEST_F(PlatformTest, CompromisedHypervisorStillBoots) {
  Boot(true);
  EXPECT_TRUE(hv.compromised());
  EXPECT_FALSE(hv.encls_bitmap().intercept_debug);
  EXPECT_EQ(trace_query::EventCount(
                trace, {"boot", "hypervisor", {{"hypervisor", "compromised"}}}),
            1u);
}

TEST_F(PlatformTest, BindIsExclusive) {
  Boot();
  ASSERT_TRUE(hv.BindDevice(DomainId::Driver(1), "keyboard").ok());
  EXPECT_EQ(hv.BindDevice(DomainId::Driver(2), "keyboard").code(),
            ErrorCode::kAlreadyBound);
  EXPECT_EQ(hv.BindDevice(DomainId::Driver(2), "mouse").code(),
            ErrorCode::kUnknownDevice);
  EXPECT_EQ(hv.BoundDriver("keyboard"), DomainId::Driver(1));
}

TEST(PlatformConfigTest, BindRevokesOsAccess) {
  PlatformConfig config;
  config.extra_grants.push_back({DeviceResource{"keyboard"}, DomainId::VmOs()});
  config.extra_grants.push_back({DeviceResource{"nic"}, DomainId::VmOs()});
  Trace trace;
  DeterministicRng rng(1);
  tpm::Tpm tpm("local", rng.NextSigningKey());
  Hypervisor hv(trace, config);
  hv.RegisterDevice({"keyboard", DeviceDirection::kInput, {0x50000, 0x50100}});
  hv.RegisterDevice({"nic", DeviceDirection::kBidirectional, {0x53000, 0x53100}});
  hv.RegisterDriver(DomainId::Driver(1));
  hv.Boot(tpm, {{"fw", B("fw")}}, false);
  auto before = hv.DeviceIo(DomainId::VmOs(), "keyboard", B("k"));
  ASSERT_TRUE(before.ok());
  ASSERT_TRUE(hv.BindDevice(DomainId::Driver(1), "keyboard").ok());
  EXPECT_EQ(hv.DeviceIo(DomainId::VmOs(), "keyboard", B("k")).code(),
            ErrorCode::kAccessDenied);
  auto passthrough = hv.DeviceIo(DomainId::VmOs(), "nic", B("packet"));
  ASSERT_TRUE(passthrough.ok());
  EXPECT_EQ(*passthrough, B("packet"));
  EXPECT_TRUE(trace_query::CapabilityAudit(trace).clean);
}

TEST_F(PlatformTest, DefaultResourceRequests) {
  Boot();
  ASSERT_TRUE(hv.BindDevice(DomainId::Driver(2), "screen").ok());
  EXPECT_EQ(hv.RequestResource(DomainId::VmOs(), TpmResource{}).code(),
            ErrorCode::kAccessDenied);
  EXPECT_EQ(hv.RequestResource(DomainId::VmOs(),
                               TbChannelResource{DomainId::VmOs()})
                .code(),
            ErrorCode::kAccessDenied);
  EXPECT_TRUE(hv.RequestResource(DomainId::Driver(1),
                                 TbChannelResource{DomainId::Driver(1)})
                  .ok());
  EXPECT_TRUE(hv.RequestResource(DomainId::TbHost(), TpmResource{}).ok());
  EXPECT_EQ(hv.RequestResource(DomainId::Driver(1), DeviceResource{"screen"})
                .code(),
            ErrorCode::kAccessDenied);
  EXPECT_EQ(hv.RequestResource(DomainId::Driver(1),
                               TbChannelResource{DomainId::Driver(2)})
                .code(),
            ErrorCode::kAccessDenied);
}

TEST_F(PlatformTest, DefaultDenyForOs) {
  Boot();
  std::vector<std::string> os_caps;
  for (const Capability &c : hv.capabilities()) {
    if (c.holder == DomainId::VmOs()) os_caps.push_back(ResourceName(c.resource));
  }
  EXPECT_EQ(os_caps, std::vector<std::string>{ResourceName(kVmOsMemory)});
  EXPECT_TRUE(trace_query::CapabilityAudit(trace).clean);
}

TEST(PlatformConfigTest, ExposedTpmBreaksCapabilityAudit) {
  PlatformConfig config;
  config.expose_tpm_to_os = true;
  Trace trace;
  DeterministicRng rng(1);
  tpm::Tpm tpm("local", rng.NextSigningKey());
  Hypervisor hv(trace, config);
  hv.Boot(tpm, {{"fw", B("fw")}}, false);
  EXPECT_TRUE(hv.RequestResource(DomainId::VmOs(), TpmResource{}).ok());
  EXPECT_FALSE(trace_query::CapabilityAudit(trace).clean);
}

TEST_F(PlatformTest, DmaPolicy) {
  Boot();
  ASSERT_TRUE(hv.BindDevice(DomainId::Driver(1), "keyboard").ok());
  EXPECT_FALSE(hv.DmaRequest("nic", DriverMemory(1)));
  EXPECT_FALSE(hv.DmaRequest("nic", kTbHostMemory));
  EXPECT_FALSE(hv.DmaRequest("nic", {kEnclaveMemory.base, kEnclaveMemory.base + 8}));
  EXPECT_TRUE(hv.DmaRequest("nic", {kVmOsMemory.base, kVmOsMemory.base + 64}));
  EXPECT_TRUE(hv.DmaRequest("keyboard", DriverMemory(1)));
  EXPECT_FALSE(hv.DmaRequest("keyboard", DriverMemory(2)));
  EXPECT_FALSE(hv.DmaRequest("keyboard", kEnclaveMemory));
}

TEST_F(PlatformTest, MmioOverlapAndInterrupts) {
  Boot();
  ASSERT_TRUE(hv.BindDevice(DomainId::Driver(1), "keyboard").ok());
  EXPECT_FALSE(hv.ClaimMmio({"nic", {0x500f0, 0x50200}}, DomainId::VmOs()));
  EXPECT_TRUE(hv.ClaimMmio({"nic", {0x53000, 0x53100}}, DomainId::VmOs()));
  EXPECT_FALSE(hv.RouteInterrupt("keyboard", "nic"));
  EXPECT_TRUE(hv.RouteInterrupt("keyboard", "keyboard"));
  EXPECT_TRUE(hv.RouteInterrupt("nic", "nic"));
  EXPECT_EQ(trace_query::EventCount(trace, {"interrupt", "hypervisor",
                                            {{"result", "drop"}}}),
            1u);
}

TEST_F(PlatformTest, EnclsGate) {
  Boot();
  EXPECT_EQ(hv.EnclsGate(DomainId::VmOs(), EnclsOp::kDebugRead).code(),
            ErrorCode::kIntercepted);
  EXPECT_EQ(hv.EnclsGate(DomainId::VmOs(), EnclsOp::kDebugWrite).code(),
            ErrorCode::kIntercepted);
  EXPECT_TRUE(hv.EnclsGate(DomainId::Hypervisor(), EnclsOp::kDebugRead).ok());
  Boot(true);
  EXPECT_TRUE(hv.EnclsGate(DomainId::VmOs(), EnclsOp::kDebugRead).ok());
}

class NoTweakTest : public PlatformTest {
 protected:
  NoTweakTest() : PlatformTest(PlatformConfig{false, false, true, {}}) {}
};

TEST_F(NoTweakTest, OsDebugPassesWhenBitmapOff) {
  Boot();
  EXPECT_TRUE(hv.EnclsGate(DomainId::VmOs(), EnclsOp::kDebugRead).ok());
}

TEST_F(PlatformTest, TpmDiversionNeedsCompromise) {
  Boot();
  EXPECT_FALSE(hv.DivertTpm());
  Boot(true);
  EXPECT_TRUE(hv.DivertTpm());
  Boot();
  EXPECT_FALSE(hv.tpm_diverted());
}

TEST(TraceTest, LineFormat) {
  Trace trace;
  trace.Emit("vm-os", "msg", {{"from", "a b"}, {"x", "1=2"}}, {0xab}, true);
  EXPECT_EQ(trace.Render(),
            "step=0 domain=vm-os event=msg from=a_b x=1_2 data=ab os_visible=1\n");
}

TEST(TraceTest, MediationAudit) {
  Trace trace;
  trace.Emit("driver(1)", "request_resource",
             {{"result", "granted"}, {"handle", "4"}});
  trace.Emit("driver(1)", "msg", {{"from", "driver(1)"}, {"to", "tb-host"},
                                  {"via", "handle:4"}});
  EXPECT_TRUE(trace_query::MediationAudit(trace).clean);
  trace.Emit("vm-os", "msg", {{"from", "vm-os"}, {"to", "tb-host"},
                              {"via", "handle:4"}});
  EXPECT_FALSE(trace_query::MediationAudit(trace).clean);
}

TEST(TraceTest, SubstringAbsence) {
  Trace trace;
  trace.Emit("vm-os", "read", {}, B("xxABCDyy"), true);
  trace.Emit("driver(1)", "internal", {}, B("SECRET"), false);
  EXPECT_FALSE(trace_query::SubstringAbsent(trace, B("zABCD"), 4));
  EXPECT_TRUE(trace_query::SubstringAbsent(trace, B("SECRET"), 4));
  EXPECT_FALSE(trace_query::SubstringAbsent(trace, B("ABC"), 4));
}

TEST(TraceTest, Ordering) {
  Trace trace;
  trace.Emit("hypervisor", "boot");
  trace.Emit("tb-host", "attest");
  EXPECT_TRUE(trace_query::Ordered(trace, {{"boot", {}, {}}, {"attest", {}, {}}}));
  EXPECT_FALSE(trace_query::Ordered(trace, {{"attest", {}, {}}, {"boot", {}, {}}}));
}

}  // namespace
}  // namespace sgxio::platform
