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

#include "sgxio/enclave.h"

#include <gtest/gtest.h>

#include <set>

#include "oracle.h"

namespace sgxio::sgx {
namespace {

using crypto::DeterministicRng;

// Produced by tests/oracles/enclave_oracle.py.
constexpr char kMeasureEmpty[] =
    "6e340b9cffb37a989ca544e6bb780a2c78901d3fb33738768511a30617afa01d";
constexpr char kMeasureE[] =
    "fa58d37bb5b810536e9046df78b8ece4cfa691d1b38a54c580a0021505ef9dd3";
constexpr char kMeasureT[] =
    "d30890d0f19a4c2722f513f419f2de33e29e939883a716156c44ae6e691011e0";
constexpr char kMeasureTDebug[] =
    "0b7af999c75c4605bac569d4575b0845f95ba5734e927bc689ad0eb647442942";
constexpr char kReportKeyT[] = "2bee4724b11649f7b8181a2d2aceafd1";
constexpr char kSealKeyE[] = "15a2069e4f8b22e17b00348073a72873";
constexpr char kReportMacEToT[] = "dff695536adf5c1ab9ee8ccc356f020d";

Bytes B(std::string_view s) { return Bytes(s.begin(), s.end()); }

CpuSecret FixedSecret() {
  CpuSecret s;
  for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] = uint8_t(i);
  return s;
}

struct Fixture {
  DeterministicRng rng{99};
  LaunchAuthority authority{rng.NextSigningKey()};
  Cpu cpu;

  explicit Fixture(CpuSecret secret = FixedSecret())
      : cpu(secret, rng.NextSigningKey(), authority.public_key()) {}

  Enclave Load(const EnclaveImage &image,
               HostContext host = HostContext::kHypervisor) {
    const Measurement m = Measure(image);
    auto e = cpu.Launch(image, authority.Issue(m, image.debug), m, host);
    EXPECT_TRUE(e.ok()) << e.status().ToString();
    return std::move(e).value();
  }
};

EnclaveImage UserApp() { return {{B("user-app code"), B("user-app data")}, false}; }
EnclaveImage Driver(bool debug = false) { return {{B("driver code")}, debug}; }

TEST(MeasureTest, FrozenOracleValues) {
  EXPECT_EQ(ToHex(Measure({{}, false}).view()), kMeasureEmpty);
  EXPECT_EQ(ToHex(Measure(UserApp()).view()), kMeasureE);
  EXPECT_EQ(ToHex(Measure(Driver()).view()), kMeasureT);
  EXPECT_EQ(ToHex(Measure(Driver(true)).view()), kMeasureTDebug);
}

TEST(MeasureTest, EmptyImageIsHashOfFlagByte) {
  EXPECT_EQ(Measure({{}, false}).ToBytes(), oracle::Sha256({0x00}));
  EXPECT_EQ(Measure({{}, true}).ToBytes(), oracle::Sha256({0x01}));
}

TEST(MeasureTest, DebugFlagChangesIdentity) {
  EXPECT_NE(Measure(Driver(false)), Measure(Driver(true)));
}

TEST(MeasureTest, PageSwapAndOracleAgreement) {
  DeterministicRng rng(21);
  std::set<Measurement> seen;
  for (int i = 0; i < 1000; ++i) {
    EnclaveImage image;
    image.debug = rng.NextU64() & 1;
    const std::size_t n = 2 + rng.NextU64() % 4;
    for (std::size_t p = 0; p < n; ++p) image.pages.push_back(rng.NextBytes(24));
    const Measurement m = Measure(image);
    EXPECT_EQ(m.ToBytes(), oracle::Measure(image.pages, image.debug));
    EXPECT_TRUE(seen.insert(m).second);
    const std::size_t a = rng.NextU64() % n;
    const std::size_t b = (a + 1 + rng.NextU64() % (n - 1)) % n;
    std::swap(image.pages[a], image.pages[b]);
    EXPECT_NE(Measure(image), m);
  }
}

// All 8 combinations of (measurement ok, token ok, debug flag ok).
TEST(LaunchTest, ExhaustiveCheckMatrix) {
  for (int mask = 0; mask < 8; ++mask) {
    const bool measure_ok = mask & 1;
    const bool token_ok = mask & 2;
    const bool debug_ok = mask & 4;
    Fixture f;
    DeterministicRng rogue_rng(5);
    LaunchAuthority rogue(rogue_rng.NextSigningKey());
    const EnclaveImage image = Driver(false);
    const Measurement m = Measure(image);
    const Measurement expected = measure_ok ? m : Measure(UserApp());
    const bool token_debug = debug_ok ? image.debug : !image.debug;
    const EinitToken token = token_ok ? f.authority.Issue(m, token_debug)
                                      : rogue.Issue(m, token_debug);
    auto e = f.cpu.Launch(image, token, expected, HostContext::kHypervisor);
    if (!measure_ok) {
      EXPECT_EQ(e.code(), ErrorCode::kMeasurementMismatch) << mask;
    } else if (!token_ok) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidToken) << mask;
    } else if (!debug_ok) {
      EXPECT_EQ(e.code(), ErrorCode::kDebugFlagMismatch) << mask;
    } else {
      ASSERT_TRUE(e.ok()) << mask;
      EXPECT_EQ(e->identity(), expected);
    }
  }
}

TEST(LaunchTest, TamperedPageIsMeasurementMismatch) {
  Fixture f;
  EnclaveImage image = Driver();
  const Measurement m = Measure(image);
  image.pages[0][0] ^= 1;
  auto e = f.cpu.Launch(image, f.authority.Issue(m, false), m,
                        HostContext::kOs);
  EXPECT_EQ(e.code(), ErrorCode::kMeasurementMismatch);
}

TEST(LaunchTest, TokenForOtherEnclaveIsInvalid) {
  Fixture f;
  const EnclaveImage image = Driver();
  const Measurement m = Measure(image);
  auto e = f.cpu.Launch(image, f.authority.Issue(Measure(UserApp()), false),
                        m, HostContext::kOs);
  EXPECT_EQ(e.code(), ErrorCode::kInvalidToken);
}

TEST(LaunchTest, HostContextAndInstanceIds) {
  Fixture f;
  Enclave a = f.Load(Driver(), HostContext::kOs);
  Enclave b = f.Load(Driver(), HostContext::kHypervisor);
  EXPECT_EQ(a.host(), HostContext::kOs);
  EXPECT_EQ(b.host(), HostContext::kHypervisor);
  EXPECT_NE(a.instance_id(), b.instance_id());
  EXPECT_EQ(a.identity(), b.identity());
  EXPECT_EQ(HostContextName(HostContext::kOs), "os-context");
}

TEST(EReportTest, FrozenOracleValues) {
  Fixture f;
  Enclave e = f.Load(UserApp());
  Enclave t = f.Load(Driver());
  ReportData data;
  std::fill_n(data.data(), data.size(), 0xA5);
  const Report r = f.cpu.EReport(e, t.identity(), data);
  EXPECT_EQ(r.enclave_id, e.identity());
  EXPECT_EQ(r.data, data);
  EXPECT_EQ(ToHex(r.mac.view()), kReportMacEToT);
  EXPECT_EQ(ToHex(f.cpu.EGetKey(t, KeyType::kReport).view()), kReportKeyT);
  EXPECT_EQ(ToHex(f.cpu.EGetKey(e, KeyType::kSeal).view()), kSealKeyE);
  EXPECT_EQ(f.cpu.EReport(e, t.identity(), data), r);
}

TEST(EReportTest, RandomCasesMatchOracle) {
  DeterministicRng rng(77);
  for (int i = 0; i < 200; ++i) {
    const CpuSecret secret = rng.Next<CpuSecret>();
    Fixture f(secret);
    Enclave e = f.Load({{rng.NextBytes(40)}, bool(rng.NextU64() & 1)});
    const Measurement target = rng.Next<Measurement>();
    const ReportData data = rng.Next<ReportData>();
    const Report r = f.cpu.EReport(e, target, data);
    EXPECT_EQ(r.mac.ToBytes(),
              oracle::ReportMac(secret.ToBytes(), target.ToBytes(),
                                e.identity().ToBytes(), data.ToBytes()));
  }
}

TEST(ReportTest, WireRoundTrip) {
  Fixture f;
  Enclave e = f.Load(UserApp());
  const Report r = f.cpu.EReport(e, Measure(Driver()), ReportData());
  const Bytes wire = r.Serialize();
  ASSERT_EQ(wire.size(), 80u);
  EXPECT_EQ(Report::Parse(wire), r);
  EXPECT_FALSE(Report::Parse(ByteView(wire).first(79)).has_value());
}

TEST(EGetKeyTest, SealKeyStableAcrossRelaunch) {
  Fixture f;
  Enclave a = f.Load(UserApp());
  Enclave b = f.Load(UserApp());
  EXPECT_EQ(f.cpu.EGetKey(a, KeyType::kSeal), f.cpu.EGetKey(b, KeyType::kSeal));
  EXPECT_NE(f.cpu.EGetKey(a, KeyType::kSeal),
            f.cpu.EGetKey(a, KeyType::kReport));
}

TEST(EGetKeyTest, DifferentCpuDifferentKey) {
  Fixture f1;
  CpuSecret other = FixedSecret();
  other.data()[0] ^= 0xff;
  Fixture f2(other);
  Enclave a = f1.Load(UserApp());
  Enclave b = f2.Load(UserApp());
  EXPECT_NE(f1.cpu.EGetKey(a, KeyType::kSeal), f2.cpu.EGetKey(b, KeyType::kSeal));
}

TEST(RemoteReportTest, VerifiesOnlyUnderIssuingCpu) {
  Fixture f1;
  DeterministicRng rng(8);
  Cpu other = Cpu::Create(rng, f1.authority.public_key());
  Enclave e = f1.Load(Driver(true));
  const RemoteReport r = f1.cpu.MakeRemoteReport(e, ReportData());
  EXPECT_TRUE(VerifyRemoteReport(f1.cpu.attestation_public_key(), r));
  EXPECT_FALSE(VerifyRemoteReport(other.attestation_public_key(), r));
  EXPECT_TRUE(r.debug);
  RemoteReport forged = r;
  forged.debug = false;
  EXPECT_FALSE(VerifyRemoteReport(f1.cpu.attestation_public_key(), forged));
}

TEST(DebugTest, ProductionRefusesDebugAccess) {
  Fixture f;
  Enclave e = f.Load(Driver(false));
  EXPECT_EQ(f.cpu.DebugRead(e, 0, 4).code(), ErrorCode::kProductionEnclave);
  EXPECT_EQ(f.cpu.DebugWrite(e, 0, B("abcd")).code(),
            ErrorCode::kProductionEnclave);
}

TEST(DebugTest, DebugEnclaveRoundTrip) {
  Fixture f;
  Enclave e = f.Load(Driver(true));
  ASSERT_TRUE(f.cpu.DebugWrite(e, 100, B("secret")).ok());
  auto read = f.cpu.DebugRead(e, 100, 6);
  ASSERT_TRUE(read.ok());
  EXPECT_EQ(*read, B("secret"));
  EXPECT_EQ(e.Load(100, 6), B("secret"));
  EXPECT_EQ(f.cpu.DebugRead(e, kEnclaveMemorySize - 2, 4).code(),
            ErrorCode::kOutOfRange);
}

TEST(SealTest, RoundTripAndCrossCpuFailure) {
  Fixture f1;
  CpuSecret other = FixedSecret();
  other.data()[31] ^= 1;
  Fixture f2(other);
  Enclave a = f1.Load(UserApp());
  Enclave b = f2.Load(UserApp());
  Enclave d = f1.Load(Driver());
  DeterministicRng rng(3);
  const SealedBlob blob = Seal(f1.cpu.EGetKey(a, KeyType::kSeal), B("pin"), rng);
  auto parsed = SealedBlob::Parse(blob.Serialize());
  ASSERT_TRUE(parsed.has_value());
  auto same = Unseal(f1.cpu.EGetKey(a, KeyType::kSeal), *parsed);
  ASSERT_TRUE(same.ok());
  EXPECT_EQ(*same, B("pin"));
  EXPECT_EQ(Unseal(f2.cpu.EGetKey(b, KeyType::kSeal), blob).code(),
            ErrorCode::kUnsealFailed);
  EXPECT_EQ(Unseal(f1.cpu.EGetKey(d, KeyType::kSeal), blob).code(),
            ErrorCode::kUnsealFailed);
}

}  // namespace
}  // namespace sgxio::sgx
