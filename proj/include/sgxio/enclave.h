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

// Model of the enclave-capable CPU: measured loading, launch control,
// local-attestation reports, key derivation and debug access.
//
// Every derived key is bound to the per-CPU secret through domain-separated
// hashing:
//
//   report_key(id) = first16(SHA256(cpu_secret || "report" || id))
//   seal_key(id)   = first16(SHA256(cpu_secret || "seal"   || id))
//
// The secret itself never leaves Cpu.

#ifndef SGXIO_ENCLAVE_H_
#define SGXIO_ENCLAVE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sgxio/bytes.h"
#include "sgxio/crypto.h"
#include "sgxio/status.h"

namespace sgxio::sgx {

struct MeasurementTag {};
struct ReportDataTag {};
struct CpuSecretTag {};

// MRENCLAVE: the identity of an enclave.
using Measurement = FixedBytes<32, MeasurementTag>;
using ReportData = FixedBytes<32, ReportDataTag>;
using CpuSecret = FixedBytes<32, CpuSecretTag>;

inline constexpr std::string_view kReportKeyLabel = "report";
inline constexpr std::string_view kSealKeyLabel = "seal";
inline constexpr std::string_view kSealAssociationTag = "sgxio-sealed-v1";
inline constexpr std::size_t kEnclaveMemorySize = 4096;

enum class HostContext { kHypervisor, kOs };
std::string_view HostContextName(HostContext context);

struct EnclaveImage {
  std::vector<Bytes> pages;
  bool debug = false;
};

// m0 = H(debug byte); m(i+1) = H(m(i) || page(i)).
Measurement Measure(const EnclaveImage &image);

struct EinitToken {
  Measurement target_measurement;
  bool debug = false;
  crypto::Signature signature;

  // target_measurement || debug byte.
  Bytes SignedMessage() const;
};

// Holder of the launch key; issues EINITTOKENs.
class LaunchAuthority {
 public:
  explicit LaunchAuthority(crypto::SigningKey key) : key_(std::move(key)) {}

  EinitToken Issue(const Measurement &target, bool debug) const;
  const crypto::VerifyKey &public_key() const { return key_.public_key(); }

 private:
  crypto::SigningKey key_;
};

// A launched enclave. Its private memory is reachable only through the
// enclave's own Store/Load (code running inside) or through Cpu debug
// operations, which refuse production enclaves.
class Enclave {
 public:
  const Measurement &identity() const { return identity_; }
  bool debug() const { return debug_; }
  HostContext host() const { return host_; }
  uint64_t instance_id() const { return instance_id_; }

  // In-enclave accessors. Out-of-range access is clamped to the store.
  void Store(std::size_t offset, ByteView bytes);
  Bytes Load(std::size_t offset, std::size_t n) const;

 private:
  friend class Cpu;
  Enclave(Measurement identity, bool debug, HostContext host,
          uint64_t instance_id)
      : identity_(identity),
        debug_(debug),
        host_(host),
        instance_id_(instance_id),
        memory_(kEnclaveMemorySize, 0) {}

  Measurement identity_;
  bool debug_;
  HostContext host_;
  uint64_t instance_id_;
  Bytes memory_;
};

// (E_ID || data || mac), fixed-size fields, no framing.
struct Report {
  static constexpr std::size_t kWireSize =
      Measurement::kSize + ReportData::kSize + crypto::MacTag::kSize;

  Measurement enclave_id;
  ReportData data;
  crypto::MacTag mac;

  Bytes Serialize() const;
  static std::optional<Report> Parse(ByteView wire);
  friend bool operator==(const Report &, const Report &) = default;
};

// CPU-signed report for remote verifiers.
struct RemoteReport {
  Measurement identity;
  bool debug = false;
  ReportData data;
  crypto::Signature signature;

  Bytes SignedMessage() const;
};

bool VerifyRemoteReport(const crypto::VerifyKey &cpu_key,
                        const RemoteReport &report);

enum class KeyType { kReport, kSeal };

class Cpu {
 public:
  Cpu(CpuSecret secret, crypto::SigningKey attestation_key,
      crypto::VerifyKey launch_key);

  // Draws the secret and attestation key from |rng|.
  static Cpu Create(crypto::DeterministicRng &rng,
                    const crypto::VerifyKey &launch_key);

  // Creates an instance iff Measure(image) == vendor_expected, the token
  // verifies under the launch key and targets that measurement, and the
  // token's debug flag equals the image's.
  StatusOr<Enclave> Launch(const EnclaveImage &image, const EinitToken &token,
                           const Measurement &vendor_expected,
                           HostContext host);

  Report EReport(const Enclave &self, const Measurement &target,
                 const ReportData &data) const;
  crypto::SymKey EGetKey(const Enclave &self, KeyType type) const;
  RemoteReport MakeRemoteReport(const Enclave &self,
                                const ReportData &data) const;

  // EDBGRD / EDBGWR after any platform interception has been applied.
  StatusOr<Bytes> DebugRead(const Enclave &target, std::size_t offset,
                            std::size_t n) const;
  Status DebugWrite(Enclave &target, std::size_t offset, ByteView bytes) const;

  const crypto::VerifyKey &attestation_public_key() const {
    return attestation_key_.public_key();
  }

 private:
  crypto::SymKey DeriveKey(std::string_view label,
                           const Measurement &id) const;

  CpuSecret secret_;
  crypto::SigningKey attestation_key_;
  crypto::VerifyKey launch_key_;
  uint64_t next_instance_ = 1;
};

struct SealedBlob {
  crypto::AeadNonce nonce;
  Bytes ciphertext;

  Bytes Serialize() const;
  static std::optional<SealedBlob> Parse(ByteView wire);
};

// AEAD under a sealing key with kSealAssociationTag as associated data; the
// tag check is the integrity redundancy on unseal.
SealedBlob Seal(const crypto::SymKey &seal_key, ByteView plaintext,
                crypto::DeterministicRng &rng);
StatusOr<Bytes> Unseal(const crypto::SymKey &seal_key, const SealedBlob &blob);

}  // namespace sgxio::sgx

#endif  // SGXIO_ENCLAVE_H_
