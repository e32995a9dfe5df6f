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

// Protocols built on local attestation: report verification, the
// non-interactive key transport with optional key confirmation, and
// verification of the remote -> user app -> driver -> TB -> hypervisor
// trust chain.

#ifndef SGXIO_ATTESTATION_H_
#define SGXIO_ATTESTATION_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "sgxio/bytes.h"
#include "sgxio/crypto.h"
#include "sgxio/enclave.h"
#include "sgxio/status.h"

namespace sgxio::attest {

using sgx::Cpu;
using sgx::Enclave;
using sgx::Measurement;
using sgx::Report;

// Recomputes the report MAC under the verifier's own report key.
bool LocalAttestVerify(const Cpu &cpu, const Enclave &verifier,
                       const Report &report);

// (A_ID, nonce): 32-byte sender id || 32-byte nonce, no framing.
struct KeyTransportMessage {
  static constexpr std::size_t kWireSize = 64;

  Measurement sender_id;
  crypto::Nonce32 nonce;

  Bytes Serialize() const;
  static std::optional<KeyTransportMessage> Parse(ByteView wire);
};

struct KeyTransportOffer {
  crypto::SymKey key;
  KeyTransportMessage message;
};

// Sender side. The key is the MAC of a report over the nonce targeted at
// the receiver; the report itself is discarded.
KeyTransportOffer KeyTransportSend(const Cpu &cpu, const Enclave &sender,
                                   const Measurement &receiver_id,
                                   crypto::DeterministicRng &rng);
KeyTransportOffer KeyTransportSend(const Cpu &cpu, const Enclave &sender,
                                   const Measurement &receiver_id,
                                   const crypto::Nonce32 &nonce);

// Receiver side. Always yields a key; a sender that targeted someone else
// is only detected when the key is first used.
crypto::SymKey KeyTransportRecv(const Cpu &cpu, const Enclave &receiver,
                                const KeyTransportMessage &message);

// Channel nonce schedule: byte 0 carries the direction, bytes 4..11 a
// big-endian counter.
enum class Direction : uint8_t {
  kInitiatorToResponder = 0,
  kResponderToInitiator = 1,
  kConfirm = 2,
};
crypto::AeadNonce MakeFrameNonce(Direction direction, uint64_t counter);
std::optional<std::pair<Direction, uint64_t>> ParseFrameNonce(
    const crypto::AeadNonce &nonce);

// Liveness extension: the receiver returns the transport nonce encrypted
// under the fresh key.
Bytes MakeKeyConfirmation(const crypto::SymKey &key,
                          const KeyTransportMessage &message);

// Held by the sender for one session; accepts exactly one confirmation.
class KeyConfirmVerifier {
 public:
  KeyConfirmVerifier(const crypto::SymKey &key, const crypto::Nonce32 &nonce)
      : key_(key), nonce_(nonce) {}

  Status Accept(ByteView confirmation);
  bool confirmed() const { return confirmed_; }

 private:
  crypto::SymKey key_;
  crypto::Nonce32 nonce_;
  bool confirmed_ = false;
};

// TB verdict for one driver: verdict byte || issued-to || step counter.
struct Approval {
  static constexpr std::size_t kWireSize = 1 + Measurement::kSize + 8;

  bool verdict = false;
  Measurement issued_to;
  uint64_t step = 0;

  Bytes Serialize() const;
  static std::optional<Approval> Parse(ByteView wire);
};

enum class ChainLink { kUserApp, kDriver, kTb, kHypervisor };
std::string_view ChainLinkName(ChainLink link);

struct RolePolicy {
  Measurement expected;
  bool debug = false;
};

struct TrustPolicy {
  RolePolicy user_app;
  RolePolicy driver;
  RolePolicy tb;
};

// Everything a verifier collects while walking the chain. The enclave
// pointers are the parties that verify the next local link on behalf of
// the chain (the user app checks the driver, the driver checks the TB).
struct ChainEvidence {
  sgx::ReportData challenge;
  sgx::RemoteReport user_app_report;
  const Enclave *user_app = nullptr;
  Report driver_report;
  const Enclave *driver = nullptr;
  Report tb_report;
  Bytes approval_wire;
};

// Data a driver places in its report to the user app for a given challenge.
sgx::ReportData DriverLinkData(const sgx::ReportData &challenge);
// Data the TB places in its report to bind an approval response.
sgx::ReportData ApprovalBinding(ByteView approval_wire);

struct ChainVerdict {
  bool pass = false;
  std::optional<ChainLink> broken;
  std::string detail;
};

// Checks, in order: the signed user-app report, the driver's local report,
// the TB's local report, then the TB's approval (which stands for the
// hypervisor attestation). The first failing hop is named.
ChainVerdict AttestChain(const Cpu &cpu,
                         const crypto::VerifyKey &cpu_attestation_key,
                         const TrustPolicy &policy,
                         const ChainEvidence &evidence);

}  // namespace sgxio::attest

#endif  // SGXIO_ATTESTATION_H_
