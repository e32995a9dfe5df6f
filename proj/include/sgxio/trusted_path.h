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

// Secure I/O drivers multiplexing one user device over two virtual devices,
// and the user-app end of the encrypted channel.
//
// Frame on the wire: 12-byte nonce || ciphertext || 16-byte tag. Frames on
// the encrypted virtual device carry a 4-byte big-endian length prefix.

#ifndef SGXIO_TRUSTED_PATH_H_
#define SGXIO_TRUSTED_PATH_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgxio/attestation.h"
#include "sgxio/bytes.h"
#include "sgxio/crypto.h"
#include "sgxio/enclave.h"
#include "sgxio/status.h"
#include "sgxio/trace.h"

namespace sgxio::tpath {

using attest::KeyTransportMessage;
using sgx::Cpu;
using sgx::Enclave;
using sgx::Measurement;

enum class Role { kInitiator, kResponder };

// One end of an established session. Counters start at 1 and must strictly
// increase per direction.
class SecureChannel {
 public:
  SecureChannel(const crypto::SymKey &key, Role role)
      : key_(key), role_(role) {}

  Bytes Seal(ByteView plaintext);
  // AuthFailure on any tampering or a frame sent in our own direction;
  // ReplayDetected when the counter does not advance.
  StatusOr<Bytes> Open(ByteView frame);

  const crypto::SymKey &key() const { return key_; }
  uint64_t last_sent() const { return sent_; }
  uint64_t last_received() const { return received_; }

 private:
  crypto::SymKey key_;
  Role role_;
  uint64_t sent_ = 0;
  uint64_t received_ = 0;
};

inline constexpr std::size_t kFrameOverhead =
    crypto::AeadNonce::kSize + crypto::kAeadTagSize;

Bytes LengthPrefix(ByteView frame);
// nullopt unless |wire| is exactly one length-prefixed record.
std::optional<Bytes> StripLengthPrefix(ByteView wire);

enum class VirtualDeviceKind { kPassthrough, kEncryptedChar };
std::string_view VirtualDeviceKindName(VirtualDeviceKind kind);

struct VirtualDevice {
  std::string id;
  VirtualDeviceKind kind;
};

enum class DriverMode { kPassthrough, kTrusted };
std::string_view DriverModeName(DriverMode mode);

// Report data a driver uses to bind its approval to a session request.
sgx::ReportData AcceptBinding(ByteView approval_wire,
                              const crypto::Nonce32 &nonce);

struct DriverAcceptance {
  sgx::Report report;  // driver -> user app
  Bytes approval_wire;
  std::optional<Bytes> confirmation;
};

struct VdevWrite {
  std::string vdev;
  Bytes bytes;
};

class SecureDriver {
 public:
  // |tb_identity| is the TB measurement the driver was built to trust.
  SecureDriver(Trace &trace, const Cpu &cpu, Enclave enclave,
               std::string domain, std::string device,
               Measurement tb_identity);

  // Two virtual devices, announced once at driver start.
  void CreateVirtualDevices();
  const VirtualDevice &passthrough_device() const { return vdev_a_; }
  const VirtualDevice &encrypted_device() const { return vdev_b_; }

  // Keeps the approval only if |tb_report| comes from the trusted TB,
  // targets this driver and binds |approval_wire|.
  Status SetApproval(Bytes approval_wire, const sgx::Report &tb_report);
  const Bytes &approval_wire() const { return approval_wire_; }
  const sgx::Report &tb_report() const { return tb_report_; }

  // Responder side of session setup. Switches to trusted mode.
  DriverAcceptance Accept(const Measurement &user_app,
                          const KeyTransportMessage &message, bool confirm);

  // Input path: one device record to exactly one virtual device.
  VdevWrite Route(ByteView event);
  // Output path: a frame from the user app, decrypted for the device.
  StatusOr<Bytes> Deliver(ByteView vdev_bytes);

  // Back to passthrough; the session key is dropped.
  void Close();

  DriverMode mode() const { return mode_; }
  const Enclave &enclave() const { return enclave_; }
  Enclave &enclave() { return enclave_; }
  const std::string &domain() const { return domain_; }
  const std::string &device() const { return device_; }

 private:
  void SetMode(DriverMode mode);

  Trace &trace_;
  const Cpu &cpu_;
  Enclave enclave_;
  std::string domain_;
  std::string device_;
  Measurement tb_identity_;
  VirtualDevice vdev_a_;
  VirtualDevice vdev_b_;
  DriverMode mode_ = DriverMode::kPassthrough;
  std::optional<SecureChannel> channel_;
  Bytes approval_wire_;
  sgx::Report tb_report_;
};

struct SessionRequest {
  KeyTransportMessage message;
  crypto::SymKey key;
};

class UserApp {
 public:
  UserApp(const Cpu &cpu, Enclave enclave,
          std::vector<Measurement> allowed_drivers);

  // First half of session setup: ChannelRefused if |driver_id| is not in
  // the app's policy.
  StatusOr<SessionRequest> BeginTrustedPath(const Measurement &driver_id,
                                            crypto::DeterministicRng &rng);
  // Second half: checks the driver's report, its approval and the optional
  // key confirmation, then installs the session under |name|.
  Status CompleteTrustedPath(const std::string &name,
                             const Measurement &driver_id,
                             const SessionRequest &request,
                             const DriverAcceptance &reply,
                             bool require_confirmation);

  bool HasSession(const std::string &name) const {
    return sessions_.contains(name);
  }
  const SecureChannel *session(const std::string &name) const;
  void Close(const std::string &name) { sessions_.erase(name); }

  StatusOr<Bytes> ReceiveInput(const std::string &name, ByteView vdev_bytes);
  StatusOr<Bytes> SendOutput(const std::string &name, ByteView plaintext);

  const Enclave &enclave() const { return enclave_; }
  Enclave &enclave() { return enclave_; }

 private:
  const Cpu &cpu_;
  Enclave enclave_;
  std::vector<Measurement> allowed_drivers_;
  std::map<std::string, SecureChannel> sessions_;
};

enum class VerifyOutcome { kDisplayed, kAborted };

struct UserVerifyResult {
  VerifyOutcome outcome = VerifyOutcome::kAborted;
  Bytes screen_bytes;  // for the screen driver's encrypted device
  std::string reason;
};

// Shows the provisioned secret on the screen iff both the keyboard and the
// screen sessions are up and the secret unseals.
UserVerifyResult UserVerify(const Cpu &cpu, UserApp &app,
                            const std::string &keyboard_session,
                            const std::string &screen_session,
                            const sgx::SealedBlob &secret);

}  // namespace sgxio::tpath

#endif  // SGXIO_TRUSTED_PATH_H_
