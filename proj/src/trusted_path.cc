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

#include "sgxio/trusted_path.h"

#include <algorithm>

namespace sgxio::tpath {
namespace {

attest::Direction SendDirection(Role role) {
  return role == Role::kInitiator ? attest::Direction::kInitiatorToResponder
                                  : attest::Direction::kResponderToInitiator;
}

attest::Direction PeerDirection(Role role) {
  return SendDirection(role == Role::kInitiator ? Role::kResponder
                                                : Role::kInitiator);
}

}  // namespace

Bytes SecureChannel::Seal(ByteView plaintext) {
  const crypto::AeadNonce nonce =
      attest::MakeFrameNonce(SendDirection(role_), ++sent_);
  const Bytes sealed = crypto::AeadSeal(key_, nonce, plaintext, {});
  return Concat({nonce.view(), sealed});
}

StatusOr<Bytes> SecureChannel::Open(ByteView frame) {
  if (frame.size() < kFrameOverhead) {
    return Error{ErrorCode::kAuthFailure, "short frame"};
  }
  const auto nonce = crypto::AeadNonce::Prefix(frame);
  auto parsed = attest::ParseFrameNonce(nonce);
  if (!parsed || parsed->first != PeerDirection(role_)) {
    return Error{ErrorCode::kAuthFailure, "bad frame nonce"};
  }
  auto plain =
      crypto::AeadOpen(key_, nonce, frame.subspan(crypto::AeadNonce::kSize), {});
  if (!plain.ok()) return plain.status();
  if (parsed->second <= received_) {
    return Error{ErrorCode::kReplayDetected,
                 "counter " + std::to_string(parsed->second) + " after " +
                     std::to_string(received_)};
  }
  received_ = parsed->second;
  return plain;
}

Bytes LengthPrefix(ByteView frame) {
  Bytes out;
  AppendU32BigEndian(out, static_cast<uint32_t>(frame.size()));
  out.insert(out.end(), frame.begin(), frame.end());
  return out;
}

std::optional<Bytes> StripLengthPrefix(ByteView wire) {
  if (wire.size() < 4) return std::nullopt;
  const uint32_t n = ReadU32BigEndian(wire);
  if (wire.size() - 4 != n) return std::nullopt;
  return Bytes(wire.begin() + 4, wire.end());
}

std::string_view VirtualDeviceKindName(VirtualDeviceKind kind) {
  return kind == VirtualDeviceKind::kPassthrough ? "passthrough"
                                                 : "encrypted-char";
}

std::string_view DriverModeName(DriverMode mode) {
  return mode == DriverMode::kPassthrough ? "passthrough" : "trusted";
}

sgx::ReportData AcceptBinding(ByteView approval_wire,
                              const crypto::Nonce32 &nonce) {
  return sgx::ReportData(
      crypto::Hash(Concat({AsBytes("tp-accept"), approval_wire, nonce.view()}))
          .array());
}

SecureDriver::SecureDriver(Trace &trace, const Cpu &cpu, Enclave enclave,
                           std::string domain, std::string device,
                           Measurement tb_identity)
    : trace_(trace),
      cpu_(cpu),
      enclave_(std::move(enclave)),
      domain_(std::move(domain)),
      device_(std::move(device)),
      tb_identity_(tb_identity),
      vdev_a_{device_ + "-A", VirtualDeviceKind::kPassthrough},
      vdev_b_{device_ + "-B", VirtualDeviceKind::kEncryptedChar} {}

void SecureDriver::CreateVirtualDevices() {
  for (const VirtualDevice *v : {&vdev_a_, &vdev_b_}) {
    trace_.Emit(domain_, "vdev_create",
                {{"vdev", v->id},
                 {"kind", std::string(VirtualDeviceKindName(v->kind))},
                 {"device", device_}});
  }
}

Status SecureDriver::SetApproval(Bytes approval_wire,
                                 const sgx::Report &tb_report) {
  if (tb_report.enclave_id != tb_identity_ ||
      !attest::LocalAttestVerify(cpu_, enclave_, tb_report) ||
      tb_report.data != attest::ApprovalBinding(approval_wire)) {
    return Status(ErrorCode::kAttestationFailed, "tb response not authentic");
  }
  approval_wire_ = std::move(approval_wire);
  tb_report_ = tb_report;
  return Status::Ok();
}

DriverAcceptance SecureDriver::Accept(const Measurement &user_app,
                                      const KeyTransportMessage &message,
                                      bool confirm) {
  const crypto::SymKey key = attest::KeyTransportRecv(cpu_, enclave_, message);
  channel_.emplace(key, Role::kResponder);
  enclave_.Store(0, key.view());
  DriverAcceptance out{
      cpu_.EReport(enclave_, user_app,
                   AcceptBinding(approval_wire_, message.nonce)),
      approval_wire_, std::nullopt};
  if (confirm) out.confirmation = attest::MakeKeyConfirmation(key, message);
  SetMode(DriverMode::kTrusted);
  return out;
}

VdevWrite SecureDriver::Route(ByteView event) {
  if (mode_ == DriverMode::kTrusted) {
    return {vdev_b_.id, LengthPrefix(channel_->Seal(event))};
  }
  return {vdev_a_.id, Bytes(event.begin(), event.end())};
}

StatusOr<Bytes> SecureDriver::Deliver(ByteView vdev_bytes) {
  if (mode_ == DriverMode::kPassthrough) {
    return Bytes(vdev_bytes.begin(), vdev_bytes.end());
  }
  auto frame = StripLengthPrefix(vdev_bytes);
  if (!frame) return Error{ErrorCode::kAuthFailure, "bad length prefix"};
  return channel_->Open(*frame);
}

void SecureDriver::Close() {
  channel_.reset();
  enclave_.Store(0, Bytes(crypto::SymKey::kSize, 0));
  SetMode(DriverMode::kPassthrough);
}

void SecureDriver::SetMode(DriverMode mode) {
  if (mode == mode_) return;
  mode_ = mode;
  trace_.Emit(domain_, "driver_mode",
              {{"device", device_}, {"mode", std::string(DriverModeName(mode))}});
}

UserApp::UserApp(const Cpu &cpu, Enclave enclave,
                 std::vector<Measurement> allowed_drivers)
    : cpu_(cpu),
      enclave_(std::move(enclave)),
      allowed_drivers_(std::move(allowed_drivers)) {}

StatusOr<SessionRequest> UserApp::BeginTrustedPath(
    const Measurement &driver_id, crypto::DeterministicRng &rng) {
  if (std::find(allowed_drivers_.begin(), allowed_drivers_.end(), driver_id) ==
      allowed_drivers_.end()) {
    return Error{ErrorCode::kChannelRefused, "driver not in app policy"};
  }
  attest::KeyTransportOffer offer =
      attest::KeyTransportSend(cpu_, enclave_, driver_id, rng);
  return SessionRequest{offer.message, offer.key};
}

Status UserApp::CompleteTrustedPath(const std::string &name,
                                    const Measurement &driver_id,
                                    const SessionRequest &request,
                                    const DriverAcceptance &reply,
                                    bool require_confirmation) {
  if (reply.report.enclave_id != driver_id ||
      !attest::LocalAttestVerify(cpu_, enclave_, reply.report) ||
      reply.report.data !=
          AcceptBinding(reply.approval_wire, request.message.nonce)) {
    return Status(ErrorCode::kChannelRefused, "driver report rejected");
  }
  auto approval = attest::Approval::Parse(reply.approval_wire);
  if (!approval || !approval->verdict || approval->issued_to != driver_id) {
    return Status(ErrorCode::kApprovalMissing, "driver holds no approval");
  }
  if (require_confirmation) {
    attest::KeyConfirmVerifier verifier(request.key, request.message.nonce);
    if (!reply.confirmation) {
      return Status(ErrorCode::kAuthFailure, "key confirmation missing");
    }
    Status s = verifier.Accept(*reply.confirmation);
    if (!s.ok()) return s;
  }
  sessions_.insert_or_assign(name, SecureChannel(request.key, Role::kInitiator));
  return Status::Ok();
}

const SecureChannel *UserApp::session(const std::string &name) const {
  auto it = sessions_.find(name);
  return it == sessions_.end() ? nullptr : &it->second;
}

StatusOr<Bytes> UserApp::ReceiveInput(const std::string &name,
                                      ByteView vdev_bytes) {
  auto it = sessions_.find(name);
  if (it == sessions_.end()) {
    return Error{ErrorCode::kChannelRefused, "no session " + name};
  }
  auto frame = StripLengthPrefix(vdev_bytes);
  if (!frame) return Error{ErrorCode::kAuthFailure, "bad length prefix"};
  return it->second.Open(*frame);
}

StatusOr<Bytes> UserApp::SendOutput(const std::string &name,
                                    ByteView plaintext) {
  auto it = sessions_.find(name);
  if (it == sessions_.end()) {
    return Error{ErrorCode::kChannelRefused, "no session " + name};
  }
  return LengthPrefix(it->second.Seal(plaintext));
}

UserVerifyResult UserVerify(const Cpu &cpu, UserApp &app,
                            const std::string &keyboard_session,
                            const std::string &screen_session,
                            const sgx::SealedBlob &secret) {
  UserVerifyResult result;
  if (!app.HasSession(keyboard_session) || !app.HasSession(screen_session)) {
    result.reason = "trusted path missing";
    return result;
  }
  auto plain =
      sgx::Unseal(cpu.EGetKey(app.enclave(), sgx::KeyType::kSeal), secret);
  if (!plain.ok()) {
    result.reason = "secret does not unseal";
    return result;
  }
  auto out = app.SendOutput(screen_session, *plain);
  if (!out.ok()) {
    result.reason = out.status().ToString();
    return result;
  }
  result.outcome = VerifyOutcome::kDisplayed;
  result.screen_bytes = std::move(out).value();
  return result;
}

}  // namespace sgxio::tpath
