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

#include "sgxio/attestation.h"

namespace sgxio::attest {

bool LocalAttestVerify(const Cpu &cpu, const Enclave &verifier,
                       const Report &report) {
  const crypto::SymKey key = cpu.EGetKey(verifier, sgx::KeyType::kReport);
  const crypto::MacTag mac = crypto::Cmac(
      key, Concat({report.enclave_id.view(), report.data.view()}));
  return mac == report.mac;
}

Bytes KeyTransportMessage::Serialize() const {
  return Concat({sender_id.view(), nonce.view()});
}

std::optional<KeyTransportMessage> KeyTransportMessage::Parse(ByteView wire) {
  if (wire.size() != kWireSize) return std::nullopt;
  return KeyTransportMessage{Measurement::Prefix(wire.subspan(0, 32)),
                             crypto::Nonce32::Prefix(wire.subspan(32, 32))};
}

KeyTransportOffer KeyTransportSend(const Cpu &cpu, const Enclave &sender,
                                   const Measurement &receiver_id,
                                   crypto::DeterministicRng &rng) {
  return KeyTransportSend(cpu, sender, receiver_id,
                          rng.Next<crypto::Nonce32>());
}

KeyTransportOffer KeyTransportSend(const Cpu &cpu, const Enclave &sender,
                                   const Measurement &receiver_id,
                                   const crypto::Nonce32 &nonce) {
  const Report rp = cpu.EReport(sender, receiver_id,
                                sgx::ReportData(nonce.array()));
  return KeyTransportOffer{crypto::SymKey(rp.mac.array()),
                           KeyTransportMessage{sender.identity(), nonce}};
}

crypto::SymKey KeyTransportRecv(const Cpu &cpu, const Enclave &receiver,
                                const KeyTransportMessage &message) {
  const crypto::SymKey report_key =
      cpu.EGetKey(receiver, sgx::KeyType::kReport);
  const crypto::MacTag mac = crypto::Cmac(
      report_key, Concat({message.sender_id.view(), message.nonce.view()}));
  return crypto::SymKey(mac.array());
}

crypto::AeadNonce MakeFrameNonce(Direction direction, uint64_t counter) {
  std::array<uint8_t, 12> raw{};
  raw[0] = static_cast<uint8_t>(direction);
  for (int i = 0; i < 8; ++i) {
    raw[4 + i] = static_cast<uint8_t>(counter >> (56 - 8 * i));
  }
  return crypto::AeadNonce(raw);
}

std::optional<std::pair<Direction, uint64_t>> ParseFrameNonce(
    const crypto::AeadNonce &nonce) {
  const auto &raw = nonce.array();
  if (raw[0] > static_cast<uint8_t>(Direction::kConfirm) || raw[1] != 0 ||
      raw[2] != 0 || raw[3] != 0) {
    return std::nullopt;
  }
  return std::make_pair(static_cast<Direction>(raw[0]),
                        ReadU64BigEndian(nonce.view().subspan(4)));
}

Bytes MakeKeyConfirmation(const crypto::SymKey &key,
                          const KeyTransportMessage &message) {
  return crypto::AeadSeal(key, MakeFrameNonce(Direction::kConfirm, 0),
                          message.nonce.view(), {});
}

Status KeyConfirmVerifier::Accept(ByteView confirmation) {
  if (confirmed_) {
    return Status(ErrorCode::kReplayDetected, "session already confirmed");
  }
  auto plain = crypto::AeadOpen(key_, MakeFrameNonce(Direction::kConfirm, 0),
                                confirmation, {});
  if (!plain.ok()) return plain.status();
  if (!std::equal(plain->begin(), plain->end(), nonce_.view().begin(),
                  nonce_.view().end())) {
    return Status(ErrorCode::kAuthFailure, "confirmation nonce mismatch");
  }
  confirmed_ = true;
  return Status::Ok();
}

Bytes Approval::Serialize() const {
  Bytes out;
  out.reserve(kWireSize);
  out.push_back(verdict ? 1 : 0);
  out.insert(out.end(), issued_to.view().begin(), issued_to.view().end());
  AppendU64BigEndian(out, step);
  return out;
}

std::optional<Approval> Approval::Parse(ByteView wire) {
  if (wire.size() != kWireSize || wire[0] > 1) return std::nullopt;
  Approval a;
  a.verdict = wire[0] == 1;
  a.issued_to = Measurement::Prefix(wire.subspan(1, 32));
  a.step = ReadU64BigEndian(wire.subspan(33, 8));
  return a;
}

std::string_view ChainLinkName(ChainLink link) {
  switch (link) {
    case ChainLink::kUserApp: return "user_app";
    case ChainLink::kDriver: return "driver";
    case ChainLink::kTb: return "tb";
    case ChainLink::kHypervisor: return "hypervisor";
  }
  return "unknown";
}

sgx::ReportData DriverLinkData(const sgx::ReportData &challenge) {
  return sgx::ReportData(
      crypto::Hash(Concat({AsBytes("chain-driver"), challenge.view()}))
          .array());
}

sgx::ReportData ApprovalBinding(ByteView approval_wire) {
  return sgx::ReportData(
      crypto::Hash(Concat({AsBytes("tb-approval"), approval_wire})).array());
}

namespace {

ChainVerdict Broken(ChainLink link, std::string detail) {
  return ChainVerdict{false, link, std::move(detail)};
}

}  // namespace

ChainVerdict AttestChain(const Cpu &cpu,
                         const crypto::VerifyKey &cpu_attestation_key,
                         const TrustPolicy &policy,
                         const ChainEvidence &evidence) {
  const sgx::RemoteReport &remote = evidence.user_app_report;
  if (!sgx::VerifyRemoteReport(cpu_attestation_key, remote)) {
    return Broken(ChainLink::kUserApp, "remote report signature invalid");
  }
  if (remote.identity != policy.user_app.expected) {
    return Broken(ChainLink::kUserApp, "user app measurement not in policy");
  }
  if (remote.debug != policy.user_app.debug) {
    return Broken(ChainLink::kUserApp, "user app debug flag not in policy");
  }
  if (remote.data != evidence.challenge) {
    return Broken(ChainLink::kUserApp, "stale challenge");
  }

  if (evidence.user_app == nullptr ||
      !LocalAttestVerify(cpu, *evidence.user_app, evidence.driver_report)) {
    return Broken(ChainLink::kDriver, "driver report MAC rejected");
  }
  if (evidence.driver_report.enclave_id != policy.driver.expected) {
    return Broken(ChainLink::kDriver, "driver measurement not in policy");
  }
  if (evidence.driver_report.data != DriverLinkData(evidence.challenge)) {
    return Broken(ChainLink::kDriver, "driver report not bound to challenge");
  }

  if (evidence.driver == nullptr ||
      !LocalAttestVerify(cpu, *evidence.driver, evidence.tb_report)) {
    return Broken(ChainLink::kTb, "tb report MAC rejected");
  }
  if (evidence.tb_report.enclave_id != policy.tb.expected) {
    return Broken(ChainLink::kTb, "tb measurement not in policy");
  }
  if (evidence.tb_report.data != ApprovalBinding(evidence.approval_wire)) {
    return Broken(ChainLink::kTb, "approval not bound to tb report");
  }

  auto approval = Approval::Parse(evidence.approval_wire);
  if (!approval || !approval->verdict) {
    return Broken(ChainLink::kHypervisor, "tb approval withheld");
  }
  if (approval->issued_to != evidence.driver_report.enclave_id) {
    return Broken(ChainLink::kHypervisor, "approval issued to another driver");
  }
  return ChainVerdict{true, std::nullopt, "chain verified"};
}

}  // namespace sgxio::attest
