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

namespace sgxio::sgx {

using crypto::Digest;
using crypto::Hash;

std::string_view HostContextName(HostContext context) {
  return context == HostContext::kHypervisor ? "hypervisor-context"
                                             : "os-context";
}

Measurement Measure(const EnclaveImage &image) {
  const uint8_t flag = image.debug ? 1 : 0;
  Digest m = Hash(ByteView(&flag, 1));
  for (const Bytes &page : image.pages) {
    m = Hash(Concat({m.view(), page}));
  }
  return Measurement(m.array());
}

Bytes EinitToken::SignedMessage() const {
  const uint8_t flag = debug ? 1 : 0;
  return Concat({target_measurement.view(), ByteView(&flag, 1)});
}

EinitToken LaunchAuthority::Issue(const Measurement &target,
                                  bool debug) const {
  EinitToken token{target, debug, {}};
  token.signature = key_.Sign(token.SignedMessage());
  return token;
}

void Enclave::Store(std::size_t offset, ByteView bytes) {
  if (offset >= memory_.size()) return;
  const std::size_t n = std::min(bytes.size(), memory_.size() - offset);
  std::copy_n(bytes.begin(), n, memory_.begin() + offset);
}

Bytes Enclave::Load(std::size_t offset, std::size_t n) const {
  if (offset >= memory_.size()) return {};
  n = std::min(n, memory_.size() - offset);
  return Bytes(memory_.begin() + offset, memory_.begin() + offset + n);
}

Bytes Report::Serialize() const {
  return Concat({enclave_id.view(), data.view(), mac.view()});
}

std::optional<Report> Report::Parse(ByteView wire) {
  if (wire.size() != kWireSize) return std::nullopt;
  Report r;
  r.enclave_id = Measurement::Prefix(wire.subspan(0, 32));
  r.data = ReportData::Prefix(wire.subspan(32, 32));
  r.mac = crypto::MacTag::Prefix(wire.subspan(64, 16));
  return r;
}

Bytes RemoteReport::SignedMessage() const {
  const uint8_t flag = debug ? 1 : 0;
  return Concat({identity.view(), ByteView(&flag, 1), data.view()});
}

bool VerifyRemoteReport(const crypto::VerifyKey &cpu_key,
                        const RemoteReport &report) {
  return crypto::Verify(cpu_key, report.SignedMessage(), report.signature);
}

Cpu::Cpu(CpuSecret secret, crypto::SigningKey attestation_key,
         crypto::VerifyKey launch_key)
    : secret_(secret),
      attestation_key_(std::move(attestation_key)),
      launch_key_(launch_key) {}

Cpu Cpu::Create(crypto::DeterministicRng &rng,
                const crypto::VerifyKey &launch_key) {
  CpuSecret secret = rng.Next<CpuSecret>();
  crypto::SigningKey attestation = rng.NextSigningKey();
  return Cpu(secret, std::move(attestation), launch_key);
}

StatusOr<Enclave> Cpu::Launch(const EnclaveImage &image,
                              const EinitToken &token,
                              const Measurement &vendor_expected,
                              HostContext host) {
  const Measurement measured = Measure(image);
  if (measured != vendor_expected) {
    return Error{ErrorCode::kMeasurementMismatch,
                 "measured " + ToHex(measured.view())};
  }
  if (!crypto::Verify(launch_key_, token.SignedMessage(), token.signature) ||
      token.target_measurement != measured) {
    return Error{ErrorCode::kInvalidToken, "einittoken rejected"};
  }
  if (token.debug != image.debug) {
    return Error{ErrorCode::kDebugFlagMismatch,
                 "token debug flag differs from image"};
  }
  return Enclave(measured, image.debug, host, next_instance_++);
}

crypto::SymKey Cpu::DeriveKey(std::string_view label,
                              const Measurement &id) const {
  return crypto::KeyFromDigest(
      Hash(Concat({secret_.view(), AsBytes(label), id.view()})));
}

Report Cpu::EReport(const Enclave &self, const Measurement &target,
                    const ReportData &data) const {
  const crypto::SymKey key = DeriveKey(kReportKeyLabel, target);
  Report r{self.identity(), data, {}};
  r.mac = crypto::Cmac(key, Concat({r.enclave_id.view(), r.data.view()}));
  return r;
}

crypto::SymKey Cpu::EGetKey(const Enclave &self, KeyType type) const {
  return DeriveKey(type == KeyType::kReport ? kReportKeyLabel : kSealKeyLabel,
                   self.identity());
}

RemoteReport Cpu::MakeRemoteReport(const Enclave &self,
                                   const ReportData &data) const {
  RemoteReport r{self.identity(), self.debug(), data, {}};
  r.signature = attestation_key_.Sign(r.SignedMessage());
  return r;
}

StatusOr<Bytes> Cpu::DebugRead(const Enclave &target, std::size_t offset,
                               std::size_t n) const {
  if (!target.debug()) {
    return Error{ErrorCode::kProductionEnclave, "EDBGRD on production"};
  }
  if (offset + n > target.memory_.size()) {
    return Error{ErrorCode::kOutOfRange, "EDBGRD past enclave memory"};
  }
  return target.Load(offset, n);
}

Status Cpu::DebugWrite(Enclave &target, std::size_t offset,
                       ByteView bytes) const {
  if (!target.debug()) {
    return Status(ErrorCode::kProductionEnclave, "EDBGWR on production");
  }
  if (offset + bytes.size() > target.memory_.size()) {
    return Status(ErrorCode::kOutOfRange, "EDBGWR past enclave memory");
  }
  target.Store(offset, bytes);
  return Status::Ok();
}

Bytes SealedBlob::Serialize() const {
  return Concat({nonce.view(), ciphertext});
}

std::optional<SealedBlob> SealedBlob::Parse(ByteView wire) {
  if (wire.size() < crypto::AeadNonce::kSize + crypto::kAeadTagSize) {
    return std::nullopt;
  }
  SealedBlob blob;
  blob.nonce = crypto::AeadNonce::Prefix(wire);
  blob.ciphertext.assign(wire.begin() + crypto::AeadNonce::kSize, wire.end());
  return blob;
}

SealedBlob Seal(const crypto::SymKey &seal_key, ByteView plaintext,
                crypto::DeterministicRng &rng) {
  SealedBlob blob;
  blob.nonce = rng.Next<crypto::AeadNonce>();
  blob.ciphertext = crypto::AeadSeal(seal_key, blob.nonce, plaintext,
                                     AsBytes(kSealAssociationTag));
  return blob;
}

StatusOr<Bytes> Unseal(const crypto::SymKey &seal_key,
                       const SealedBlob &blob) {
  auto opened = crypto::AeadOpen(seal_key, blob.nonce, blob.ciphertext,
                                 AsBytes(kSealAssociationTag));
  if (!opened.ok()) {
    return Error{ErrorCode::kUnsealFailed, "sealed blob failed integrity check"};
  }
  return std::move(opened).value();
}

}  // namespace sgxio::sgx
