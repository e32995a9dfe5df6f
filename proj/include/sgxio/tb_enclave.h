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

// The trusted-boot enclave: AIK provisioning by approved integrators,
// hypervisor attestation against a pinned AIK, driver approval and sealing
// key delegation.

#ifndef SGXIO_TB_ENCLAVE_H_
#define SGXIO_TB_ENCLAVE_H_

#include <optional>
#include <string>
#include <vector>

#include "sgxio/attestation.h"
#include "sgxio/bytes.h"
#include "sgxio/crypto.h"
#include "sgxio/enclave.h"
#include "sgxio/status.h"
#include "sgxio/tpm.h"
#include "sgxio/trace.h"

namespace sgxio::tb {

using sgx::Cpu;
using sgx::Enclave;
using sgx::Measurement;

// Baked into the TB image as its last page, so it is part of MRENCLAVE.
struct TbConfig {
  tpm::Digest golden_pcr;
  std::vector<crypto::VerifyKey> integrators;
  std::vector<Measurement> driver_allowlist;

  Bytes Serialize() const;
  static std::optional<TbConfig> Parse(ByteView page);
};

sgx::EnclaveImage MakeTbImage(std::vector<Bytes> code_pages,
                              const TbConfig &config, bool debug = false);

// The statement an integrator signs to authorize an AIK.
Bytes IntegratorStatement(const crypto::VerifyKey &aik);

struct ApprovalResponse {
  // Ok for a positive verdict; otherwise why it was withheld.
  Status status;
  attest::Approval approval;
  sgx::Report tb_report;  // targeted at the requesting driver
  Bytes Wire() const { return approval.Serialize(); }
};

struct DelegatedKeyWrap {
  attest::KeyTransportMessage transport;
  Bytes sealed_key;
};

class TbEnclave {
 public:
  TbEnclave(Trace &trace, const Cpu &cpu, Enclave enclave, TbConfig config,
            std::string domain, bool aik_pinning);

  StatusOr<sgx::SealedBlob> ProvisionAik(const crypto::VerifyKey &aik,
                                         const crypto::Signature &signature,
                                         crypto::DeterministicRng &rng);
  // Installs a previously sealed AIK (from untrusted storage).
  void LoadSealedAik(sgx::SealedBlob blob) { sealed_aik_ = std::move(blob); }

  // |tpm| is whatever the TB's TPM handle reaches, or null without one.
  // NoTpmAccess, or Status(BadQuote, "origin" | "nonce" | "pcr"). The
  // verdict is computed once per epoch and cached.
  Status AttestHypervisor(const tpm::Tpm *tpm, uint64_t epoch,
                          crypto::DeterministicRng &rng);
  bool attested(uint64_t epoch) const;

  // ChannelDenied without a channel; AttestationFailed when the report does
  // not verify. Otherwise a bound response, positive or not.
  StatusOr<ApprovalResponse> ApproveDriver(bool has_channel,
                                           const sgx::Report &driver_report,
                                           uint64_t epoch, uint64_t step);

  // Requires a positive attestation this epoch and a report targeted at the
  // TB. The key travels back wrapped under a transport key for the
  // requester.
  StatusOr<DelegatedKeyWrap> DelegatedSealKey(const sgx::Report &requester,
                                              uint64_t epoch,
                                              crypto::DeterministicRng &rng);

  const Enclave &enclave() const { return enclave_; }
  Enclave &enclave() { return enclave_; }
  const TbConfig &config() const { return config_; }
  const std::string &domain() const { return domain_; }

 private:
  std::optional<crypto::VerifyKey> PinnedAik() const;
  void Log(std::string type, TraceFields fields);

  Trace &trace_;
  const Cpu &cpu_;
  Enclave enclave_;
  TbConfig config_;
  std::string domain_;
  bool aik_pinning_;
  std::optional<sgx::SealedBlob> sealed_aik_;
  std::optional<uint64_t> attested_epoch_;
  Status verdict_;
};

// Recovers a delegated key on the requester's side.
StatusOr<crypto::SymKey> UnwrapDelegatedKey(const Cpu &cpu,
                                            const Enclave &requester,
                                            const DelegatedKeyWrap &wrap);

}  // namespace sgxio::tb

#endif  // SGXIO_TB_ENCLAVE_H_
