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

#include "sgxio/tb_enclave.h"

#include <algorithm>

namespace sgxio::tb {
namespace {

constexpr std::string_view kConfigTag = "sgxio-tb-config";
constexpr std::string_view kIntegratorTag = "aik-provision";

std::string Short(const Measurement &m) {
  return ToHex(m.view().first(8));
}

}  // namespace

Bytes TbConfig::Serialize() const {
  Bytes out = Concat({AsBytes(kConfigTag), golden_pcr.view()});
  AppendU32BigEndian(out, static_cast<uint32_t>(integrators.size()));
  for (const auto &k : integrators) {
    out.insert(out.end(), k.view().begin(), k.view().end());
  }
  AppendU32BigEndian(out, static_cast<uint32_t>(driver_allowlist.size()));
  for (const auto &m : driver_allowlist) {
    out.insert(out.end(), m.view().begin(), m.view().end());
  }
  return out;
}

std::optional<TbConfig> TbConfig::Parse(ByteView page) {
  const std::size_t tag = kConfigTag.size();
  if (page.size() < tag + 32 + 4 ||
      !std::equal(kConfigTag.begin(), kConfigTag.end(), page.begin())) {
    return std::nullopt;
  }
  TbConfig config;
  std::size_t pos = tag;
  config.golden_pcr = tpm::Digest::Prefix(page.subspan(pos));
  pos += 32;
  const uint32_t n = ReadU32BigEndian(page.subspan(pos));
  pos += 4;
  if (page.size() < pos + std::size_t{n} * 32 + 4) return std::nullopt;
  for (uint32_t i = 0; i < n; ++i, pos += 32) {
    config.integrators.push_back(crypto::VerifyKey::Prefix(page.subspan(pos)));
  }
  const uint32_t m = ReadU32BigEndian(page.subspan(pos));
  pos += 4;
  if (page.size() != pos + std::size_t{m} * 32) return std::nullopt;
  for (uint32_t i = 0; i < m; ++i, pos += 32) {
    config.driver_allowlist.push_back(Measurement::Prefix(page.subspan(pos)));
  }
  return config;
}

sgx::EnclaveImage MakeTbImage(std::vector<Bytes> code_pages,
                              const TbConfig &config, bool debug) {
  code_pages.push_back(config.Serialize());
  return sgx::EnclaveImage{std::move(code_pages), debug};
}

Bytes IntegratorStatement(const crypto::VerifyKey &aik) {
  return Concat({AsBytes(kIntegratorTag), aik.view()});
}

TbEnclave::TbEnclave(Trace &trace, const Cpu &cpu, Enclave enclave,
                     TbConfig config, std::string domain, bool aik_pinning)
    : trace_(trace),
      cpu_(cpu),
      enclave_(std::move(enclave)),
      config_(std::move(config)),
      domain_(std::move(domain)),
      aik_pinning_(aik_pinning) {}

void TbEnclave::Log(std::string type, TraceFields fields) {
  trace_.Emit(domain_, std::move(type), std::move(fields));
}

StatusOr<sgx::SealedBlob> TbEnclave::ProvisionAik(
    const crypto::VerifyKey &aik, const crypto::Signature &signature,
    crypto::DeterministicRng &rng) {
  const Bytes statement = IntegratorStatement(aik);
  const bool authorized = std::any_of(
      config_.integrators.begin(), config_.integrators.end(),
      [&](const crypto::VerifyKey &k) {
        return crypto::Verify(k, statement, signature);
      });
  if (!authorized) {
    Log("tb_provision", {{"result", "UnauthorizedIntegrator"}});
    return Error{ErrorCode::kUnauthorizedIntegrator, "aik not endorsed"};
  }
  sealed_aik_ = sgx::Seal(cpu_.EGetKey(enclave_, sgx::KeyType::kSeal),
                          aik.view(), rng);
  Log("tb_provision", {{"result", "sealed"}});
  return *sealed_aik_;
}

std::optional<crypto::VerifyKey> TbEnclave::PinnedAik() const {
  if (!sealed_aik_) return std::nullopt;
  auto plain = sgx::Unseal(cpu_.EGetKey(enclave_, sgx::KeyType::kSeal),
                           *sealed_aik_);
  if (!plain.ok()) return std::nullopt;
  return crypto::VerifyKey::FromView(*plain);
}

bool TbEnclave::attested(uint64_t epoch) const {
  return attested_epoch_ == epoch && verdict_.ok();
}

Status TbEnclave::AttestHypervisor(const tpm::Tpm *tpm, uint64_t epoch,
                                   crypto::DeterministicRng &rng) {
  TraceFields fields{{"epoch", std::to_string(epoch)},
                     {"pinning", aik_pinning_ ? "on" : "off"}};
  if (attested_epoch_ == epoch) {
    fields.emplace_back("cached", "1");
    fields.emplace_back("result",
                        verdict_.ok() ? "pass"
                                      : std::string(ErrorCodeName(verdict_.code())));
    Log("tb_attest", std::move(fields));
    return verdict_;
  }
  if (tpm == nullptr) {
    fields.emplace_back("result", "NoTpmAccess");
    Log("tb_attest", std::move(fields));
    return Status(ErrorCode::kNoTpmAccess, "no tpm handle");
  }
  const auto nonce = rng.Next<crypto::Nonce32>();
  const tpm::Quote quote = tpm->MakeQuote(nonce);
  fields.emplace_back("tpm", tpm->label());
  std::optional<tpm::QuoteFailure> failure;
  if (aik_pinning_) {
    std::optional<crypto::VerifyKey> pinned = PinnedAik();
    failure = pinned ? tpm::CheckQuote(quote, *pinned, config_.golden_pcr, nonce)
                     : tpm::QuoteFailure::kOrigin;
  } else {
    failure = tpm::CheckQuote(quote, tpm->aik_public(), config_.golden_pcr,
                              nonce);
  }
  attested_epoch_ = epoch;
  if (failure) {
    const std::string reason(tpm::QuoteFailureName(*failure));
    verdict_ = Status(ErrorCode::kBadQuote, reason);
    fields.emplace_back("result", "BadQuote");
    fields.emplace_back("reason", reason);
  } else {
    verdict_ = Status::Ok();
    fields.emplace_back("result", "pass");
  }
  Log("tb_attest", std::move(fields));
  return verdict_;
}

StatusOr<ApprovalResponse> TbEnclave::ApproveDriver(
    bool has_channel, const sgx::Report &driver_report, uint64_t epoch,
    uint64_t step) {
  TraceFields fields{{"driver", Short(driver_report.enclave_id)}};
  if (!has_channel) {
    fields.emplace_back("result", "ChannelDenied");
    Log("tb_approve", std::move(fields));
    return Error{ErrorCode::kChannelDenied, "no tb-channel handle"};
  }
  if (!attest::LocalAttestVerify(cpu_, enclave_, driver_report)) {
    fields.emplace_back("result", "AttestationFailed");
    fields.emplace_back("reason", "report");
    Log("tb_approve", std::move(fields));
    return Error{ErrorCode::kAttestationFailed, "driver report rejected"};
  }
  Status status;
  if (!attested(epoch)) {
    status = Status(ErrorCode::kAttestationFailed, "hypervisor not attested");
  } else if (std::find(config_.driver_allowlist.begin(),
                       config_.driver_allowlist.end(),
                       driver_report.enclave_id) ==
             config_.driver_allowlist.end()) {
    status = Status(ErrorCode::kUnknownDriver, "driver not allowlisted");
  }
  ApprovalResponse out{status,
                       attest::Approval{status.ok(), driver_report.enclave_id,
                                        step},
                       {}};
  out.tb_report = cpu_.EReport(enclave_, driver_report.enclave_id,
                               attest::ApprovalBinding(out.Wire()));
  fields.emplace_back(
      "result", status.ok() ? "approved" : std::string(ErrorCodeName(status.code())));
  fields.emplace_back("epoch", std::to_string(epoch));
  Log("tb_approve", std::move(fields));
  return out;
}

StatusOr<DelegatedKeyWrap> TbEnclave::DelegatedSealKey(
    const sgx::Report &requester, uint64_t epoch,
    crypto::DeterministicRng &rng) {
  TraceFields fields{{"requester", Short(requester.enclave_id)}};
  if (!attested(epoch) ||
      !attest::LocalAttestVerify(cpu_, enclave_, requester)) {
    fields.emplace_back("result", "AttestationFailed");
    Log("seal_delegate", std::move(fields));
    return Error{ErrorCode::kAttestationFailed, "sealing key refused"};
  }
  const crypto::SymKey own = cpu_.EGetKey(enclave_, sgx::KeyType::kSeal);
  const crypto::SymKey key = crypto::KeyFromDigest(
      crypto::Hash(Concat({own.view(), requester.enclave_id.view()})));
  attest::KeyTransportOffer offer =
      attest::KeyTransportSend(cpu_, enclave_, requester.enclave_id, rng);
  DelegatedKeyWrap wrap{
      offer.message,
      crypto::AeadSeal(offer.key,
                       attest::MakeFrameNonce(
                           attest::Direction::kInitiatorToResponder, 1),
                       key.view(), {})};
  fields.emplace_back("result", "issued");
  Log("seal_delegate", std::move(fields));
  return wrap;
}

StatusOr<crypto::SymKey> UnwrapDelegatedKey(const Cpu &cpu,
                                            const Enclave &requester,
                                            const DelegatedKeyWrap &wrap) {
  const crypto::SymKey k =
      attest::KeyTransportRecv(cpu, requester, wrap.transport);
  auto plain = crypto::AeadOpen(
      k, attest::MakeFrameNonce(attest::Direction::kInitiatorToResponder, 1),
      wrap.sealed_key, {});
  if (!plain.ok()) return plain.status();
  auto key = crypto::SymKey::FromView(*plain);
  if (!key) return Error{ErrorCode::kAuthFailure, "bad key length"};
  return *key;
}

}  // namespace sgxio::tb
