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

#ifndef SGXIO_TPM_H_
#define SGXIO_TPM_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "sgxio/bytes.h"
#include "sgxio/crypto.h"

namespace sgxio::tpm {

using crypto::Digest;

// new = H(old || measurement)
Digest ExtendValue(const Digest &pcr, const Digest &measurement);

// Final PCR of a measured boot over |stages|, starting from zero, where
// each stage is measured as H(blob).
Digest ComputeBootPcr(std::span<const Bytes> stages);

// pcr_value || nonce is the signed message.
struct Quote {
  Digest pcr_value;
  crypto::Nonce32 nonce;
  crypto::Signature signature;

  Bytes SignedMessage() const;
};

enum class QuoteFailure { kOrigin, kNonce, kPcr };
std::string_view QuoteFailureName(QuoteFailure failure);

// nullopt if the quote is acceptable. Origin is checked first, then nonce,
// then PCR.
std::optional<QuoteFailure> CheckQuote(const Quote &quote,
                                       const crypto::VerifyKey &aik,
                                       const Digest &expected_pcr,
                                       const crypto::Nonce32 &nonce);

// One TPM with a single PCR and one AIK. The AIK secret never leaves.
class Tpm {
 public:
  Tpm(std::string label, crypto::SigningKey aik)
      : label_(std::move(label)), aik_(std::move(aik)) {}

  const std::string &label() const { return label_; }
  const crypto::VerifyKey &aik_public() const { return aik_.public_key(); }

  void Reset() { pcr_ = Digest(); }
  void Extend(const Digest &measurement) {
    pcr_ = ExtendValue(pcr_, measurement);
  }
  const Digest &pcr() const { return pcr_; }

  Quote MakeQuote(const crypto::Nonce32 &nonce) const;

 private:
  std::string label_;
  crypto::SigningKey aik_;
  Digest pcr_;
};

}  // namespace sgxio::tpm

#endif  // SGXIO_TPM_H_
