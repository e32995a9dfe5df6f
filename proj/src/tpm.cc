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

#include "sgxio/tpm.h"

namespace sgxio::tpm {

Digest ExtendValue(const Digest &pcr, const Digest &measurement) {
  return crypto::Hash(Concat({pcr.view(), measurement.view()}));
}

Digest ComputeBootPcr(std::span<const Bytes> stages) {
  Digest pcr;
  for (const Bytes &stage : stages) {
    pcr = ExtendValue(pcr, crypto::Hash(stage));
  }
  return pcr;
}

Bytes Quote::SignedMessage() const {
  return Concat({pcr_value.view(), nonce.view()});
}

std::string_view QuoteFailureName(QuoteFailure failure) {
  switch (failure) {
    case QuoteFailure::kOrigin: return "origin";
    case QuoteFailure::kNonce: return "nonce";
    case QuoteFailure::kPcr: return "pcr";
  }
  return "unknown";
}

std::optional<QuoteFailure> CheckQuote(const Quote &quote,
                                       const crypto::VerifyKey &aik,
                                       const Digest &expected_pcr,
                                       const crypto::Nonce32 &nonce) {
  if (!crypto::Verify(aik, quote.SignedMessage(), quote.signature)) {
    return QuoteFailure::kOrigin;
  }
  if (quote.nonce != nonce) return QuoteFailure::kNonce;
  if (quote.pcr_value != expected_pcr) return QuoteFailure::kPcr;
  return std::nullopt;
}

Quote Tpm::MakeQuote(const crypto::Nonce32 &nonce) const {
  Quote q{pcr_, nonce, {}};
  q.signature = aik_.Sign(q.SignedMessage());
  return q;
}

}  // namespace sgxio::tpm
