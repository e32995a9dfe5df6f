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

// Hash, MAC, AEAD, signature and RNG primitives. Backed by OpenSSL;
// everything here is a pure function of its arguments except
// DeterministicRng, whose state is explicit.

#ifndef SGXIO_CRYPTO_H_
#define SGXIO_CRYPTO_H_

#include <cstdint>
#include <random>

#include "sgxio/bytes.h"
#include "sgxio/status.h"

namespace sgxio::crypto {

struct DigestTag {};
struct MacTagTag {};
struct SymKeyTag {};
struct AeadNonceTag {};
struct Nonce32Tag {};

using Digest = FixedBytes<32, DigestTag>;
using MacTag = FixedBytes<16, MacTagTag>;
using SymKey = FixedBytes<16, SymKeyTag>;
using AeadNonce = FixedBytes<12, AeadNonceTag>;
using Nonce32 = FixedBytes<32, Nonce32Tag>;

inline constexpr std::size_t kAeadTagSize = 16;

// SHA-256.
Digest Hash(ByteView msg);

// Digests are 32 bytes but CMAC keys are 16; a digest used as a key is
// truncated to its first kDerivedKeySize bytes.
inline constexpr std::size_t kDerivedKeySize = SymKey::kSize;
SymKey KeyFromDigest(const Digest &digest);

// AES-128-CMAC (RFC 4493).
MacTag Cmac(const SymKey &key, ByteView msg);

// AES-128-GCM. The sealed form is ciphertext || 16-byte tag.
Bytes AeadSeal(const SymKey &key, const AeadNonce &nonce, ByteView plaintext,
               ByteView aad);
StatusOr<Bytes> AeadOpen(const SymKey &key, const AeadNonce &nonce,
                         ByteView sealed, ByteView aad);

// Ed25519 signatures.
struct VerifyKeyTag {};
struct SignatureTag {};
using VerifyKey = FixedBytes<32, VerifyKeyTag>;
using Signature = FixedBytes<64, SignatureTag>;

class SigningKey {
 public:
  // |seed| is the raw 32-byte private key.
  explicit SigningKey(const std::array<uint8_t, 32> &seed);

  const VerifyKey &public_key() const { return public_key_; }
  Signature Sign(ByteView msg) const;

 private:
  std::array<uint8_t, 32> seed_;
  VerifyKey public_key_;
};

bool Verify(const VerifyKey &key, ByteView msg, const Signature &sig);

// Seeded byte stream. The same seed and call sequence always yield the same
// bytes; there is no ambient entropy anywhere in the simulator.
class DeterministicRng {
 public:
  explicit DeterministicRng(uint64_t seed);

  Bytes NextBytes(std::size_t n);
  void Fill(std::span<uint8_t> out);
  uint64_t NextU64() { return engine_(); }

  template <typename Fixed>
  Fixed Next() {
    Fixed out;
    Fill(std::span<uint8_t>(out.data(), Fixed::kSize));
    return out;
  }

  SigningKey NextSigningKey();

 private:
  std::mt19937_64 engine_;
};

}  // namespace sgxio::crypto

#endif  // SGXIO_CRYPTO_H_
