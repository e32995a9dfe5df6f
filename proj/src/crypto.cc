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

#include "sgxio/crypto.h"

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/params.h>

#include <memory>
#include <stdexcept>

namespace sgxio::crypto {
namespace {

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX *ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
struct MacCtxDeleter {
  void operator()(EVP_MAC_CTX *ctx) const { EVP_MAC_CTX_free(ctx); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX *ctx) const { EVP_MD_CTX_free(ctx); }
};
struct PkeyDeleter {
  void operator()(EVP_PKEY *key) const { EVP_PKEY_free(key); }
};

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using Pkey = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

// OpenSSL failures here mean a broken build or allocation failure, never
// bad input, so they are not part of any Status contract.
void Check(int rc, const char *what) {
  if (rc != 1) throw std::runtime_error(std::string("openssl: ") + what);
}

EVP_MAC *CmacAlgorithm() {
  static EVP_MAC *mac = EVP_MAC_fetch(nullptr, "CMAC", nullptr);
  return mac;
}

}  // namespace

Digest Hash(ByteView msg) {
  Digest out;
  unsigned int len = 0;
  Check(EVP_Digest(msg.data(), msg.size(), out.data(), &len, EVP_sha256(),
                   nullptr),
        "sha256");
  return out;
}

SymKey KeyFromDigest(const Digest &digest) {
  return SymKey::Prefix(digest.view());
}

MacTag Cmac(const SymKey &key, ByteView msg) {
  std::unique_ptr<EVP_MAC_CTX, MacCtxDeleter> ctx(
      EVP_MAC_CTX_new(CmacAlgorithm()));
  if (!ctx) throw std::runtime_error("openssl: cmac ctx");
  char cipher[] = "AES-128-CBC";
  OSSL_PARAM params[] = {
      OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_CIPHER, cipher, 0),
      OSSL_PARAM_construct_end()};
  Check(EVP_MAC_init(ctx.get(), key.data(), key.size(), params), "cmac init");
  Check(EVP_MAC_update(ctx.get(), msg.data(), msg.size()), "cmac update");
  MacTag tag;
  std::size_t len = 0;
  Check(EVP_MAC_final(ctx.get(), tag.data(), &len, tag.size()), "cmac final");
  return tag;
}

Bytes AeadSeal(const SymKey &key, const AeadNonce &nonce, ByteView plaintext,
               ByteView aad) {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  Check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.data(),
                           nonce.data()),
        "gcm init");
  int len = 0;
  if (!aad.empty()) {
    Check(EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                            static_cast<int>(aad.size())),
          "gcm aad");
  }
  Bytes out(plaintext.size() + kAeadTagSize);
  int written = 0;
  if (!plaintext.empty()) {
    Check(EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                            static_cast<int>(plaintext.size())),
          "gcm update");
    written = len;
  }
  Check(EVP_EncryptFinal_ex(ctx.get(), out.data() + written, &len),
        "gcm final");
  Check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kAeadTagSize,
                            out.data() + plaintext.size()),
        "gcm tag");
  return out;
}

StatusOr<Bytes> AeadOpen(const SymKey &key, const AeadNonce &nonce,
                         ByteView sealed, ByteView aad) {
  if (sealed.size() < kAeadTagSize) {
    return Error{ErrorCode::kAuthFailure, "ciphertext shorter than tag"};
  }
  const std::size_t ct_len = sealed.size() - kAeadTagSize;
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  Check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.data(),
                           nonce.data()),
        "gcm init");
  int len = 0;
  if (!aad.empty()) {
    Check(EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                            static_cast<int>(aad.size())),
          "gcm aad");
  }
  Bytes out(ct_len);
  if (ct_len > 0) {
    Check(EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data(),
                            static_cast<int>(ct_len)),
          "gcm update");
  }
  Bytes tag(sealed.begin() + ct_len, sealed.end());
  Check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kAeadTagSize,
                            tag.data()),
        "gcm set tag");
  uint8_t scratch[16];
  if (EVP_DecryptFinal_ex(ctx.get(), scratch, &len) != 1) {
    return Error{ErrorCode::kAuthFailure, "aead tag mismatch"};
  }
  return out;
}

SigningKey::SigningKey(const std::array<uint8_t, 32> &seed) : seed_(seed) {
  Pkey key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                        seed_.data(), seed_.size()));
  if (!key) throw std::runtime_error("openssl: ed25519 key");
  std::size_t len = VerifyKey::kSize;
  Check(EVP_PKEY_get_raw_public_key(key.get(), public_key_.data(), &len),
        "ed25519 public key");
}

Signature SigningKey::Sign(ByteView msg) const {
  Pkey key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                        seed_.data(), seed_.size()));
  MdCtx ctx(EVP_MD_CTX_new());
  Check(EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()),
        "ed25519 sign init");
  Signature sig;
  std::size_t len = sig.size();
  Check(EVP_DigestSign(ctx.get(), sig.data(), &len, msg.data(), msg.size()),
        "ed25519 sign");
  return sig;
}

bool Verify(const VerifyKey &key, ByteView msg, const Signature &sig) {
  Pkey pkey(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, key.data(),
                                        key.size()));
  if (!pkey) return false;
  MdCtx ctx(EVP_MD_CTX_new());
  if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) !=
      1) {
    return false;
  }
  return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(), msg.data(),
                          msg.size()) == 1;
}

DeterministicRng::DeterministicRng(uint64_t seed) {
  std::seed_seq seq{static_cast<uint32_t>(seed),
                    static_cast<uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

void DeterministicRng::Fill(std::span<uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    uint64_t word = engine_();
    for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
      out[i] = static_cast<uint8_t>(word >> (8 * b));
    }
  }
}

Bytes DeterministicRng::NextBytes(std::size_t n) {
  Bytes out(n);
  Fill(out);
  return out;
}

SigningKey DeterministicRng::NextSigningKey() {
  std::array<uint8_t, 32> seed;
  Fill(seed);
  return SigningKey(seed);
}

}  // namespace sgxio::crypto
