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

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace sgxio::crypto {
namespace {

Bytes Hex(std::string_view s) {
  if (s == "-") return {};
  auto b = FromHex(s);
  EXPECT_TRUE(b.has_value()) << s;
  return b.value_or(Bytes{});
}

std::vector<std::vector<std::string>> LoadVectors(std::string_view kind) {
  std::ifstream in(SGXIO_FIXTURE_DIR "/crypto_vectors.txt");
  EXPECT_TRUE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::vector<std::string> row;
    std::string f;
    while (fields >> f) row.push_back(f);
    if (!row.empty() && row[0] == kind) rows.push_back(row);
  }
  return rows;
}

TEST(HashTest, PublishedVectors) {
  auto rows = LoadVectors("sha256");
  ASSERT_EQ(rows.size(), 2u);
  for (const auto &row : rows) {
    EXPECT_EQ(ToHex(Hash(Hex(row[1])).view()), row[2]);
  }
}

TEST(HashTest, AppendingZeroByteChangesDigest) {
  DeterministicRng rng(7);
  for (int i = 0; i < 1000; ++i) {
    Bytes m = rng.NextBytes(rng.NextU64() % 64);
    const Digest a = Hash(m);
    EXPECT_EQ(a, Hash(m));
    m.push_back(0x00);
    EXPECT_NE(a, Hash(m));
  }
}

TEST(CmacTest, Rfc4493Vectors) {
  auto rows = LoadVectors("cmac");
  ASSERT_EQ(rows.size(), 4u);
  for (const auto &row : rows) {
    const SymKey key = *SymKey::FromView(Hex(row[1]));
    EXPECT_EQ(ToHex(Cmac(key, Hex(row[2])).view()), row[3]);
  }
}

TEST(CmacTest, KeySensitivity) {
  DeterministicRng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const SymKey k1 = rng.Next<SymKey>();
    SymKey k2 = rng.Next<SymKey>();
    if (k1 == k2) k2.data()[0] ^= 1;
    const Bytes m = rng.NextBytes(48);
    EXPECT_EQ(Cmac(k1, m), Cmac(k1, m));
    EXPECT_NE(Cmac(k1, m), Cmac(k2, m));
  }
}

TEST(CmacTest, RandomTagsNeverVerify) {
  DeterministicRng rng(12);
  const SymKey key = rng.Next<SymKey>();
  const Bytes msg = rng.NextBytes(64);
  const MacTag real = Cmac(key, msg);
  for (int i = 0; i < 10000; ++i) {
    EXPECT_NE(rng.Next<MacTag>(), real);
  }
}

TEST(KeyFromDigestTest, TakesFirstSixteenBytes) {
  const Digest d = Hash(AsBytes("abc"));
  const SymKey k = KeyFromDigest(d);
  EXPECT_EQ(kDerivedKeySize, 16u);
  EXPECT_TRUE(std::equal(k.view().begin(), k.view().end(), d.view().begin()));
}

TEST(AeadTest, PublishedVectors) {
  auto rows = LoadVectors("gcm");
  ASSERT_EQ(rows.size(), 2u);
  for (const auto &row : rows) {
    const SymKey key = *SymKey::FromView(Hex(row[1]));
    const AeadNonce nonce = *AeadNonce::FromView(Hex(row[2]));
    const Bytes sealed = AeadSeal(key, nonce, Hex(row[3]), Hex(row[4]));
    EXPECT_EQ(ToHex(sealed), row[5]);
    auto opened = AeadOpen(key, nonce, sealed, Hex(row[4]));
    ASSERT_TRUE(opened.ok());
    EXPECT_EQ(*opened, Hex(row[3]));
  }
}

TEST(AeadTest, RoundTripOneKiB) {
  DeterministicRng rng(3);
  const SymKey key = rng.Next<SymKey>();
  const AeadNonce nonce = rng.Next<AeadNonce>();
  const Bytes pt = rng.NextBytes(1024);
  const Bytes aad{1, 2, 3};
  auto opened = AeadOpen(key, nonce, AeadSeal(key, nonce, pt, aad), aad);
  ASSERT_TRUE(opened.ok());
  EXPECT_EQ(*opened, pt);
}

TEST(AeadTest, AnySingleBitFlipFails) {
  DeterministicRng rng(4);
  const SymKey key = rng.Next<SymKey>();
  const AeadNonce nonce = rng.Next<AeadNonce>();
  const Bytes pt = rng.NextBytes(100);
  const Bytes aad = rng.NextBytes(20);
  const Bytes sealed = AeadSeal(key, nonce, pt, aad);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    Bytes c = sealed;
    Bytes a = aad;
    AeadNonce n = nonce;
    const uint64_t r = rng.NextU64();
    const uint8_t bit = static_cast<uint8_t>(1u << (r % 8));
    switch (i % 4) {
      case 0:
      case 1:  // ciphertext or tag
        c[(r >> 8) % c.size()] ^= bit;
        break;
      case 2:
        n.data()[(r >> 8) % n.size()] ^= bit;
        break;
      case 3:
        a[(r >> 8) % a.size()] ^= bit;
        break;
    }
    auto opened = AeadOpen(key, n, c, a);
    if (!opened.ok() && opened.code() == ErrorCode::kAuthFailure) ++failures;
  }
  EXPECT_EQ(failures, 1000);
}

TEST(AeadTest, WrongKeyFails) {
  DeterministicRng rng(5);
  const SymKey key = rng.Next<SymKey>();
  SymKey other = key;
  other.data()[15] ^= 0x80;
  const AeadNonce nonce = rng.Next<AeadNonce>();
  const Bytes sealed = AeadSeal(key, nonce, AsBytes("hello"), {});
  auto opened = AeadOpen(other, nonce, sealed, {});
  ASSERT_FALSE(opened.ok());
  EXPECT_EQ(opened.code(), ErrorCode::kAuthFailure);
}

TEST(AeadTest, TruncatedInputFails) {
  const SymKey key;
  const AeadNonce nonce;
  EXPECT_FALSE(AeadOpen(key, nonce, Bytes(15, 0), {}).ok());
}

TEST(SignatureTest, Rfc8032Vector) {
  auto rows = LoadVectors("ed25519");
  ASSERT_EQ(rows.size(), 1u);
  const Bytes secret = Hex(rows[0][1]);
  std::array<uint8_t, 32> seed;
  std::copy(secret.begin(), secret.end(), seed.begin());
  SigningKey key(seed);
  EXPECT_EQ(ToHex(key.public_key().view()), rows[0][2]);
  const Signature sig = key.Sign(Hex(rows[0][3]));
  EXPECT_EQ(ToHex(sig.view()), rows[0][4]);
}

TEST(SignatureTest, RoundTripAndCrossKeyRejection) {
  DeterministicRng rng(6);
  std::vector<SigningKey> keys;
  for (int i = 0; i < 8; ++i) keys.push_back(rng.NextSigningKey());
  const Bytes msg = rng.NextBytes(40);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const Signature sig = keys[i].Sign(msg);
    for (std::size_t j = 0; j < keys.size(); ++j) {
      EXPECT_EQ(Verify(keys[j].public_key(), msg, sig), i == j);
    }
    Bytes tampered = msg;
    tampered[0] ^= 1;
    EXPECT_FALSE(Verify(keys[i].public_key(), tampered, sig));
  }
}

TEST(RngTest, Reproducible) {
  DeterministicRng a(42), b(42);
  EXPECT_EQ(a.NextBytes(100), b.NextBytes(100));
  EXPECT_EQ(a.NextU64(), b.NextU64());
}

TEST(RngTest, DistinctSeedsDiffer) {
  DeterministicRng a(1), b(2);
  EXPECT_NE(a.NextBytes(32), b.NextBytes(32));
}

TEST(RngTest, ZeroLength) {
  DeterministicRng a(1);
  EXPECT_TRUE(a.NextBytes(0).empty());
}

}  // namespace
}  // namespace sgxio::crypto
