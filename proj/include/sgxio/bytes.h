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

#ifndef SGXIO_BYTES_H_
#define SGXIO_BYTES_H_

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sgxio {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

// Fixed-size byte string. The tag parameter keeps e.g. a report key from
// being passed where a measurement is expected.
template <std::size_t N, typename Tag>
class FixedBytes {
 public:
  static constexpr std::size_t kSize = N;

  FixedBytes() { bytes_.fill(0); }
  explicit FixedBytes(const std::array<uint8_t, N> &bytes) : bytes_(bytes) {}

  // Returns nullopt unless |view| is exactly N bytes long.
  static std::optional<FixedBytes> FromView(ByteView view) {
    if (view.size() != N) return std::nullopt;
    FixedBytes out;
    std::copy(view.begin(), view.end(), out.bytes_.begin());
    return out;
  }

  // Copies the first N bytes of |view|; |view| must hold at least N.
  static FixedBytes Prefix(ByteView view) {
    FixedBytes out;
    std::copy_n(view.begin(), N, out.bytes_.begin());
    return out;
  }

  const uint8_t *data() const { return bytes_.data(); }
  uint8_t *data() { return bytes_.data(); }
  static constexpr std::size_t size() { return N; }
  ByteView view() const { return ByteView(bytes_.data(), N); }
  Bytes ToBytes() const { return Bytes(bytes_.begin(), bytes_.end()); }
  const std::array<uint8_t, N> &array() const { return bytes_; }

  friend bool operator==(const FixedBytes &, const FixedBytes &) = default;
  friend auto operator<=>(const FixedBytes &, const FixedBytes &) = default;

 private:
  std::array<uint8_t, N> bytes_;
};

std::string ToHex(ByteView bytes);
std::optional<Bytes> FromHex(std::string_view hex);

inline ByteView AsBytes(std::string_view s) {
  return ByteView(reinterpret_cast<const uint8_t *>(s.data()), s.size());
}

Bytes Concat(std::initializer_list<ByteView> parts);

// True if |needle| occurs as a contiguous run inside |haystack|.
bool Contains(ByteView haystack, ByteView needle);

void AppendU32BigEndian(Bytes &out, uint32_t value);
void AppendU64BigEndian(Bytes &out, uint64_t value);
uint32_t ReadU32BigEndian(ByteView in);
uint64_t ReadU64BigEndian(ByteView in);

}  // namespace sgxio

#endif  // SGXIO_BYTES_H_
