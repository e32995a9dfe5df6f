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

#include "sgxio/bytes.h"

#include "sgxio/status.h"

namespace sgxio {
namespace {

int HexValue(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string ToHex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

std::optional<Bytes> FromHex(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = HexValue(hex[i]);
    int lo = HexValue(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<uint8_t>((hi << 4) | lo));
  }
  return out;
}

Bytes Concat(std::initializer_list<ByteView> parts) {
  std::size_t total = 0;
  for (ByteView p : parts) total += p.size();
  Bytes out;
  out.reserve(total);
  for (ByteView p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

bool Contains(ByteView haystack, ByteView needle) {
  if (needle.empty()) return true;
  return std::search(haystack.begin(), haystack.end(), needle.begin(),
                     needle.end()) != haystack.end();
}

void AppendU32BigEndian(Bytes &out, uint32_t value) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<uint8_t>(value >> shift));
  }
}

void AppendU64BigEndian(Bytes &out, uint64_t value) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<uint8_t>(value >> shift));
  }
}

uint32_t ReadU32BigEndian(ByteView in) {
  uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | in[i];
  return v;
}

uint64_t ReadU64BigEndian(ByteView in) {
  uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | in[i];
  return v;
}

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kAuthFailure: return "AuthFailure";
    case ErrorCode::kMeasurementMismatch: return "MeasurementMismatch";
    case ErrorCode::kInvalidToken: return "InvalidToken";
    case ErrorCode::kDebugFlagMismatch: return "DebugFlagMismatch";
    case ErrorCode::kProductionEnclave: return "ProductionEnclave";
    case ErrorCode::kIntercepted: return "Intercepted";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kUnsealFailed: return "UnsealFailed";
    case ErrorCode::kAccessDenied: return "AccessDenied";
    case ErrorCode::kAlreadyBound: return "AlreadyBound";
    case ErrorCode::kUnknownDevice: return "UnknownDevice";
    case ErrorCode::kReplayDetected: return "ReplayDetected";
    case ErrorCode::kApprovalMissing: return "ApprovalMissing";
    case ErrorCode::kChannelRefused: return "ChannelRefused";
    case ErrorCode::kAborted: return "Aborted";
    case ErrorCode::kUnauthorizedIntegrator: return "UnauthorizedIntegrator";
    case ErrorCode::kNoTpmAccess: return "NoTpmAccess";
    case ErrorCode::kBadQuote: return "BadQuote";
    case ErrorCode::kChannelDenied: return "ChannelDenied";
    case ErrorCode::kAttestationFailed: return "AttestationFailed";
    case ErrorCode::kUnknownDriver: return "UnknownDriver";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::string Error::ToString() const {
  std::string out(ErrorCodeName(code));
  if (!detail.empty()) {
    out += ": ";
    out += detail;
  }
  return out;
}

}  // namespace sgxio
