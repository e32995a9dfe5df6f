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

#ifndef SGXIO_STATUS_H_
#define SGXIO_STATUS_H_

#include <cassert>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace sgxio {

enum class ErrorCode {
  kOk,
  kInvalidArgument,
  kAuthFailure,
  // enclave-core
  kMeasurementMismatch,
  kInvalidToken,
  kDebugFlagMismatch,
  kProductionEnclave,
  kIntercepted,
  kOutOfRange,
  kUnsealFailed,
  // hypervisor
  kAccessDenied,
  kAlreadyBound,
  kUnknownDevice,
  // trusted path
  kReplayDetected,
  kApprovalMissing,
  kChannelRefused,
  kAborted,
  // tb enclave
  kUnauthorizedIntegrator,
  kNoTpmAccess,
  kBadQuote,
  kChannelDenied,
  kAttestationFailed,
  kUnknownDriver,
  // harness
  kConfigError,
};

std::string_view ErrorCodeName(ErrorCode code);

struct Error {
  ErrorCode code;
  std::string detail;

  std::string ToString() const;
};

class Status {
 public:
  Status() = default;
  Status(Error error) : error_(std::move(error)) {}  // NOLINT
  Status(ErrorCode code, std::string detail = {})
      : error_(Error{code, std::move(detail)}) {}

  static Status Ok() { return Status(); }

  bool ok() const { return !error_.has_value(); }
  const Error &error() const {
    assert(error_.has_value());
    return *error_;
  }
  ErrorCode code() const { return ok() ? ErrorCode::kOk : error_->code; }
  std::string ToString() const { return ok() ? "OK" : error_->ToString(); }

 private:
  std::optional<Error> error_;
};

// Holds either a value or an Error.
template <typename T>
class StatusOr {
 public:
  StatusOr(T value) : state_(std::move(value)) {}  // NOLINT
  StatusOr(Error error) : state_(std::move(error)) {}  // NOLINT
  StatusOr(ErrorCode code, std::string detail = {})
      : state_(Error{code, std::move(detail)}) {}
  StatusOr(const Status &status) : state_(status.error()) {}  // NOLINT

  bool ok() const { return std::holds_alternative<T>(state_); }
  Status status() const {
    return ok() ? Status() : Status(std::get<Error>(state_));
  }
  const Error &error() const { return std::get<Error>(state_); }
  ErrorCode code() const { return ok() ? ErrorCode::kOk : error().code; }

  const T &value() const & { return std::get<T>(state_); }
  T &value() & { return std::get<T>(state_); }
  T &&value() && { return std::get<T>(std::move(state_)); }
  const T &operator*() const & { return value(); }
  T &operator*() & { return value(); }
  const T *operator->() const { return &value(); }
  T *operator->() { return &value(); }

 private:
  std::variant<T, Error> state_;
};

}  // namespace sgxio

#endif  // SGXIO_STATUS_H_
