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

// The trusted hypervisor: capability-partitioned resources, device binding,
// IOMMU / MMIO / interrupt policing, TPM and TB-channel mediation and the
// ENCLS-exiting debug intercept. All decisions are written to the trace.

#ifndef SGXIO_PLATFORM_H_
#define SGXIO_PLATFORM_H_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sgxio/bytes.h"
#include "sgxio/crypto.h"
#include "sgxio/status.h"
#include "sgxio/tpm.h"
#include "sgxio/trace.h"

namespace sgxio::platform {

enum class DomainKind { kHypervisor, kDriver, kVmOs, kTbHost };

struct DomainId {
  DomainKind kind = DomainKind::kVmOs;
  uint32_t index = 0;  // driver number; unused otherwise

  static DomainId Hypervisor() { return {DomainKind::kHypervisor, 0}; }
  static DomainId VmOs() { return {DomainKind::kVmOs, 0}; }
  static DomainId TbHost() { return {DomainKind::kTbHost, 0}; }
  static DomainId Driver(uint32_t k) { return {DomainKind::kDriver, k}; }

  std::string ToString() const;
  friend auto operator<=>(const DomainId &, const DomainId &) = default;
};

struct MemoryRegion {
  uint64_t base = 0;
  uint64_t limit = 0;  // exclusive

  bool Intersects(const MemoryRegion &other) const {
    return base < other.limit && other.base < limit;
  }
  friend bool operator==(const MemoryRegion &, const MemoryRegion &) = default;
};

struct DeviceResource {
  std::string id;
  friend bool operator==(const DeviceResource &,
                         const DeviceResource &) = default;
};
struct TpmResource {
  friend bool operator==(const TpmResource &, const TpmResource &) = default;
};
// One endpoint into the TB host per client domain.
struct TbChannelResource {
  DomainId client;
  friend bool operator==(const TbChannelResource &,
                         const TbChannelResource &) = default;
};

using Resource =
    std::variant<MemoryRegion, DeviceResource, TpmResource, TbChannelResource>;
std::string ResourceName(const Resource &resource);

struct Capability {
  Resource resource;
  DomainId holder;
};

struct Handle {
  uint64_t id = 0;
  Resource resource;
  DomainId holder;
};

enum class DeviceDirection { kInput, kOutput, kBidirectional };
std::string_view DeviceDirectionName(DeviceDirection direction);

struct DeviceInfo {
  std::string id;
  DeviceDirection direction = DeviceDirection::kInput;
  MemoryRegion mmio;
};

struct MmioClaim {
  std::string device;
  MemoryRegion range;
};

struct EnclsBitmap {
  bool intercept_debug = false;
};

enum class EnclsOp { kDebugRead, kDebugWrite };

struct PlatformConfig {
  bool encls_tweak = true;
  bool expose_tpm_to_os = false;
  bool aik_pinning = true;
  // Grants to vm-os beyond the defaults (unbound devices and OS memory).
  std::vector<Capability> extra_grants;
};

struct BootStage {
  std::string name;
  Bytes blob;
};

// Fixed abstract memory layout.
inline constexpr MemoryRegion kHypervisorMemory{0x0000, 0x1000};
inline constexpr MemoryRegion kTbHostMemory{0x1000, 0x2000};
inline constexpr MemoryRegion kEnclaveMemory{0x8000, 0x10000};
inline constexpr MemoryRegion kVmOsMemory{0x10000, 0x40000};
MemoryRegion DriverMemory(uint32_t index);  // index >= 1, below kEnclaveMemory

class Hypervisor {
 public:
  Hypervisor(Trace &trace, PlatformConfig config);

  const PlatformConfig &config() const { return config_; }
  uint64_t epoch() const { return epoch_; }
  bool compromised() const { return compromised_; }

  // Measured boot: resets the TPM, extends H(blob) of every stage, then
  // starts a fresh epoch with the capability table rebuilt. A compromised
  // hypervisor still boots; it merely clears the ENCLS bitmap.
  tpm::Digest Boot(tpm::Tpm &tpm, const std::vector<BootStage> &stages,
                   bool compromised);

  void RegisterDevice(DeviceInfo device);
  void RegisterDriver(DomainId driver);
  const std::map<std::string, DeviceInfo> &devices() const { return devices_; }

  StatusOr<Capability> BindDevice(DomainId driver, const std::string &device);
  std::optional<DomainId> BoundDriver(const std::string &device) const;

  StatusOr<Handle> RequestResource(DomainId requester,
                                   const Resource &resource);
  bool Holds(DomainId holder, const Resource &resource) const;

  // Device I/O by |requester|; unbound OS devices pass through unmodified.
  StatusOr<Bytes> DeviceIo(DomainId requester, const std::string &device,
                           ByteView payload);

  bool DmaRequest(const std::string &device, const MemoryRegion &target);
  bool ClaimMmio(const MmioClaim &claim, DomainId issuer);
  bool RouteInterrupt(const std::string &claimed_source,
                      const std::string &actual_source);
  Status EnclsGate(DomainId caller, EnclsOp op);
  const EnclsBitmap &encls_bitmap() const { return bitmap_; }

  // A compromised hypervisor lets the OS redirect the TB host's TPM
  // channel. Returns whether the redirection took effect.
  bool DivertTpm();
  bool tpm_diverted() const { return tpm_diverted_; }

  const std::vector<Capability> &capabilities() const { return caps_; }

 private:
  void Grant(const Resource &resource, DomainId holder);
  void Revoke(const Resource &resource, DomainId holder);
  void DistributeCapabilities();

  Trace &trace_;
  PlatformConfig config_;
  uint64_t epoch_ = 0;
  bool compromised_ = false;
  bool tpm_diverted_ = false;
  EnclsBitmap bitmap_;
  std::map<std::string, DeviceInfo> devices_;
  std::map<std::string, DomainId> bindings_;
  std::vector<DomainId> drivers_;
  std::vector<Capability> caps_;
  std::vector<MmioClaim> mmio_claims_;
  uint64_t next_handle_ = 1;
};

}  // namespace sgxio::platform

#endif  // SGXIO_PLATFORM_H_
