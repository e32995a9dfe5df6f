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

#include "sgxio/platform.h"

#include <algorithm>

namespace sgxio::platform {
namespace {

constexpr std::string_view kDomain = "hypervisor";

bool SameResource(const Resource &a, const Resource &b) { return a == b; }

}  // namespace

std::string DomainId::ToString() const {
  switch (kind) {
    case DomainKind::kHypervisor: return "hypervisor";
    case DomainKind::kDriver: return "driver(" + std::to_string(index) + ")";
    case DomainKind::kVmOs: return "vm-os";
    case DomainKind::kTbHost: return "tb-host";
  }
  return "unknown";
}

std::string ResourceName(const Resource &resource) {
  struct Visitor {
    std::string operator()(const MemoryRegion &m) const {
      return "mem:" + std::to_string(m.base) + "-" + std::to_string(m.limit);
    }
    std::string operator()(const DeviceResource &d) const {
      return "device:" + d.id;
    }
    std::string operator()(const TpmResource &) const { return "tpm"; }
    std::string operator()(const TbChannelResource &c) const {
      return "tb-channel:" + c.client.ToString();
    }
  };
  return std::visit(Visitor{}, resource);
}

std::string_view DeviceDirectionName(DeviceDirection direction) {
  switch (direction) {
    case DeviceDirection::kInput: return "input";
    case DeviceDirection::kOutput: return "output";
    case DeviceDirection::kBidirectional: return "bidirectional";
  }
  return "unknown";
}

MemoryRegion DriverMemory(uint32_t index) {
  const uint64_t base = 0x1000 * (static_cast<uint64_t>(index) + 1);
  return MemoryRegion{base, base + 0x1000};
}

Hypervisor::Hypervisor(Trace &trace, PlatformConfig config)
    : trace_(trace), config_(std::move(config)) {}

void Hypervisor::RegisterDevice(DeviceInfo device) {
  std::string id = device.id;
  devices_.emplace(std::move(id), std::move(device));
}

void Hypervisor::RegisterDriver(DomainId driver) {
  drivers_.push_back(driver);
}

tpm::Digest Hypervisor::Boot(tpm::Tpm &tpm,
                             const std::vector<BootStage> &stages,
                             bool compromised) {
  tpm.Reset();
  for (const BootStage &stage : stages) {
    const crypto::Digest m = crypto::Hash(stage.blob);
    tpm.Extend(m);
    trace_.Emit("firmware", "measure",
                {{"stage", stage.name}, {"digest", ToHex(m.view())}});
  }
  ++epoch_;
  compromised_ = compromised;
  tpm_diverted_ = false;
  bitmap_.intercept_debug = config_.encls_tweak && !compromised;
  bindings_.clear();
  mmio_claims_.clear();
  trace_.Emit(std::string(kDomain), "boot",
              {{"epoch", std::to_string(epoch_)},
               {"pcr", ToHex(tpm.pcr().view())},
               {"hypervisor", compromised ? "compromised" : "honest"},
               {"encls_intercept", bitmap_.intercept_debug ? "on" : "off"}});
  DistributeCapabilities();
  return tpm.pcr();
}

void Hypervisor::Grant(const Resource &resource, DomainId holder) {
  caps_.push_back(Capability{resource, holder});
  TraceFields fields{{"holder", holder.ToString()},
                     {"resource", ResourceName(resource)}};
  if (const auto *m = std::get_if<MemoryRegion>(&resource)) {
    fields.emplace_back("kind", "memory");
    fields.emplace_back("base", std::to_string(m->base));
    fields.emplace_back("limit", std::to_string(m->limit));
  } else {
    fields.emplace_back("kind", "exclusive");
  }
  trace_.Emit(std::string(kDomain), "cap_grant", std::move(fields));
}

void Hypervisor::Revoke(const Resource &resource, DomainId holder) {
  auto it = std::remove_if(caps_.begin(), caps_.end(), [&](const Capability &c) {
    return c.holder == holder && SameResource(c.resource, resource);
  });
  if (it == caps_.end()) return;
  caps_.erase(it, caps_.end());
  trace_.Emit(std::string(kDomain), "cap_revoke",
              {{"holder", holder.ToString()},
               {"resource", ResourceName(resource)}});
}

void Hypervisor::DistributeCapabilities() {
  caps_.clear();
  trace_.Emit(std::string(kDomain), "cap_reset",
              {{"epoch", std::to_string(epoch_)}});
  Grant(kHypervisorMemory, DomainId::Hypervisor());
  Grant(kTbHostMemory, DomainId::TbHost());
  Grant(TpmResource{}, DomainId::TbHost());
  for (DomainId driver : drivers_) {
    Grant(DriverMemory(driver.index), driver);
    Grant(TbChannelResource{driver}, driver);
  }
  Grant(kVmOsMemory, DomainId::VmOs());
  for (const Capability &extra : config_.extra_grants) {
    Grant(extra.resource, extra.holder);
  }
  if (config_.expose_tpm_to_os) {
    Grant(TpmResource{}, DomainId::VmOs());
    Grant(TbChannelResource{DomainId::VmOs()}, DomainId::VmOs());
  }
}

StatusOr<Capability> Hypervisor::BindDevice(DomainId driver,
                                            const std::string &device) {
  TraceFields fields{{"driver", driver.ToString()}, {"device", device}};
  if (!devices_.contains(device)) {
    fields.emplace_back("result", "UnknownDevice");
    trace_.Emit(std::string(kDomain), "bind_device", std::move(fields));
    return Error{ErrorCode::kUnknownDevice, device};
  }
  if (bindings_.contains(device)) {
    fields.emplace_back("result", "AlreadyBound");
    trace_.Emit(std::string(kDomain), "bind_device", std::move(fields));
    return Error{ErrorCode::kAlreadyBound, device};
  }
  bindings_.emplace(device, driver);
  fields.emplace_back("result", "ok");
  trace_.Emit(std::string(kDomain), "bind_device", std::move(fields));
  const Resource resource = DeviceResource{device};
  // Whoever held the device before (normally vm-os) loses it.
  std::vector<DomainId> previous;
  for (const Capability &c : caps_) {
    if (SameResource(c.resource, resource) && c.holder != driver) {
      previous.push_back(c.holder);
    }
  }
  for (DomainId holder : previous) Revoke(resource, holder);
  Grant(resource, driver);
  return Capability{resource, driver};
}

std::optional<DomainId> Hypervisor::BoundDriver(
    const std::string &device) const {
  auto it = bindings_.find(device);
  if (it == bindings_.end()) return std::nullopt;
  return it->second;
}

bool Hypervisor::Holds(DomainId holder, const Resource &resource) const {
  return std::any_of(caps_.begin(), caps_.end(), [&](const Capability &c) {
    return c.holder == holder && SameResource(c.resource, resource);
  });
}

StatusOr<Handle> Hypervisor::RequestResource(DomainId requester,
                                             const Resource &resource) {
  TraceFields fields{{"resource", ResourceName(resource)}};
  if (!Holds(requester, resource)) {
    fields.emplace_back("result", "denied");
    trace_.Emit(requester.ToString(), "request_resource", std::move(fields));
    return Error{ErrorCode::kAccessDenied,
                 requester.ToString() + " lacks " + ResourceName(resource)};
  }
  Handle handle{next_handle_++, resource, requester};
  fields.emplace_back("result", "granted");
  fields.emplace_back("handle", std::to_string(handle.id));
  trace_.Emit(requester.ToString(), "request_resource", std::move(fields));
  return handle;
}

StatusOr<Bytes> Hypervisor::DeviceIo(DomainId requester,
                                     const std::string &device,
                                     ByteView payload) {
  if (!devices_.contains(device)) {
    return Error{ErrorCode::kUnknownDevice, device};
  }
  auto handle = RequestResource(requester, DeviceResource{device});
  if (!handle.ok()) return handle.status();
  const bool os_side = requester.kind == DomainKind::kVmOs;
  trace_.Emit(requester.ToString(), "device_io",
              {{"device", device}, {"handle", std::to_string(handle->id)}},
              Bytes(payload.begin(), payload.end()), os_side);
  return Bytes(payload.begin(), payload.end());
}

bool Hypervisor::DmaRequest(const std::string &device,
                            const MemoryRegion &target) {
  std::optional<DomainId> owner = BoundDriver(device);
  bool allow = true;
  std::string reason = "ok";
  if (target.Intersects(kEnclaveMemory)) {
    allow = false;
    reason = "enclave-memory";
  } else if (target.Intersects(kHypervisorMemory) ||
             target.Intersects(kTbHostMemory)) {
    allow = false;
    reason = "trusted-stack";
  } else {
    for (DomainId driver : drivers_) {
      const MemoryRegion region = DriverMemory(driver.index);
      if (!target.Intersects(region)) continue;
      const bool own = owner && *owner == driver &&
                       target.base >= region.base &&
                       target.limit <= region.limit;
      if (!own) {
        allow = false;
        reason = "trusted-stack";
      }
    }
  }
  trace_.Emit(std::string(kDomain), "dma",
              {{"device", device},
               {"base", std::to_string(target.base)},
               {"limit", std::to_string(target.limit)},
               {"result", allow ? "allow" : "deny"},
               {"reason", reason}});
  return allow;
}

bool Hypervisor::ClaimMmio(const MmioClaim &claim, DomainId issuer) {
  bool accept = true;
  std::string conflict;
  if (issuer.kind == DomainKind::kVmOs) {
    for (const auto &[device, driver] : bindings_) {
      const DeviceInfo &info = devices_.at(device);
      if (claim.range.Intersects(info.mmio)) {
        accept = false;
        conflict = device;
        break;
      }
    }
  }
  if (accept) mmio_claims_.push_back(claim);
  TraceFields fields{{"device", claim.device},
                     {"base", std::to_string(claim.range.base)},
                     {"limit", std::to_string(claim.range.limit)},
                     {"issuer", issuer.ToString()},
                     {"result", accept ? "accept" : "reject"}};
  if (!accept) fields.emplace_back("overlaps", conflict);
  trace_.Emit(std::string(kDomain), "claim_mmio", std::move(fields));
  return accept;
}

bool Hypervisor::RouteInterrupt(const std::string &claimed_source,
                                const std::string &actual_source) {
  std::optional<DomainId> bound = BoundDriver(claimed_source);
  const bool drop = bound.has_value() && claimed_source != actual_source;
  std::string target = "vm-os";
  if (bound && !drop) target = bound->ToString();
  trace_.Emit(std::string(kDomain), "interrupt",
              {{"claimed", claimed_source},
               {"actual", actual_source},
               {"result", drop ? "drop" : "deliver"},
               {"to", drop ? "none" : target}});
  return !drop;
}

Status Hypervisor::EnclsGate(DomainId caller, EnclsOp op) {
  const bool intercept =
      caller.kind == DomainKind::kVmOs && bitmap_.intercept_debug;
  trace_.Emit(std::string(kDomain), "encls_gate",
              {{"caller", caller.ToString()},
               {"op", op == EnclsOp::kDebugRead ? "EDBGRD" : "EDBGWR"},
               {"result", intercept ? "Intercepted" : "pass"}});
  if (intercept) {
    return Status(ErrorCode::kIntercepted, "ENCLS-exiting bitmap trap");
  }
  return Status::Ok();
}

bool Hypervisor::DivertTpm() {
  tpm_diverted_ = compromised_;
  trace_.Emit(std::string(kDomain), "tpm_route",
              {{"target", tpm_diverted_ ? "remote" : "local"}});
  return tpm_diverted_;
}

}  // namespace sgxio::platform
