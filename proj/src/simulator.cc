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

#include "sgxio/simulator.h"

#include <algorithm>
#include <memory>

#include "sgxio/attestation.h"
#include "sgxio/crypto.h"
#include "sgxio/enclave.h"
#include "sgxio/platform.h"
#include "sgxio/tb_enclave.h"
#include "sgxio/tpm.h"
#include "sgxio/trusted_path.h"

namespace sgxio::scenario {
namespace {

using platform::DomainId;
using sgx::Enclave;
using sgx::EnclaveImage;
using sgx::HostContext;
using sgx::Measurement;

constexpr std::size_t kAppInputOffset = 64;
constexpr std::size_t kDelegatedKeyOffset = 32;

struct ConfigError {
  std::string message;
};

[[noreturn]] void Fail(const std::string &message) {
  throw ConfigError{message};
}

std::string Short(const Measurement &m) { return ToHex(m.view().first(8)); }

std::string EnclaveDomain(const std::string &name) {
  return "enclave(" + name + ")";
}

struct Image {
  EnclaveImage reference;  // what policies and allowlists are built from
  EnclaveImage loaded;     // what actually gets launched
  Measurement reference_id;
};

Image MakeImage(const ImageSpec &spec) {
  Image image;
  image.reference = EnclaveImage{spec.pages, spec.debug};
  image.loaded = EnclaveImage{spec.substitute_pages.value_or(spec.pages),
                              spec.debug};
  image.reference_id = sgx::Measure(image.reference);
  return image;
}

struct DriverInstance {
  std::string image;  // name of the driver image it runs
  DomainId domain;
  bool is_virtual = false;
  std::unique_ptr<tpath::SecureDriver> driver;
  std::optional<Bytes> last_encrypted_input;
};

struct AppInstance {
  std::unique_ptr<tpath::UserApp> app;
  std::size_t input_offset = kAppInputOffset;
};

class Machine {
 public:
  Machine(const Scenario &scenario, Toggles toggles, uint64_t seed);

  void Execute(const Action &action);
  std::vector<ExpectationResult> Evaluate() const;

  Trace &trace() { return trace_; }
  std::map<std::string, Bytes> &values() { return values_; }

 private:
  // Parameter helpers.
  const std::string &Param(const Action &a, const std::string &key) const;
  std::string ParamOr(const Action &a, const std::string &key,
                      std::string fallback) const;
  uint64_t UintParam(const Action &a, const std::string &key,
                     uint64_t fallback) const;
  bool BoolParam(const Action &a, const std::string &key, bool fallback) const;
  Bytes Data(const std::string &spec);

  Enclave Launch(const EnclaveImage &image, HostContext host,
                 const std::string &name, const std::string &domain);
  void Msg(const std::string &from, const std::string &to,
           const std::string &via, const std::string &kind, Bytes payload,
           bool os_visible);

  DriverInstance &Driver(const std::string &name);
  DriverInstance *DriverOn(const std::string &device);
  AppInstance &App(const std::string &name);
  tb::TbEnclave &Tb(const Action &a);
  Enclave &FindEnclave(const std::string &name);
  const sgx::SealedBlob &Secret(const std::string &app);
  // Via label for the driver's path to |tb|, or nullopt without a channel.
  std::optional<std::string> TbChannel(const DriverInstance &d,
                                       const tb::TbEnclave &tb);
  std::string DriverVia(const DriverInstance &d) const;

  void Boot(const Action &a);
  void ProvisionAik(const Action &a);
  void ProvisionSecret(const Action &a);
  void AttestHypervisor(const Action &a);
  void RequestApproval(const Action &a);
  void OpenTrustedPath(const Action &a);
  void CloseTrustedPath(const Action &a);
  void Type(const Action &a);
  void Display(const Action &a);
  void DeliverToDevice(DriverInstance &d, const Bytes &vdev_bytes);
  void UserVerifyOp(const Action &a);
  void AttestChainOp(const Action &a);
  void SealDelegated(const Action &a);
  void DebugOp(const Action &a, DomainId caller, platform::EnclsOp op);
  void LoadEnclaveInVm(const Action &a);
  void DivertMessage(const Action &a);
  void ReadVmTraffic(const Action &a);
  void InjectFrame(const Action &a);
  void RemoteTpmQuote(const Action &a);
  void Dma(const Action &a);
  void UnsealSecret(const Action &a);

  ExpectationResult Check(const Expectation &e) const;

  const Scenario &scenario_;
  Toggles toggles_;
  crypto::DeterministicRng rng_;
  Trace trace_;
  sgx::LaunchAuthority authority_;
  sgx::Cpu cpu_;
  tpm::Tpm local_tpm_;
  tpm::Tpm remote_tpm_;
  crypto::SigningKey integrator_;
  crypto::SigningKey attacker_;
  platform::Hypervisor hypervisor_;

  Image tb_image_;
  tb::TbConfig tb_config_;
  std::map<std::string, Image> driver_images_;
  std::map<std::string, Image> app_images_;
  std::map<std::string, Image> other_images_;

  // Untrusted storage; survives reboots.
  std::optional<sgx::SealedBlob> sealed_aik_;
  std::map<std::string, sgx::SealedBlob> secrets_;

  // Running instances; torn down by every boot.
  std::unique_ptr<tb::TbEnclave> tb_;
  std::map<std::string, std::unique_ptr<tb::TbEnclave>> virtual_tbs_;
  std::map<std::string, DriverInstance> drivers_;
  std::map<std::string, AppInstance> apps_;
  std::map<std::string, Enclave> others_;

  std::map<std::string, Bytes> values_;
};

Machine::Machine(const Scenario &scenario, Toggles toggles, uint64_t seed)
    : scenario_(scenario),
      toggles_(toggles),
      rng_(seed),
      authority_(rng_.NextSigningKey()),
      cpu_(sgx::Cpu::Create(rng_, authority_.public_key())),
      local_tpm_("tpm", rng_.NextSigningKey()),
      remote_tpm_("remote-tpm", rng_.NextSigningKey()),
      integrator_(rng_.NextSigningKey()),
      attacker_(rng_.NextSigningKey()),
      hypervisor_(trace_, platform::PlatformConfig{toggles.encls_tweak,
                                                   toggles.expose_tpm_to_os,
                                                   toggles.aik_pinning,
                                                   scenario.capabilities}) {
  std::map<std::string, int> names;
  auto claim = [&](const std::string &name) {
    if (name == "tb" || ++names[name] > 1) Fail("duplicate enclave " + name);
  };
  for (const auto &d : scenario.devices) hypervisor_.RegisterDevice(d);
  uint32_t k = 0;
  for (const auto &d : scenario.drivers) {
    claim(d.name);
    driver_images_.emplace(d.name, MakeImage(d.image));
    hypervisor_.RegisterDriver(DomainId::Driver(++k));
  }
  for (const auto &a : scenario.apps) {
    claim(a.name);
    app_images_.emplace(a.name, MakeImage(a.image));
  }
  for (const auto &o : scenario.others) {
    claim(o.name);
    other_images_.emplace(o.name, MakeImage(o.image));
  }
  tb_config_.golden_pcr = scenario.boot.golden_pcr;
  tb_config_.integrators = {integrator_.public_key()};
  for (const auto &d : scenario.drivers) {
    tb_config_.driver_allowlist.push_back(
        driver_images_.at(d.name).reference_id);
  }
  tb_image_.reference =
      tb::MakeTbImage(scenario.tb.pages, tb_config_, scenario.tb.debug);
  tb_image_.loaded = tb::MakeTbImage(
      scenario.tb.substitute_pages.value_or(scenario.tb.pages), tb_config_,
      scenario.tb.debug);
  tb_image_.reference_id = sgx::Measure(tb_image_.reference);
  trace_.Emit("harness", "scenario",
              {{"name", scenario.name},
               {"seed", std::to_string(seed)},
               {"encls_tweak", toggles.encls_tweak ? "on" : "off"},
               {"expose_tpm_to_os", toggles.expose_tpm_to_os ? "on" : "off"},
               {"aik_pinning", toggles.aik_pinning ? "on" : "off"}});
}

const std::string &Machine::Param(const Action &a,
                                  const std::string &key) const {
  auto it = a.params.find(key);
  if (it == a.params.end()) Fail(a.op + ": missing " + key);
  return it->second;
}

std::string Machine::ParamOr(const Action &a, const std::string &key,
                             std::string fallback) const {
  auto it = a.params.find(key);
  return it == a.params.end() ? fallback : it->second;
}

uint64_t Machine::UintParam(const Action &a, const std::string &key,
                            uint64_t fallback) const {
  auto it = a.params.find(key);
  if (it == a.params.end()) return fallback;
  try {
    std::size_t used = 0;
    const uint64_t v = std::stoull(it->second, &used, 0);
    if (used == it->second.size()) return v;
  } catch (const std::exception &) {
  }
  Fail(a.op + ": " + key + " is not an unsigned integer");
}

bool Machine::BoolParam(const Action &a, const std::string &key,
                        bool fallback) const {
  auto it = a.params.find(key);
  if (it == a.params.end()) return fallback;
  if (it->second == "true") return true;
  if (it->second == "false") return false;
  Fail(a.op + ": " + key + " must be true or false");
}

Bytes Machine::Data(const std::string &spec) {
  if (spec.rfind("random:", 0) == 0) {
    try {
      return rng_.NextBytes(std::stoul(spec.substr(7)));
    } catch (const std::exception &) {
      Fail("bad data " + spec);
    }
  }
  if (spec.rfind("text:", 0) == 0) {
    const ByteView b = AsBytes(std::string_view(spec).substr(5));
    return Bytes(b.begin(), b.end());
  }
  if (spec.rfind("value:", 0) == 0) {
    auto it = values_.find(spec.substr(6));
    if (it == values_.end()) Fail("unknown value " + spec.substr(6));
    return it->second;
  }
  auto hex = FromHex(spec);
  if (!hex) Fail("bad data " + spec);
  return *hex;
}

Enclave Machine::Launch(const EnclaveImage &image, HostContext host,
                        const std::string &name, const std::string &domain) {
  const Measurement m = sgx::Measure(image);
  auto enclave =
      cpu_.Launch(image, authority_.Issue(m, image.debug), m, host);
  if (!enclave.ok()) Fail("launch of " + name + ": " + enclave.error().ToString());
  trace_.Emit(domain, "enclave_launch",
              {{"name", name},
               {"id", Short(m)},
               {"debug", image.debug ? "1" : "0"},
               {"host", std::string(sgx::HostContextName(host))}});
  return std::move(enclave).value();
}

void Machine::Msg(const std::string &from, const std::string &to,
                  const std::string &via, const std::string &kind,
                  Bytes payload, bool os_visible) {
  trace_.Emit(from, "msg",
              {{"from", from}, {"to", to}, {"via", via}, {"kind", kind}},
              std::move(payload), os_visible);
}

DriverInstance &Machine::Driver(const std::string &name) {
  auto it = drivers_.find(name);
  if (it == drivers_.end()) Fail("driver " + name + " is not running");
  return it->second;
}

DriverInstance *Machine::DriverOn(const std::string &device) {
  auto bound = hypervisor_.BoundDriver(device);
  if (!bound) return nullptr;
  for (auto &[name, d] : drivers_) {
    if (!d.is_virtual && d.domain == *bound) return &d;
  }
  return nullptr;
}

AppInstance &Machine::App(const std::string &name) {
  auto it = apps_.find(name);
  if (it == apps_.end()) Fail("app " + name + " is not running");
  return it->second;
}

tb::TbEnclave &Machine::Tb(const Action &a) {
  auto it = a.params.find("tb");
  if (it == a.params.end()) {
    if (!tb_) Fail(a.op + ": the TB is not running (boot first)");
    return *tb_;
  }
  auto v = virtual_tbs_.find(it->second);
  if (v == virtual_tbs_.end()) Fail("no virtual TB " + it->second);
  return *v->second;
}

Enclave &Machine::FindEnclave(const std::string &name) {
  if (name == "tb" && tb_) return tb_->enclave();
  if (auto it = drivers_.find(name); it != drivers_.end()) {
    return it->second.driver->enclave();
  }
  if (auto it = apps_.find(name); it != apps_.end()) {
    return it->second.app->enclave();
  }
  if (auto it = others_.find(name); it != others_.end()) return it->second;
  if (auto it = virtual_tbs_.find(name); it != virtual_tbs_.end()) {
    return it->second->enclave();
  }
  Fail("enclave " + name + " is not running");
}

const sgx::SealedBlob &Machine::Secret(const std::string &app) {
  auto it = secrets_.find(app);
  if (it == secrets_.end()) Fail("no secret provisioned for " + app);
  return it->second;
}

std::optional<std::string> Machine::TbChannel(const DriverInstance &d,
                                              const tb::TbEnclave &tb) {
  if (tb.domain() == d.domain.ToString()) return "local";
  if (&tb != tb_.get()) return std::nullopt;
  auto handle = hypervisor_.RequestResource(
      d.domain, platform::TbChannelResource{d.domain});
  if (!handle.ok()) return std::nullopt;
  return "handle:" + std::to_string(handle->id);
}

std::string Machine::DriverVia(const DriverInstance &d) const {
  return d.is_virtual ? "local" : "vdev:" + d.driver->passthrough_device().id;
}

void Machine::Execute(const Action &a) {
  const std::string &op = a.op;
  if (op == "boot") return Boot(a);
  if (op == "provision_aik") return ProvisionAik(a);
  if (op == "provision_secret") return ProvisionSecret(a);
  if (op == "attest_hypervisor") return AttestHypervisor(a);
  if (op == "request_approval") return RequestApproval(a);
  if (op == "open_trusted_path") return OpenTrustedPath(a);
  if (op == "close_trusted_path") return CloseTrustedPath(a);
  if (op == "type") return Type(a);
  if (op == "display") return Display(a);
  if (op == "user_verify") return UserVerifyOp(a);
  if (op == "attest_chain") return AttestChainOp(a);
  if (op == "seal_delegated") return SealDelegated(a);
  if (op == "hypervisor_debug_read") {
    return DebugOp(a, DomainId::Hypervisor(), platform::EnclsOp::kDebugRead);
  }
  if (op == "debug_read") {
    return DebugOp(a, DomainId::VmOs(), platform::EnclsOp::kDebugRead);
  }
  if (op == "debug_write") {
    return DebugOp(a, DomainId::VmOs(), platform::EnclsOp::kDebugWrite);
  }
  if (op == "load_enclave_in_vm") return LoadEnclaveInVm(a);
  if (op == "divert_message") return DivertMessage(a);
  if (op == "read_vm_traffic") return ReadVmTraffic(a);
  if (op == "inject_frame") return InjectFrame(a);
  if (op == "remote_tpm_quote") return RemoteTpmQuote(a);
  if (op == "dma") return Dma(a);
  if (op == "spoof_interrupt") {
    hypervisor_.RouteInterrupt(Param(a, "claimed"), Param(a, "actual"));
    return;
  }
  if (op == "claim_mmio_overlap") {
    const auto &devices = hypervisor_.devices();
    auto victim = devices.find(Param(a, "overlaps"));
    if (victim == devices.end() || !devices.contains(Param(a, "device"))) {
      Fail("claim_mmio_overlap: unknown device");
    }
    hypervisor_.ClaimMmio({Param(a, "device"), victim->second.mmio},
                          DomainId::VmOs());
    return;
  }
  if (op == "device_io") {
    if (!hypervisor_.devices().contains(Param(a, "device"))) {
      Fail("device_io: unknown device " + Param(a, "device"));
    }
    // A denial is an outcome, already in the trace.
    (void)hypervisor_.DeviceIo(DomainId::VmOs(), Param(a, "device"),
                               Data(Param(a, "data")));
    return;
  }
  if (op == "request_resource") {
    auto resource = ParseResource(Param(a, "resource"));
    if (!resource) Fail("bad resource " + Param(a, "resource"));
    (void)hypervisor_.RequestResource(DomainId::VmOs(), *resource);
    return;
  }
  if (op == "unseal_secret") return UnsealSecret(a);
  Fail("unknown op " + op);
}

void Machine::Boot(const Action &a) {
  const bool compromised = BoolParam(a, "compromised", false);
  std::vector<platform::BootStage> stages = scenario_.boot.stages;
  if (compromised) {
    if (!scenario_.boot.compromised) Fail("boot: no compromised stage defined");
    for (auto &s : stages) {
      if (s.name == scenario_.boot.compromised->name) {
        s.blob = scenario_.boot.compromised->blob;
      }
    }
  }
  // Everything running dies with the old epoch.
  tb_.reset();
  virtual_tbs_.clear();
  drivers_.clear();
  apps_.clear();
  others_.clear();
  hypervisor_.Boot(local_tpm_, stages, compromised);

  tb_ = std::make_unique<tb::TbEnclave>(
      trace_, cpu_,
      Launch(tb_image_.loaded, HostContext::kHypervisor, "tb", "tb-host"),
      tb_config_, "tb-host", toggles_.aik_pinning);
  if (sealed_aik_) tb_->LoadSealedAik(*sealed_aik_);

  uint32_t k = 0;
  for (const auto &spec : scenario_.drivers) {
    const DomainId domain = DomainId::Driver(++k);
    DriverInstance d{spec.name, domain, false, nullptr, std::nullopt};
    d.driver = std::make_unique<tpath::SecureDriver>(
        trace_, cpu_,
        Launch(driver_images_.at(spec.name).loaded, HostContext::kHypervisor,
               spec.name, domain.ToString()),
        domain.ToString(), spec.device, tb_image_.reference_id);
    if (hypervisor_.BindDevice(domain, spec.device).ok()) {
      d.driver->CreateVirtualDevices();
    }
    drivers_.emplace(spec.name, std::move(d));
  }
  for (const auto &spec : scenario_.apps) {
    std::vector<Measurement> policy;
    for (const auto &name : spec.drivers) {
      policy.push_back(driver_images_.at(name).reference_id);
    }
    apps_.emplace(spec.name,
                  AppInstance{std::make_unique<tpath::UserApp>(
                      cpu_,
                      Launch(app_images_.at(spec.name).loaded, HostContext::kOs,
                             spec.name, "vm-os"),
                      std::move(policy))});
  }
  for (const auto &spec : scenario_.others) {
    others_.emplace(spec.name, Launch(other_images_.at(spec.name).loaded,
                                      HostContext::kOs, spec.name, "vm-os"));
  }
}

void Machine::ProvisionAik(const Action &a) {
  const std::string who = ParamOr(a, "integrator", "approved");
  if (who != "approved" && who != "attacker") {
    Fail("provision_aik: integrator must be approved or attacker");
  }
  // Pristine install phase: a fresh TB instance under the hypervisor.
  tb::TbEnclave installer(
      trace_, cpu_,
      Launch(tb_image_.loaded, HostContext::kHypervisor, "tb", "tb-host"),
      tb_config_, "tb-host", toggles_.aik_pinning);
  const tpm::Tpm &tpm = who == "approved" ? local_tpm_ : remote_tpm_;
  const crypto::SigningKey &signer =
      who == "approved" ? integrator_ : attacker_;
  auto blob = installer.ProvisionAik(
      tpm.aik_public(), signer.Sign(tb::IntegratorStatement(tpm.aik_public())),
      rng_);
  if (!blob.ok()) return;
  sealed_aik_ = *blob;
  if (tb_) tb_->LoadSealedAik(*sealed_aik_);
}

void Machine::ProvisionSecret(const Action &a) {
  const std::string &app = Param(a, "app");
  auto image = app_images_.find(app);
  if (image == app_images_.end()) Fail("unknown app " + app);
  // Install-time sealing by the legitimate app image.
  Enclave legit = Launch(image->second.reference, HostContext::kOs, app,
                         EnclaveDomain(app));
  const Bytes secret = rng_.NextBytes(UintParam(a, "size", 16));
  secrets_.insert_or_assign(
      app, sgx::Seal(cpu_.EGetKey(legit, sgx::KeyType::kSeal), secret, rng_));
  values_[ParamOr(a, "name", "secret:" + app)] = secret;
  trace_.Emit(EnclaveDomain(app), "provision_secret",
              {{"app", app}, {"bytes", std::to_string(secret.size())}});
}

void Machine::AttestHypervisor(const Action &a) {
  tb::TbEnclave &tb = Tb(a);
  const bool is_real = &tb == tb_.get();
  const DomainId requester = is_real ? DomainId::TbHost() : DomainId::VmOs();
  auto handle = hypervisor_.RequestResource(requester, platform::TpmResource{});
  const tpm::Tpm *tpm = nullptr;
  if (handle.ok()) {
    tpm = is_real && hypervisor_.tpm_diverted() ? &remote_tpm_ : &local_tpm_;
    const std::string via = "handle:" + std::to_string(handle->id);
    Msg(tb.domain(), tpm->label(), via, "quote_request", {}, false);
    Msg(tpm->label(), tb.domain(), via, "quote", {}, false);
  }
  (void)tb.AttestHypervisor(tpm, hypervisor_.epoch(), rng_);
}

void Machine::RequestApproval(const Action &a) {
  const std::string &name = Param(a, "driver");
  DriverInstance &d = Driver(name);
  tb::TbEnclave &tb = Tb(a);
  const std::string domain = d.domain.ToString();
  const auto via = TbChannel(d, tb);
  const bool visible = via && *via == "local";
  const sgx::Report report = cpu_.EReport(d.driver->enclave(),
                                          tb_image_.reference_id,
                                          sgx::ReportData());
  if (via) {
    Msg(domain, tb.domain(), *via, "approval_request", report.Serialize(),
        visible);
  }
  auto response = tb.ApproveDriver(via.has_value(), report,
                                   hypervisor_.epoch(), trace_.next_step());
  std::string result;
  if (!response.ok()) {
    result = ErrorCodeName(response.code());
  } else {
    Msg(tb.domain(), domain, *via, "approval_response",
        Concat({response->Wire(), response->tb_report.Serialize()}), visible);
    Status kept = d.driver->SetApproval(response->Wire(), response->tb_report);
    if (!kept.ok()) {
      result = "rejected";
    } else if (response->status.ok()) {
      result = "approved";
    } else {
      result = ErrorCodeName(response->status.code());
    }
  }
  trace_.Emit(domain, "approval", {{"driver", name}, {"result", result}});
}

void Machine::OpenTrustedPath(const Action &a) {
  const std::string &app_name = Param(a, "app");
  const std::string &driver_name = Param(a, "driver");
  AppInstance &app = App(app_name);
  DriverInstance &d = Driver(driver_name);
  const bool confirm = BoolParam(a, "confirm", false);
  const Measurement driver_id = driver_images_.at(d.image).reference_id;
  const std::string domain = d.domain.ToString();
  TraceFields fields{{"app", app_name},
                     {"driver", driver_name},
                     {"driver_host", domain}};
  auto request = app.app->BeginTrustedPath(driver_id, rng_);
  if (!request.ok()) {
    fields.emplace_back("result", std::string(ErrorCodeName(request.code())));
    trace_.Emit(EnclaveDomain(app_name), "trusted_path", std::move(fields));
    return;
  }
  const std::string via = DriverVia(d);
  Msg("vm-os", domain, via, "key_transport", request->message.Serialize(),
      true);
  const tpath::DriverAcceptance reply =
      d.driver->Accept(request->message.sender_id, request->message, confirm);
  Bytes reply_wire = Concat({reply.report.Serialize(), reply.approval_wire});
  if (reply.confirmation) {
    reply_wire.insert(reply_wire.end(), reply.confirmation->begin(),
                      reply.confirmation->end());
  }
  Msg(domain, "vm-os", via, "key_accept", std::move(reply_wire), true);
  Status s = app.app->CompleteTrustedPath(driver_name, driver_id, *request,
                                          reply, confirm);
  if (s.ok()) {
    values_["session_key:" + driver_name] = request->key.ToBytes();
  } else {
    d.driver->Close();
  }
  fields.emplace_back("result",
                      s.ok() ? "ok" : std::string(ErrorCodeName(s.code())));
  trace_.Emit(EnclaveDomain(app_name), "trusted_path", std::move(fields));
}

void Machine::CloseTrustedPath(const Action &a) {
  const std::string &app_name = Param(a, "app");
  const std::string &driver_name = Param(a, "driver");
  App(app_name).app->Close(driver_name);
  Driver(driver_name).driver->Close();
  trace_.Emit(EnclaveDomain(app_name), "trusted_path_close",
              {{"app", app_name}, {"driver", driver_name}});
}

void Machine::Type(const Action &a) {
  const std::string &device = Param(a, "device");
  if (!hypervisor_.devices().contains(device)) Fail("unknown device " + device);
  const Bytes data = Data(Param(a, "data"));
  if (a.params.contains("name")) values_[Param(a, "name")] = data;
  DriverInstance *d = DriverOn(device);
  if (d == nullptr) {
    // Unbound devices belong to the OS.
    (void)hypervisor_.DeviceIo(DomainId::VmOs(), device, data);
    return;
  }
  const std::string domain = d->domain.ToString();
  trace_.Emit(domain, "device_input", {{"device", device}}, data, false);
  tpath::VdevWrite w = d->driver->Route(data);
  Msg(domain, "vm-os", "vdev:" + w.vdev, "input", w.bytes, true);
  if (w.vdev != d->driver->encrypted_device().id) return;
  d->last_encrypted_input = w.bytes;
  const std::string driver_name = d->image;
  for (auto &[name, app] : apps_) {
    if (!app.app->HasSession(driver_name)) continue;
    auto plain = app.app->ReceiveInput(driver_name, w.bytes);
    TraceFields fields{{"app", name}, {"driver", driver_name}};
    if (!plain.ok()) {
      fields.emplace_back("result", std::string(ErrorCodeName(plain.code())));
      trace_.Emit(EnclaveDomain(name), "app_input", std::move(fields));
      continue;
    }
    app.app->enclave().Store(app.input_offset, *plain);
    app.input_offset += plain->size();
    fields.emplace_back("result", "ok");
    trace_.Emit(EnclaveDomain(name), "app_input", std::move(fields), *plain,
                false);
  }
}

void Machine::DeliverToDevice(DriverInstance &d, const Bytes &vdev_bytes) {
  const std::string domain = d.domain.ToString();
  Msg("vm-os", domain, "vdev:" + d.driver->encrypted_device().id, "output",
      vdev_bytes, true);
  auto plain = d.driver->Deliver(vdev_bytes);
  if (!plain.ok()) {
    trace_.Emit(domain, "device_output",
                {{"device", d.driver->device()},
                 {"result", std::string(ErrorCodeName(plain.code()))}});
    return;
  }
  trace_.Emit(domain, "device_output",
              {{"device", d.driver->device()}, {"result", "ok"}}, *plain,
              false);
}

void Machine::Display(const Action &a) {
  const std::string &device = Param(a, "device");
  const std::string &app_name = Param(a, "app");
  AppInstance &app = App(app_name);
  const Bytes data = Data(Param(a, "data"));
  if (a.params.contains("name")) values_[Param(a, "name")] = data;
  DriverInstance *d = DriverOn(device);
  if (d == nullptr) Fail("display: no driver bound to " + device);
  auto out = app.app->SendOutput(d->image, data);
  if (!out.ok()) {
    trace_.Emit(EnclaveDomain(app_name), "display",
                {{"device", device},
                 {"result", std::string(ErrorCodeName(out.code()))}});
    return;
  }
  trace_.Emit(EnclaveDomain(app_name), "display",
              {{"device", device}, {"result", "ok"}});
  DeliverToDevice(*d, *out);
}

void Machine::UserVerifyOp(const Action &a) {
  const std::string &app_name = Param(a, "app");
  AppInstance &app = App(app_name);
  const std::string &keyboard = Param(a, "keyboard");
  const std::string &screen = Param(a, "screen");
  DriverInstance &screen_driver = Driver(screen);
  Driver(keyboard);
  tpath::UserVerifyResult r =
      tpath::UserVerify(cpu_, *app.app, keyboard, screen, Secret(app_name));
  const bool shown = r.outcome == tpath::VerifyOutcome::kDisplayed;
  trace_.Emit(EnclaveDomain(app_name), "user_verify",
              {{"app", app_name},
               {"result", shown ? "displayed" : "aborted"},
               {"reason", shown ? "ok" : r.reason}});
  if (shown) DeliverToDevice(screen_driver, r.screen_bytes);
}

void Machine::AttestChainOp(const Action &a) {
  const std::string &app_name = Param(a, "app");
  const std::string &driver_name = Param(a, "driver");
  AppInstance &app = App(app_name);
  DriverInstance &d = Driver(driver_name);
  const auto challenge = rng_.Next<sgx::ReportData>();
  Msg("remote", "vm-os", "net", "chain_challenge", challenge.ToBytes(), true);

  attest::ChainEvidence evidence;
  evidence.challenge = challenge;
  evidence.user_app_report = cpu_.MakeRemoteReport(app.app->enclave(), challenge);
  evidence.user_app = &app.app->enclave();
  evidence.driver_report =
      cpu_.EReport(d.driver->enclave(), app.app->enclave().identity(),
                   attest::DriverLinkData(challenge));
  evidence.driver = &d.driver->enclave();
  evidence.tb_report = d.driver->tb_report();
  evidence.approval_wire = d.driver->approval_wire();
  const Bytes link = Concat({evidence.driver_report.Serialize(),
                             evidence.tb_report.Serialize(),
                             evidence.approval_wire});
  Msg(d.domain.ToString(), "vm-os", DriverVia(d), "chain_link", link, true);
  Msg("vm-os", "remote", "net", "chain_evidence",
      Concat({evidence.user_app_report.SignedMessage(),
              evidence.user_app_report.signature.view(), link}),
      true);

  const Image &app_image = app_images_.at(app_name);
  const Image &driver_image = driver_images_.at(d.image);
  const attest::TrustPolicy policy{
      {app_image.reference_id, app_image.reference.debug},
      {driver_image.reference_id, driver_image.reference.debug},
      {tb_image_.reference_id, tb_image_.reference.debug}};
  const attest::ChainVerdict verdict = attest::AttestChain(
      cpu_, cpu_.attestation_public_key(), policy, evidence);
  trace_.Emit("remote", "chain_verdict",
              {{"app", app_name},
               {"driver", driver_name},
               {"result", verdict.pass ? "pass" : "fail"},
               {"broken", verdict.broken
                              ? std::string(attest::ChainLinkName(*verdict.broken))
                              : "none"},
               {"detail", verdict.detail}});
}

void Machine::SealDelegated(const Action &a) {
  const std::string &name = Param(a, "driver");
  DriverInstance &d = Driver(name);
  if (!tb_) Fail("seal_delegated: the TB is not running (boot first)");
  const std::string domain = d.domain.ToString();
  const auto via = TbChannel(d, *tb_);
  TraceFields fields{{"driver", name}};
  if (!via) {
    fields.emplace_back("result", "ChannelDenied");
    trace_.Emit(domain, "seal_key", std::move(fields));
    return;
  }
  const sgx::Report report = cpu_.EReport(
      d.driver->enclave(), tb_image_.reference_id, sgx::ReportData());
  Msg(domain, tb_->domain(), *via, "seal_request", report.Serialize(), false);
  auto wrap = tb_->DelegatedSealKey(report, hypervisor_.epoch(), rng_);
  if (!wrap.ok()) {
    fields.emplace_back("result", std::string(ErrorCodeName(wrap.code())));
    trace_.Emit(domain, "seal_key", std::move(fields));
    return;
  }
  Msg(tb_->domain(), domain, *via, "seal_response",
      Concat({wrap->transport.Serialize(), wrap->sealed_key}), false);
  auto key = tb::UnwrapDelegatedKey(cpu_, d.driver->enclave(), *wrap);
  if (!key.ok()) {
    fields.emplace_back("result", std::string(ErrorCodeName(key.code())));
    trace_.Emit(domain, "seal_key", std::move(fields));
    return;
  }
  d.driver->enclave().Store(kDelegatedKeyOffset, key->view());
  values_[ParamOr(a, "name", "delegated:" + name)] = key->ToBytes();
  fields.emplace_back("result", "issued");
  trace_.Emit(domain, "seal_key", std::move(fields));
}

void Machine::DebugOp(const Action &a, DomainId caller, platform::EnclsOp op) {
  const std::string &name = Param(a, "enclave");
  Enclave &target = FindEnclave(name);
  const std::size_t offset = UintParam(a, "offset", 0);
  const bool is_read = op == platform::EnclsOp::kDebugRead;
  const Bytes data = is_read ? Bytes() : Data(Param(a, "data"));
  const std::size_t length = UintParam(a, "length", 16);
  TraceFields fields{{"enclave", name},
                     {"op", is_read ? "EDBGRD" : "EDBGWR"},
                     {"offset", std::to_string(offset)}};
  const std::string domain = caller.ToString();
  Status gate = hypervisor_.EnclsGate(caller, op);
  if (!gate.ok()) {
    fields.emplace_back("result", std::string(ErrorCodeName(gate.code())));
    trace_.Emit(domain, "debug", std::move(fields));
    return;
  }
  const bool os_side = caller.kind == platform::DomainKind::kVmOs;
  if (is_read) {
    auto bytes = cpu_.DebugRead(target, offset, length);
    if (!bytes.ok()) {
      fields.emplace_back("result", std::string(ErrorCodeName(bytes.code())));
      trace_.Emit(domain, "debug", std::move(fields));
      return;
    }
    fields.emplace_back("result", "ok");
    trace_.Emit(domain, "debug", std::move(fields), *bytes, os_side);
    return;
  }
  Status s = cpu_.DebugWrite(target, offset, data);
  fields.emplace_back("result",
                      s.ok() ? "ok" : std::string(ErrorCodeName(s.code())));
  trace_.Emit(domain, "debug", std::move(fields));
}

void Machine::LoadEnclaveInVm(const Action &a) {
  const std::string &source = Param(a, "enclave");
  const std::string &as = Param(a, "as");
  if (source != "tb" && !driver_images_.contains(source) &&
      !app_images_.contains(source) && !other_images_.contains(source)) {
    Fail("load_enclave_in_vm: unknown enclave " + source);
  }
  if (as == "tb" || driver_images_.contains(as) || app_images_.contains(as) ||
      other_images_.contains(as) || virtual_tbs_.contains(as) ||
      drivers_.contains(as) || others_.contains(as)) {
    Fail("load_enclave_in_vm: name " + as + " already in use");
  }
  if (!tb_) Fail("load_enclave_in_vm: boot first");
  // Genuine code, fake surroundings.
  if (source == "tb") {
    auto vtb = std::make_unique<tb::TbEnclave>(
        trace_, cpu_, Launch(tb_image_.reference, HostContext::kOs, as, "vm-os"),
        tb_config_, "vm-os", toggles_.aik_pinning);
    if (sealed_aik_) vtb->LoadSealedAik(*sealed_aik_);
    virtual_tbs_.emplace(as, std::move(vtb));
  } else if (auto it = driver_images_.find(source); it != driver_images_.end()) {
    DriverInstance d{source, DomainId::VmOs(), true, nullptr, std::nullopt};
    d.driver = std::make_unique<tpath::SecureDriver>(
        trace_, cpu_, Launch(it->second.reference, HostContext::kOs, as, "vm-os"),
        "vm-os", as, tb_image_.reference_id);
    drivers_.emplace(as, std::move(d));
  } else {
    const Image &image = app_images_.contains(source)
                             ? app_images_.at(source)
                             : other_images_.at(source);
    others_.emplace(as, Launch(image.reference, HostContext::kOs, as, "vm-os"));
  }
  trace_.Emit("vm-os", "load_enclave", {{"enclave", source}, {"as", as}});
}

void Machine::DivertMessage(const Action &a) {
  const std::string &kind = Param(a, "kind");
  if (kind == "tpm") {
    const bool diverted = hypervisor_.DivertTpm();
    trace_.Emit("vm-os", "divert",
                {{"kind", kind}, {"result", diverted ? "diverted" : "blocked"}});
    return;
  }
  if (kind != "approval") Fail("divert_message: kind must be tpm or approval");
  DriverInstance &from = Driver(Param(a, "driver"));
  DriverInstance &to = Driver(Param(a, "to"));
  TraceFields fields{{"kind", kind},
                     {"driver", Param(a, "driver")},
                     {"to", Param(a, "to")}};
  // The OS has to get onto the victim's TB channel first.
  auto handle = hypervisor_.RequestResource(
      DomainId::VmOs(), platform::TbChannelResource{from.domain});
  if (!handle.ok()) {
    fields.emplace_back("result", std::string(ErrorCodeName(handle.code())));
    trace_.Emit("vm-os", "divert", std::move(fields));
    return;
  }
  const Bytes wire = from.driver->approval_wire();
  Msg("vm-os", to.domain.ToString(),
      to.is_virtual ? "local" : "handle:" + std::to_string(handle->id),
      "approval_response", wire, true);
  Status s = to.driver->SetApproval(wire, from.driver->tb_report());
  fields.emplace_back("result", s.ok() ? "delivered" : "rejected");
  trace_.Emit("vm-os", "divert", std::move(fields));
}

void Machine::ReadVmTraffic(const Action &a) {
  const Bytes seen = trace_.OsObservableBytes();
  values_[ParamOr(a, "name", "vm_traffic")] = seen;
  trace_.Emit("vm-os", "keylog", {{"bytes", std::to_string(seen.size())}});
}

void Machine::InjectFrame(const Action &a) {
  const std::string &driver_name = Param(a, "driver");
  const std::string &app_name = Param(a, "app");
  const std::string &mode = Param(a, "mode");
  DriverInstance &d = Driver(driver_name);
  AppInstance &app = App(app_name);
  TraceFields fields{{"driver", driver_name}, {"app", app_name}, {"mode", mode}};
  if (mode != "tamper" && mode != "replay" && mode != "forge") {
    Fail("inject_frame: mode must be tamper, replay or forge");
  }
  if (!d.last_encrypted_input) {
    fields.emplace_back("result", "no-frame");
    trace_.Emit("vm-os", "inject", std::move(fields));
    return;
  }
  Bytes frame = *d.last_encrypted_input;
  if (mode == "tamper") {
    frame.back() ^= 0x01;
  } else if (mode == "forge") {
    const Bytes body = rng_.NextBytes(frame.size() - 4);
    std::copy(body.begin(), body.end(), frame.begin() + 4);
  }
  Msg("vm-os", "vm-os", "local", "input", frame, true);
  auto plain = app.app->ReceiveInput(driver_name, frame);
  fields.emplace_back("result", plain.ok()
                                    ? "accepted"
                                    : std::string(ErrorCodeName(plain.code())));
  trace_.Emit(EnclaveDomain(app_name), "inject", std::move(fields));
}

void Machine::RemoteTpmQuote(const Action &) {
  // The attacker's own machine runs the genuine boot chain.
  remote_tpm_.Reset();
  for (const auto &stage : scenario_.boot.stages) {
    remote_tpm_.Extend(crypto::Hash(stage.blob));
  }
  trace_.Emit("remote", "remote_tpm", {{"pcr", ToHex(remote_tpm_.pcr().view())}});
}

void Machine::Dma(const Action &a) {
  const std::string &device = Param(a, "device");
  const std::string &target = Param(a, "target");
  if (!hypervisor_.devices().contains(device)) Fail("dma: unknown device " + device);
  platform::MemoryRegion region;
  if (target == "enclave") {
    region = platform::kEnclaveMemory;
  } else if (target == "hypervisor") {
    region = platform::kHypervisorMemory;
  } else if (target == "tb-host") {
    region = platform::kTbHostMemory;
  } else if (target == "vm-os") {
    region = platform::kVmOsMemory;
  } else if (drivers_.contains(target) && !drivers_.at(target).is_virtual) {
    region = platform::DriverMemory(drivers_.at(target).domain.index);
  } else {
    auto resource = ParseResource(target);
    const auto *m =
        resource ? std::get_if<platform::MemoryRegion>(&*resource) : nullptr;
    if (m == nullptr) Fail("dma: bad target " + target);
    region = *m;
  }
  hypervisor_.DmaRequest(device, region);
}

void Machine::UnsealSecret(const Action &a) {
  // Models an enclave run by the attacker exfiltrating whatever it unseals.
  const std::string &app = Param(a, "app");
  const std::string &name = Param(a, "enclave");
  Enclave &e = FindEnclave(name);
  auto plain = sgx::Unseal(cpu_.EGetKey(e, sgx::KeyType::kSeal), Secret(app));
  TraceFields fields{{"app", app}, {"enclave", name}};
  if (!plain.ok()) {
    fields.emplace_back("result", std::string(ErrorCodeName(plain.code())));
    trace_.Emit("vm-os", "unseal", std::move(fields));
    return;
  }
  fields.emplace_back("result", "ok");
  trace_.Emit("vm-os", "unseal", std::move(fields), *plain, true);
}

bool Applies(const Expectation &e, const Toggles &t) {
  for (const auto &[key, want] : e.when) {
    const bool have = key == "encls_tweak"        ? t.encls_tweak
                      : key == "expose_tpm_to_os" ? t.expose_tpm_to_os
                                                  : t.aik_pinning;
    if (have != want) return false;
  }
  return true;
}

bool CountHolds(const Params &p, std::size_t n, std::string &detail) {
  detail = "count=" + std::to_string(n);
  auto bound = [&](const char *key) -> std::optional<uint64_t> {
    auto it = p.find(key);
    if (it == p.end()) return std::nullopt;
    return std::stoull(it->second);
  };
  if (auto v = bound("equals"); v && n != *v) return false;
  if (auto v = bound("at_least"); v && n < *v) return false;
  if (auto v = bound("at_most"); v && n > *v) return false;
  return true;
}

ExpectationResult Machine::Check(const Expectation &e) const {
  ExpectationResult r{e.name, Outcome::kFail, ""};
  if (!Applies(e, toggles_)) {
    r.outcome = Outcome::kSkip;
    r.detail = "not applicable under these toggles";
    return r;
  }
  auto value = [&](const std::string &name) -> const Bytes * {
    auto it = values_.find(name);
    return it == values_.end() ? nullptr : &it->second;
  };
  bool ok = false;
  if (e.check == "event_count") {
    ok = CountHolds(e.params, trace_query::EventCount(trace_, e.matcher),
                    r.detail);
  } else if (e.check == "value_occurrences") {
    const Bytes *v = value(e.params.at("value"));
    if (v == nullptr) {
      r.detail = "no value " + e.params.at("value");
    } else {
      ok = CountHolds(e.params,
                      trace_query::PayloadOccurrences(trace_, e.matcher, *v),
                      r.detail);
    }
  } else if (e.check == "substring_absent") {
    const Bytes *v = value(e.params.at("value"));
    const std::size_t min_len =
        e.params.contains("min_len") ? std::stoull(e.params.at("min_len")) : 4;
    if (v == nullptr) {
      r.detail = "no value " + e.params.at("value");
    } else {
      ok = trace_query::SubstringAbsent(trace_, *v, min_len);
      r.detail = ok ? "absent" : "observed by vm-os";
    }
  } else if (e.check == "ordering") {
    ok = trace_query::Ordered(trace_, e.sequence);
    r.detail = ok ? "in order" : "sequence not found";
  } else if (e.check == "capability_audit" || e.check == "mediation_audit") {
    const auto audit = e.check == "capability_audit"
                           ? trace_query::CapabilityAudit(trace_)
                           : trace_query::MediationAudit(trace_);
    ok = audit.clean == (e.params.at("clean") == "true");
    r.detail = audit.clean ? "clean" : audit.violations.front();
  } else if (e.check == "epoch_soundness") {
    if (!toggles_.aik_pinning) {
      ok = true;
      r.detail = "pinning off";
    } else {
      ok = true;
      bool bad_epoch = false;
      const std::string golden = ToHex(scenario_.boot.golden_pcr.view());
      for (const TraceEvent &ev : trace_.events()) {
        if (ev.type == "boot" && ev.domain == "hypervisor") {
          bad_epoch = ev.Field("pcr").value_or("") != golden;
        } else if (bad_epoch && ev.type == "tb_approve" &&
                   ev.Field("result").value_or("") == "approved") {
          ok = false;
          r.detail = "approval at step " + std::to_string(ev.step) +
                     " after a non-golden boot";
          break;
        }
      }
      if (ok) r.detail = "sound";
    }
  }
  r.outcome = ok ? Outcome::kPass : Outcome::kFail;
  return r;
}

std::vector<ExpectationResult> Machine::Evaluate() const {
  std::vector<ExpectationResult> out;
  for (const Expectation &e : scenario_.expectations) out.push_back(Check(e));
  return out;
}

}  // namespace

Toggles EffectiveToggles(const Scenario &scenario, const RunOptions &options) {
  Toggles t = scenario.toggles;
  if (options.no_aik_pinning) t.aik_pinning = false;
  if (options.expose_tpm_to_os) t.expose_tpm_to_os = true;
  if (options.disable_debug_tweak) t.encls_tweak = false;
  return t;
}

std::string_view OutcomeName(Outcome outcome) {
  switch (outcome) {
    case Outcome::kPass: return "PASS";
    case Outcome::kFail: return "FAIL";
    case Outcome::kSkip: return "SKIP";
  }
  return "FAIL";
}

StatusOr<RunResult> Run(const Scenario &scenario, const RunOptions &options) {
  RunResult result;
  result.seed = options.seed.value_or(scenario.seed);
  result.toggles = EffectiveToggles(scenario, options);
  try {
    Machine machine(scenario, result.toggles, result.seed);
    for (const Action &a : scenario.actions) machine.Execute(a);
    result.expectations = machine.Evaluate();
    result.trace = std::move(machine.trace());
    result.values = std::move(machine.values());
  } catch (const ConfigError &e) {
    return Error{ErrorCode::kConfigError, e.message};
  }
  result.pass = std::all_of(
      result.expectations.begin(), result.expectations.end(),
      [](const ExpectationResult &r) { return r.outcome != Outcome::kFail; });
  return result;
}

}  // namespace sgxio::scenario
