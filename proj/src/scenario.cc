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

#include "sgxio/scenario.h"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace sgxio::scenario {
namespace {

using platform::DomainId;

struct ConfigError {
  std::string message;
};

[[noreturn]] void Fail(const std::string &where, const std::string &what) {
  throw ConfigError{where + ": " + what};
}

void CheckKeys(const YAML::Node &node, const std::string &where,
               const std::set<std::string> &allowed,
               const std::set<std::string> &required = {}) {
  if (!node.IsMap()) Fail(where, "expected a mapping");
  for (const auto &kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.contains(key)) Fail(where, "unknown key '" + key + "'");
  }
  for (const std::string &key : required) {
    if (!node[key]) Fail(where, "missing key '" + key + "'");
  }
}

std::string Scalar(const YAML::Node &node, const std::string &where) {
  if (!node.IsScalar()) Fail(where, "expected a scalar");
  return node.as<std::string>();
}

bool Bool(const YAML::Node &node, const std::string &where) {
  const std::string s = Scalar(node, where);
  if (s == "true") return true;
  if (s == "false") return false;
  Fail(where, "expected true or false, got '" + s + "'");
}

uint64_t Uint(const YAML::Node &node, const std::string &where) {
  const std::string s = Scalar(node, where);
  try {
    std::size_t used = 0;
    const uint64_t v = std::stoull(s, &used, 0);
    if (used == s.size()) return v;
  } catch (const std::exception &) {
  }
  Fail(where, "expected an unsigned integer, got '" + s + "'");
}

Bytes Hex(const YAML::Node &node, const std::string &where) {
  auto b = FromHex(Scalar(node, where));
  if (!b) Fail(where, "expected hex");
  return *b;
}

// Page and blob contents: hex, or "text:<literal>".
Bytes Blob(const YAML::Node &node, const std::string &where) {
  const std::string s = Scalar(node, where);
  if (s.rfind("text:", 0) == 0) {
    const ByteView b = AsBytes(std::string_view(s).substr(5));
    return Bytes(b.begin(), b.end());
  }
  return Hex(node, where);
}

std::vector<Bytes> Pages(const YAML::Node &node, const std::string &where) {
  if (!node.IsSequence()) Fail(where, "expected a list of hex pages");
  std::vector<Bytes> pages;
  for (std::size_t i = 0; i < node.size(); ++i) {
    pages.push_back(Blob(node[i], where + "[" + std::to_string(i) + "]"));
  }
  return pages;
}

ImageSpec Image(const YAML::Node &node, const std::string &where,
                std::set<std::string> extra = {}) {
  std::set<std::string> allowed = {"pages", "debug", "substitute_pages"};
  allowed.insert(extra.begin(), extra.end());
  CheckKeys(node, where, allowed, {"pages"});
  ImageSpec image;
  image.pages = Pages(node["pages"], where + ".pages");
  if (node["debug"]) image.debug = Bool(node["debug"], where + ".debug");
  if (node["substitute_pages"]) {
    image.substitute_pages =
        Pages(node["substitute_pages"], where + ".substitute_pages");
  }
  return image;
}

const std::map<std::string, std::pair<std::set<std::string>,
                                      std::set<std::string>>> &
OpSchema() {
  // op -> (required, optional)
  static const auto *schema = new std::map<
      std::string, std::pair<std::set<std::string>, std::set<std::string>>>{
      {"boot", {{}, {"compromised"}}},
      {"provision_aik", {{}, {"integrator"}}},
      {"provision_secret", {{"app"}, {"size", "name"}}},
      {"attest_hypervisor", {{}, {"tb"}}},
      {"request_approval", {{"driver"}, {"tb"}}},
      {"open_trusted_path", {{"app", "driver"}, {"confirm"}}},
      {"type", {{"device", "data"}, {"name"}}},
      {"display", {{"device", "data", "app"}, {"name"}}},
      {"close_trusted_path", {{"app", "driver"}, {}}},
      {"user_verify", {{"app", "keyboard", "screen"}, {}}},
      {"attest_chain", {{"app", "driver"}, {}}},
      {"seal_delegated", {{"driver"}, {"name"}}},
      {"hypervisor_debug_read", {{"enclave"}, {"offset", "length"}}},
      {"load_enclave_in_vm", {{"enclave", "as"}, {}}},
      {"divert_message", {{"kind"}, {"driver", "to"}}},
      {"read_vm_traffic", {{}, {"name"}}},
      {"inject_frame", {{"driver", "app", "mode"}, {}}},
      {"spoof_interrupt", {{"claimed", "actual"}, {}}},
      {"remote_tpm_quote", {{}, {}}},
      {"claim_mmio_overlap", {{"device", "overlaps"}, {}}},
      {"debug_read", {{"enclave"}, {"offset", "length"}}},
      {"debug_write", {{"enclave", "data"}, {"offset"}}},
      {"dma", {{"device", "target"}, {}}},
      {"device_io", {{"device", "data"}, {}}},
      {"request_resource", {{"resource"}, {}}},
      {"unseal_secret", {{"app", "enclave"}, {}}},
  };
  return *schema;
}

const std::set<std::string> &Checks() {
  static const auto *checks = new std::set<std::string>{
      "event_count",      "substring_absent", "value_occurrences",
      "ordering",         "capability_audit", "mediation_audit",
      "epoch_soundness"};
  return *checks;
}

EventMatcher Matcher(const YAML::Node &node, const std::string &where,
                     const std::set<std::string> &extra = {}) {
  std::set<std::string> allowed = {"event", "domain", "fields"};
  allowed.insert(extra.begin(), extra.end());
  CheckKeys(node, where, allowed);
  EventMatcher m;
  if (!node["event"]) Fail(where, "missing key 'event'");
  m.type = Scalar(node["event"], where + ".event");
  if (node["domain"]) m.domain = Scalar(node["domain"], where + ".domain");
  if (node["fields"]) {
    if (!node["fields"].IsMap()) Fail(where + ".fields", "expected a mapping");
    for (const auto &kv : node["fields"]) {
      m.fields[kv.first.as<std::string>()] =
          Scalar(kv.second, where + ".fields");
    }
  }
  return m;
}

Expectation ParseExpectation(const YAML::Node &node, const std::string &where) {
  if (!node.IsMap() || !node["check"]) Fail(where, "missing key 'check'");
  Expectation e;
  e.check = Scalar(node["check"], where + ".check");
  if (!Checks().contains(e.check)) Fail(where, "unknown check '" + e.check + "'");
  std::set<std::string> allowed = {"name", "check", "when"};
  std::set<std::string> required = {"name"};
  if (e.check == "event_count" || e.check == "value_occurrences") {
    allowed.insert({"event", "domain", "fields", "equals", "at_least", "at_most"});
    required.insert("event");
    if (e.check == "value_occurrences") {
      allowed.insert("value");
      required.insert("value");
    }
  } else if (e.check == "substring_absent") {
    allowed.insert({"value", "min_len"});
    required.insert("value");
  } else if (e.check == "ordering") {
    allowed.insert("sequence");
    required.insert("sequence");
  } else if (e.check == "capability_audit" || e.check == "mediation_audit") {
    allowed.insert("clean");
    required.insert("clean");
  }
  CheckKeys(node, where, allowed, required);
  e.name = Scalar(node["name"], where + ".name");
  for (const char *key : {"equals", "at_least", "at_most", "min_len"}) {
    if (node[key]) {
      e.params[key] = std::to_string(Uint(node[key], where + "." + key));
    }
  }
  if (node["value"]) e.params["value"] = Scalar(node["value"], where + ".value");
  if (node["clean"]) {
    e.params["clean"] = Bool(node["clean"], where + ".clean") ? "true" : "false";
  }
  if (node["event"]) {
    YAML::Node m;
    for (const char *key : {"event", "domain", "fields"}) {
      if (node[key]) m[key] = node[key];
    }
    e.matcher = Matcher(m, where);
  }
  if (node["sequence"]) {
    const YAML::Node seq = node["sequence"];
    if (!seq.IsSequence() || seq.size() == 0) {
      Fail(where + ".sequence", "expected a non-empty list");
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
      e.sequence.push_back(
          Matcher(seq[i], where + ".sequence[" + std::to_string(i) + "]"));
    }
  }
  if (node["when"]) {
    CheckKeys(node["when"], where + ".when",
              {"encls_tweak", "expose_tpm_to_os", "aik_pinning"});
    for (const auto &kv : node["when"]) {
      const std::string key = kv.first.as<std::string>();
      e.when[key] = Bool(kv.second, where + ".when." + key);
    }
  }
  return e;
}

Action ParseAction(const YAML::Node &node, const std::string &where) {
  if (!node.IsMap() || !node["op"]) Fail(where, "missing key 'op'");
  Action a;
  a.op = Scalar(node["op"], where + ".op");
  auto it = OpSchema().find(a.op);
  if (it == OpSchema().end()) Fail(where, "unknown op '" + a.op + "'");
  std::set<std::string> allowed = it->second.first;
  allowed.insert(it->second.second.begin(), it->second.second.end());
  allowed.insert("op");
  CheckKeys(node, where + " (" + a.op + ")", allowed, it->second.first);
  for (const auto &kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (key != "op") a.params[key] = Scalar(kv.second, where + "." + key);
  }
  return a;
}

platform::DeviceDirection Direction(const std::string &s,
                                    const std::string &where) {
  if (s == "input") return platform::DeviceDirection::kInput;
  if (s == "output") return platform::DeviceDirection::kOutput;
  if (s == "bidirectional") return platform::DeviceDirection::kBidirectional;
  Fail(where, "unknown direction '" + s + "'");
}

Scenario Parse(const YAML::Node &root) {
  CheckKeys(root, "scenario",
            {"name", "seed", "platform", "devices", "enclaves", "boot",
             "actions", "expect"},
            {"name", "enclaves", "boot", "actions", "expect"});
  Scenario sc;
  sc.name = Scalar(root["name"], "name");
  if (root["seed"]) sc.seed = Uint(root["seed"], "seed");

  if (const YAML::Node p = root["platform"]) {
    CheckKeys(p, "platform",
              {"capabilities", "encls_tweak", "expose_tpm_to_os", "aik_pinning"});
    if (p["encls_tweak"]) {
      sc.toggles.encls_tweak = Bool(p["encls_tweak"], "platform.encls_tweak");
    }
    if (p["expose_tpm_to_os"]) {
      sc.toggles.expose_tpm_to_os =
          Bool(p["expose_tpm_to_os"], "platform.expose_tpm_to_os");
    }
    if (p["aik_pinning"]) {
      sc.toggles.aik_pinning = Bool(p["aik_pinning"], "platform.aik_pinning");
    }
    if (const YAML::Node caps = p["capabilities"]) {
      if (!caps.IsSequence()) Fail("platform.capabilities", "expected a list");
      for (std::size_t i = 0; i < caps.size(); ++i) {
        const std::string where =
            "platform.capabilities[" + std::to_string(i) + "]";
        CheckKeys(caps[i], where, {"holder", "resource"}, {"holder", "resource"});
        if (Scalar(caps[i]["holder"], where) != "vm-os") {
          Fail(where, "only vm-os grants are configurable");
        }
        auto resource = ParseResource(Scalar(caps[i]["resource"], where));
        if (!resource) Fail(where, "bad resource");
        sc.capabilities.push_back({*resource, DomainId::VmOs()});
      }
    }
  }

  if (const YAML::Node devs = root["devices"]) {
    if (!devs.IsSequence()) Fail("devices", "expected a list");
    for (std::size_t i = 0; i < devs.size(); ++i) {
      const std::string where = "devices[" + std::to_string(i) + "]";
      CheckKeys(devs[i], where, {"id", "direction", "mmio"},
                {"id", "direction", "mmio"});
      platform::DeviceInfo d;
      d.id = Scalar(devs[i]["id"], where + ".id");
      d.direction = Direction(Scalar(devs[i]["direction"], where), where);
      const YAML::Node mmio = devs[i]["mmio"];
      if (!mmio.IsSequence() || mmio.size() != 2) {
        Fail(where + ".mmio", "expected [base, limit]");
      }
      d.mmio = {Uint(mmio[0], where + ".mmio"), Uint(mmio[1], where + ".mmio")};
      if (d.mmio.limit <= d.mmio.base) Fail(where + ".mmio", "empty range");
      sc.devices.push_back(d);
    }
  }

  const YAML::Node enc = root["enclaves"];
  CheckKeys(enc, "enclaves", {"tb", "drivers", "apps", "others"}, {"tb"});
  sc.tb = Image(enc["tb"], "enclaves.tb");
  if (const YAML::Node drivers = enc["drivers"]) {
    if (!drivers.IsMap()) Fail("enclaves.drivers", "expected a mapping");
    for (const auto &kv : drivers) {
      const std::string name = kv.first.as<std::string>();
      const std::string where = "enclaves.drivers." + name;
      DriverSpec d{name, "", Image(kv.second, where, {"device"})};
      if (!kv.second["device"]) Fail(where, "missing key 'device'");
      d.device = Scalar(kv.second["device"], where + ".device");
      sc.drivers.push_back(std::move(d));
    }
  }
  if (const YAML::Node apps = enc["apps"]) {
    if (!apps.IsMap()) Fail("enclaves.apps", "expected a mapping");
    for (const auto &kv : apps) {
      const std::string name = kv.first.as<std::string>();
      const std::string where = "enclaves.apps." + name;
      AppSpec a{name, Image(kv.second, where, {"drivers"}), {}};
      if (const YAML::Node list = kv.second["drivers"]) {
        if (!list.IsSequence()) Fail(where + ".drivers", "expected a list");
        for (std::size_t i = 0; i < list.size(); ++i) {
          a.drivers.push_back(Scalar(list[i], where + ".drivers"));
        }
      }
      sc.apps.push_back(std::move(a));
    }
  }
  if (const YAML::Node others = enc["others"]) {
    if (!others.IsMap()) Fail("enclaves.others", "expected a mapping");
    for (const auto &kv : others) {
      const std::string name = kv.first.as<std::string>();
      sc.others.push_back({name, Image(kv.second, "enclaves.others." + name)});
    }
  }

  const YAML::Node boot = root["boot"];
  CheckKeys(boot, "boot", {"stages", "golden_pcr", "compromised"},
            {"stages", "golden_pcr"});
  if (!boot["stages"].IsSequence()) Fail("boot.stages", "expected a list");
  for (std::size_t i = 0; i < boot["stages"].size(); ++i) {
    const std::string where = "boot.stages[" + std::to_string(i) + "]";
    const YAML::Node s = boot["stages"][i];
    CheckKeys(s, where, {"name", "blob"}, {"name", "blob"});
    sc.boot.stages.push_back(
        {Scalar(s["name"], where + ".name"), Blob(s["blob"], where + ".blob")});
  }
  auto golden = tpm::Digest::FromView(Hex(boot["golden_pcr"], "boot.golden_pcr"));
  if (!golden) Fail("boot.golden_pcr", "expected 32 bytes");
  sc.boot.golden_pcr = *golden;
  if (const YAML::Node c = boot["compromised"]) {
    CheckKeys(c, "boot.compromised", {"stage", "blob"}, {"stage", "blob"});
    platform::BootStage stage{Scalar(c["stage"], "boot.compromised.stage"),
                              Blob(c["blob"], "boot.compromised.blob")};
    bool found = false;
    for (const auto &s : sc.boot.stages) found |= s.name == stage.name;
    if (!found) Fail("boot.compromised.stage", "no such stage");
    sc.boot.compromised = stage;
  }

  const YAML::Node actions = root["actions"];
  if (!actions.IsSequence()) Fail("actions", "expected a list");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    sc.actions.push_back(
        ParseAction(actions[i], "actions[" + std::to_string(i) + "]"));
  }
  const YAML::Node expect = root["expect"];
  if (!expect.IsSequence()) Fail("expect", "expected a list");
  std::set<std::string> names;
  for (std::size_t i = 0; i < expect.size(); ++i) {
    Expectation e = ParseExpectation(expect[i], "expect[" + std::to_string(i) + "]");
    if (!names.insert(e.name).second) Fail("expect", "duplicate name " + e.name);
    sc.expectations.push_back(std::move(e));
  }

  // Cross references.
  std::set<std::string> device_ids, driver_names;
  for (const auto &d : sc.devices) device_ids.insert(d.id);
  for (const auto &d : sc.drivers) {
    if (!device_ids.contains(d.device)) {
      Fail("enclaves.drivers." + d.name, "unknown device " + d.device);
    }
    driver_names.insert(d.name);
  }
  for (const auto &a : sc.apps) {
    for (const auto &d : a.drivers) {
      if (!driver_names.contains(d)) {
        Fail("enclaves.apps." + a.name, "unknown driver " + d);
      }
    }
  }
  return sc;
}

}  // namespace

std::optional<platform::Resource> ParseResource(std::string_view name) {
  if (name == "tpm") return platform::TpmResource{};
  if (name.rfind("device:", 0) == 0 && name.size() > 7) {
    return platform::DeviceResource{std::string(name.substr(7))};
  }
  if (name.rfind("tb-channel:", 0) == 0) {
    const std::string_view domain = name.substr(11);
    if (domain == "vm-os") return platform::TbChannelResource{DomainId::VmOs()};
    if (domain.rfind("driver(", 0) == 0 && domain.back() == ')') {
      try {
        return platform::TbChannelResource{DomainId::Driver(static_cast<uint32_t>(
            std::stoul(std::string(domain.substr(7, domain.size() - 8)))))};
      } catch (const std::exception &) {
        return std::nullopt;
      }
    }
    return std::nullopt;
  }
  if (name.rfind("mem:", 0) == 0) {
    const std::string range(name.substr(4));
    const auto dash = range.find('-');
    if (dash == std::string::npos) return std::nullopt;
    try {
      const uint64_t base = std::stoull(range.substr(0, dash), nullptr, 0);
      const uint64_t limit = std::stoull(range.substr(dash + 1), nullptr, 0);
      if (limit <= base) return std::nullopt;
      return platform::MemoryRegion{base, limit};
    } catch (const std::exception &) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

StatusOr<Scenario> ParseScenario(const std::string &text) {
  try {
    const YAML::Node root = YAML::Load(text);
    if (!root.IsMap()) return Error{ErrorCode::kConfigError, "not a mapping"};
    return Parse(root);
  } catch (const ConfigError &e) {
    return Error{ErrorCode::kConfigError, e.message};
  } catch (const YAML::Exception &e) {
    return Error{ErrorCode::kConfigError, e.what()};
  }
}

StatusOr<Scenario> LoadScenario(const std::string &path) {
  std::ifstream in(path);
  if (!in) return Error{ErrorCode::kConfigError, "cannot read " + path};
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseScenario(buf.str());
}

}  // namespace sgxio::scenario
