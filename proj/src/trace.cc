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

#include "sgxio/trace.h"

#include <set>
#include <sstream>

namespace sgxio {
namespace {

// Values never contain spaces so a line splits cleanly on ' ' and '='.
std::string Sanitize(std::string_view value) {
  std::string out(value);
  for (char &c : out) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '=') c = '_';
  }
  return out;
}

}  // namespace

std::optional<std::string> TraceEvent::Field(std::string_view key) const {
  for (const auto &[k, v] : fields) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string TraceEvent::ToLine() const {
  std::string line = "step=" + std::to_string(step) +
                     " domain=" + Sanitize(domain) +
                     " event=" + Sanitize(type);
  for (const auto &[k, v] : fields) {
    line += " " + Sanitize(k) + "=" + Sanitize(v);
  }
  if (!payload.empty()) {
    line += " data=" + ToHex(payload);
  }
  if (os_visible) line += " os_visible=1";
  return line;
}

const TraceEvent &Trace::Emit(std::string domain, std::string type,
                              TraceFields fields, Bytes payload,
                              bool os_visible) {
  events_.push_back(TraceEvent{next_step(), std::move(domain), std::move(type),
                               std::move(fields), std::move(payload),
                               os_visible});
  return events_.back();
}

std::string Trace::Render() const {
  std::string out;
  for (const TraceEvent &e : events_) {
    out += e.ToLine();
    out += '\n';
  }
  return out;
}

Bytes Trace::OsObservableBytes() const {
  Bytes out;
  for (const TraceEvent &e : events_) {
    if (e.os_visible) out.insert(out.end(), e.payload.begin(), e.payload.end());
  }
  return out;
}

bool EventMatcher::Matches(const TraceEvent &event) const {
  if (event.type != type) return false;
  if (domain && event.domain != *domain) return false;
  for (const auto &[k, v] : fields) {
    auto actual = event.Field(k);
    if (!actual || *actual != v) return false;
  }
  return true;
}

namespace trace_query {

bool SubstringAbsent(const Trace &trace, ByteView secret,
                     std::size_t min_len) {
  const Bytes observed = trace.OsObservableBytes();
  if (secret.size() <= min_len) return !Contains(observed, secret);
  for (std::size_t i = 0; i + min_len <= secret.size(); ++i) {
    if (Contains(observed, secret.subspan(i, min_len))) return false;
  }
  return true;
}

std::size_t EventCount(const Trace &trace, const EventMatcher &matcher) {
  std::size_t n = 0;
  for (const TraceEvent &e : trace.events()) {
    if (matcher.Matches(e)) ++n;
  }
  return n;
}

std::size_t PayloadOccurrences(const Trace &trace, const EventMatcher &matcher,
                               ByteView value) {
  std::size_t n = 0;
  for (const TraceEvent &e : trace.events()) {
    if (matcher.Matches(e) && Contains(e.payload, value)) ++n;
  }
  return n;
}

bool Ordered(const Trace &trace, const std::vector<EventMatcher> &sequence) {
  std::size_t next = 0;
  for (const TraceEvent &e : trace.events()) {
    if (next == sequence.size()) break;
    if (sequence[next].Matches(e)) ++next;
  }
  return next == sequence.size();
}

namespace {

struct MemoryGrant {
  std::string holder;
  uint64_t base;
  uint64_t limit;
};

}  // namespace

AuditResult CapabilityAudit(const Trace &trace) {
  AuditResult result;
  // resource -> holders (outside the hypervisor)
  std::map<std::string, std::set<std::string>> exclusive;
  std::vector<MemoryGrant> memory;
  for (const TraceEvent &e : trace.events()) {
    if (e.type == "cap_reset") {
      exclusive.clear();
      memory.clear();
      continue;
    }
    if (e.type != "cap_grant" && e.type != "cap_revoke") continue;
    const std::string holder = e.Field("holder").value_or("");
    const std::string resource = e.Field("resource").value_or("");
    const bool is_memory = e.Field("kind").value_or("") == "memory";
    if (e.type == "cap_revoke") {
      exclusive[resource].erase(holder);
      std::erase_if(memory, [&](const MemoryGrant &g) {
        return g.holder == holder &&
               "mem:" + std::to_string(g.base) + "-" +
                       std::to_string(g.limit) ==
                   resource;
      });
      continue;
    }
    if (holder == "hypervisor") continue;
    if (is_memory) {
      MemoryGrant g{holder, std::stoull(e.Field("base").value_or("0")),
                    std::stoull(e.Field("limit").value_or("0"))};
      for (const MemoryGrant &other : memory) {
        if (other.holder != g.holder && g.base < other.limit &&
            other.base < g.limit) {
          result.clean = false;
          result.violations.push_back("step " + std::to_string(e.step) +
                                      ": memory of " + g.holder +
                                      " overlaps " + other.holder);
        }
      }
      memory.push_back(g);
      continue;
    }
    auto &holders = exclusive[resource];
    holders.insert(holder);
    if (holders.size() > 1) {
      result.clean = false;
      result.violations.push_back("step " + std::to_string(e.step) + ": " +
                                  resource + " has " +
                                  std::to_string(holders.size()) + " holders");
    }
  }
  return result;
}

AuditResult MediationAudit(const Trace &trace) {
  AuditResult result;
  std::map<std::string, std::string> handles;  // handle id -> holder
  std::map<std::string, std::string> vdevs;    // vdev id -> owning driver
  for (const TraceEvent &e : trace.events()) {
    if (e.type == "request_resource" &&
        e.Field("result").value_or("") == "granted") {
      handles[e.Field("handle").value_or("")] = e.domain;
    } else if (e.type == "vdev_create") {
      vdevs[e.Field("vdev").value_or("")] = e.domain;
    } else if (e.type == "msg") {
      const std::string from = e.Field("from").value_or("");
      const std::string to = e.Field("to").value_or("");
      const std::string via = e.Field("via").value_or("");
      bool ok = false;
      if (via.rfind("handle:", 0) == 0) {
        // Channels are bidirectional; either endpoint may hold the handle.
        auto it = handles.find(via.substr(7));
        ok = it != handles.end() && (it->second == from || it->second == to);
      } else if (via.rfind("vdev:", 0) == 0) {
        auto it = vdevs.find(via.substr(5));
        ok = it != vdevs.end() && (it->second == from || it->second == to);
      } else if (via == "local") {
        ok = from == to;
      } else if (via == "net") {
        // The untrusted network is the OS's own device.
        ok = (from == "remote" && to == "vm-os") ||
             (from == "vm-os" && to == "remote");
      }
      if (!ok) {
        result.clean = false;
        result.violations.push_back("step " + std::to_string(e.step) +
                                    ": unmediated message " + from + " -> " +
                                    to + " via " + via);
      }
    }
  }
  return result;
}

}  // namespace trace_query
}  // namespace sgxio
