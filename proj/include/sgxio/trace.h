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

// Append-only event log of a simulation run, plus the queries scenario
// expectations are written against.
//
// Line format: step=<n> domain=<d> event=<type> k=v ... [data=<hex>]

#ifndef SGXIO_TRACE_H_
#define SGXIO_TRACE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sgxio/bytes.h"

namespace sgxio {

using TraceFields = std::vector<std::pair<std::string, std::string>>;

struct TraceEvent {
  uint64_t step = 0;
  std::string domain;
  std::string type;
  TraceFields fields;
  Bytes payload;
  // Whether the untrusted OS can observe |payload|.
  bool os_visible = false;

  std::optional<std::string> Field(std::string_view key) const;
  std::string ToLine() const;
};

class Trace {
 public:
  const TraceEvent &Emit(std::string domain, std::string type,
                         TraceFields fields = {}, Bytes payload = {},
                         bool os_visible = false);

  const std::vector<TraceEvent> &events() const { return events_; }
  uint64_t next_step() const { return events_.size(); }

  std::string Render() const;

  // Concatenation of every payload the untrusted OS could observe.
  Bytes OsObservableBytes() const;

 private:
  std::vector<TraceEvent> events_;
};

// Matches an event by type and (optionally) domain and field values.
struct EventMatcher {
  std::string type;
  std::optional<std::string> domain;
  std::map<std::string, std::string> fields;

  bool Matches(const TraceEvent &event) const;
};

namespace trace_query {

// True iff no substring of |secret| of length |min_len| occurs in the
// OS-observable bytes. Secrets shorter than |min_len| are checked whole.
bool SubstringAbsent(const Trace &trace, ByteView secret, std::size_t min_len);

std::size_t EventCount(const Trace &trace, const EventMatcher &matcher);

// Number of matching events whose payload contains |value|.
std::size_t PayloadOccurrences(const Trace &trace, const EventMatcher &matcher,
                               ByteView value);

// True iff each matcher is satisfied by some event strictly after the event
// that satisfied the previous matcher.
bool Ordered(const Trace &trace, const std::vector<EventMatcher> &sequence);

struct AuditResult {
  bool clean = true;
  std::vector<std::string> violations;
};

// Replays cap_grant / cap_revoke events and checks that no exclusive
// resource ever has two holders outside the hypervisor and that memory
// grants of different holders never overlap.
AuditResult CapabilityAudit(const Trace &trace);

// Checks that every message names a mediation path issued beforehand: a
// handle held by one endpoint, a virtual device owned by one endpoint, the
// network between vm-os and a remote party, or `local` within a domain.
AuditResult MediationAudit(const Trace &trace);

}  // namespace trace_query
}  // namespace sgxio

#endif  // SGXIO_TRACE_H_
