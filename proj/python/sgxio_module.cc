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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sgxio/enclave.h"
#include "sgxio/simulator.h"
#include "sgxio/tpm.h"

namespace py = pybind11;

namespace sgxio {
namespace {

py::bytes ToPy(ByteView b) {
  return py::bytes(reinterpret_cast<const char *>(b.data()), b.size());
}

Bytes FromPy(const py::bytes &b) {
  const std::string s = b;
  return Bytes(s.begin(), s.end());
}

py::dict ToDict(const scenario::RunResult &r) {
  py::list expectations;
  for (const auto &e : r.expectations) {
    expectations.append(py::make_tuple(e.name,
                                       std::string(scenario::OutcomeName(e.outcome)),
                                       e.detail));
  }
  py::list trace;
  for (const TraceEvent &e : r.trace.events()) trace.append(e.ToLine());
  py::dict values;
  for (const auto &[name, bytes] : r.values) values[py::str(name)] = ToPy(bytes);
  py::dict out;
  out["passed"] = r.pass;
  out["seed"] = r.seed;
  out["expectations"] = expectations;
  out["trace"] = trace;
  out["values"] = values;
  return out;
}

py::dict RunParsed(const StatusOr<scenario::Scenario> &s,
                   std::optional<uint64_t> seed, bool no_aik_pinning,
                   bool expose_tpm_to_os, bool disable_debug_tweak) {
  if (!s.ok()) throw py::value_error(s.error().ToString());
  scenario::RunOptions o;
  o.seed = seed;
  o.no_aik_pinning = no_aik_pinning;
  o.expose_tpm_to_os = expose_tpm_to_os;
  o.disable_debug_tweak = disable_debug_tweak;
  StatusOr<scenario::RunResult> r = [&] {
    py::gil_scoped_release release;
    return scenario::Run(*s, o);
  }();
  if (!r.ok()) throw py::value_error(r.error().ToString());
  return ToDict(*r);
}

}  // namespace
}  // namespace sgxio

PYBIND11_MODULE(sgxio, m) {
  using namespace sgxio;
  m.doc() = "Deterministic simulator for enclave-based trusted I/O.";

  m.def(
      "run_file",
      [](const std::string &path, std::optional<uint64_t> seed,
         bool no_aik_pinning, bool expose_tpm_to_os, bool disable_debug_tweak) {
        return RunParsed(scenario::LoadScenario(path), seed, no_aik_pinning,
                         expose_tpm_to_os, disable_debug_tweak);
      },
      py::arg("path"), py::kw_only(), py::arg("seed") = py::none(),
      py::arg("no_aik_pinning") = false, py::arg("expose_tpm_to_os") = false,
      py::arg("disable_debug_tweak") = false,
      "Runs a scenario file. Raises ValueError on configuration errors.");

  m.def(
      "run_text",
      [](const std::string &text, std::optional<uint64_t> seed,
         bool no_aik_pinning, bool expose_tpm_to_os, bool disable_debug_tweak) {
        return RunParsed(scenario::ParseScenario(text), seed, no_aik_pinning,
                         expose_tpm_to_os, disable_debug_tweak);
      },
      py::arg("text"), py::kw_only(), py::arg("seed") = py::none(),
      py::arg("no_aik_pinning") = false, py::arg("expose_tpm_to_os") = false,
      py::arg("disable_debug_tweak") = false);

  m.def(
      "measure",
      [](const std::vector<py::bytes> &pages, bool debug) {
        sgx::EnclaveImage image;
        for (const auto &p : pages) image.pages.push_back(FromPy(p));
        image.debug = debug;
        return ToPy(sgx::Measure(image).view());
      },
      py::arg("pages"), py::arg("debug") = false,
      "Enclave identity of an image.");

  m.def(
      "boot_pcr",
      [](const std::vector<py::bytes> &blobs) {
        std::vector<Bytes> stages;
        for (const auto &b : blobs) stages.push_back(FromPy(b));
        return ToPy(tpm::ComputeBootPcr(stages).view());
      },
      py::arg("blobs"), "PCR value after measuring each boot stage in order.");
}
