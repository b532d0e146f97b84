// Copyright 2026 The catchdec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Trace files: one JSON object per line, one line per decode step. Doubles are
// written in shortest round-trip form, so reading a trace back reproduces every
// distance bit for bit.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catchdec/engine.hpp"

namespace catchdec {

std::string to_json_line(const StepTrace& trace);
StepTrace parse_trace_line(std::string_view line, const std::string& source = "<trace>",
                           std::size_t lineno = 0);

void write_traces(std::ostream& out, std::span<const StepTrace> traces);
std::vector<StepTrace> read_traces(std::istream& in, const std::string& source = "<trace>");
std::vector<StepTrace> load_traces(const std::filesystem::path& path);

}  // namespace catchdec
