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

#include "catchdec/trace_io.hpp"

#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>

#include "catchdec/errors.hpp"

namespace catchdec {

using ordered_json = nlohmann::ordered_json;

std::string to_json_line(const StepTrace& t) {
  ordered_json j;
  j["step"] = t.step;
  j["d_dual_non"] = t.d_dual_non;
  j["d_res_non"] = t.d_res_non;
  j["d_dec_non"] = t.d_dec_non;
  j["d_orig_non"] = t.d_orig_non;
  j["chosen_channel"] = std::string(to_string(t.chosen_channel));
  j["branch"] = std::string(to_string(t.branch));
  j["token"] = t.token;
  return j.dump();
}

StepTrace parse_trace_line(std::string_view line, const std::string& source, std::size_t lineno) {
  StepTrace t;
  try {
    const auto j = nlohmann::json::parse(line);
    t.step = j.at("step").get<std::size_t>();
    t.d_dual_non = j.at("d_dual_non").get<double>();
    t.d_res_non = j.at("d_res_non").get<double>();
    t.d_dec_non = j.at("d_dec_non").get<double>();
    t.d_orig_non = j.at("d_orig_non").get<double>();
    t.token = j.at("token").get<TokenId>();
    const auto chosen = j.at("chosen_channel").get<std::string>();
    const auto branch = j.at("branch").get<std::string>();
    if (chosen == "dual") {
      t.chosen_channel = DecoupledChannel::dual;
    } else if (chosen == "residual") {
      t.chosen_channel = DecoupledChannel::residual;
    } else {
      throw ParseError(source, lineno, "unknown chosen_channel '" + chosen + "'");
    }
    if (branch == "subtract") {
      t.branch = Branch::subtract;
    } else if (branch == "enhance") {
      t.branch = Branch::enhance;
    } else {
      throw ParseError(source, lineno, "unknown branch '" + branch + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, lineno, std::string("bad trace record: ") + e.what());
  }
  return t;
}

void write_traces(std::ostream& out, std::span<const StepTrace> traces) {
  for (const auto& t : traces) out << to_json_line(t) << '\n';
}

std::vector<StepTrace> read_traces(std::istream& in, const std::string& source) {
  std::vector<StepTrace> traces;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    traces.push_back(parse_trace_line(line, source, lineno));
  }
  return traces;
}

std::vector<StepTrace> load_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open trace file");
  return read_traces(in, path.string());
}

}  // namespace catchdec
