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

#include "catchdec/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>

#include "catchdec/errors.hpp"
#include "catchdec/text.hpp"

namespace catchdec {
namespace {

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

class IssueLog {
 public:
  explicit IssueLog(std::string source) : source_(std::move(source)) {}
  void add(std::size_t line, const std::string& msg) {
    issues_ += "\n  line " + std::to_string(line) + ": " + msg;
    ++count_;
  }
  void raise_if_any() const {
    if (count_ > 0) throw ParseError(source_, 0, std::to_string(count_) + " problem(s):" + issues_);
  }

 private:
  std::string source_;
  std::string issues_;
  std::size_t count_ = 0;
};

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return in;
}

std::optional<Answer> parse_label(std::string_view s) {
  std::string lower(trim(s));
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "yes") return Answer::yes;
  if (lower == "no") return Answer::no;
  return std::nullopt;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

void Lexicon::add(const std::string& canonical, std::string_view surface) {
  auto words = tokenize_words(surface);
  if (words.empty()) throw DomainError("lexicon: empty surface form for '" + canonical + "'");
  const std::string canon = join_words(tokenize_words(canonical));
  if (canon.empty()) throw DomainError("lexicon: empty canonical class");
  const auto it = surfaces_.find(words);
  if (it != surfaces_.end() && it->second != canon) {
    throw DomainError("lexicon: '" + join_words(words) + "' already names '" + it->second + "'");
  }
  max_words_ = std::max(max_words_, words.size());
  classes_.insert(canon);
  surfaces_[std::move(words)] = canon;
}

Lexicon Lexicon::parse(std::istream& in, const std::string& source) {
  Lexicon lex;
  IssueLog issues(source);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::is_ignorable(line)) continue;
    const auto tab = line.find('\t');
    const std::string canonical(trim(std::string_view(line).substr(0, tab)));
    try {
      lex.add(canonical, canonical);
      if (tab != std::string::npos) {
        for (auto s : split(std::string_view(line).substr(tab + 1), ',')) {
          if (!trim(s).empty()) lex.add(canonical, trim(s));
        }
      }
    } catch (const DomainError& e) {
      issues.add(lineno, e.what());
    }
  }
  issues.raise_if_any();
  if (lex.empty()) throw ParseError(source, 0, "lexicon is empty");
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse(in, path.string());
}

std::optional<std::string> Lexicon::lookup(std::string_view phrase) const {
  const auto it = surfaces_.find(tokenize_words(phrase));
  if (it == surfaces_.end()) return std::nullopt;
  return it->second;
}

std::set<std::string> extract_objects(std::string_view caption, const Lexicon& lexicon) {
  if (lexicon.empty()) throw DomainError("extract_objects: empty lexicon");
  const auto words = tokenize_words(caption);
  std::set<std::string> found;
  std::size_t i = 0;
  while (i < words.size()) {
    std::size_t matched = 0;
    const std::size_t longest = std::min(lexicon.max_words(), words.size() - i);
    for (std::size_t len = longest; len >= 1; --len) {
      const std::vector<std::string> span(words.begin() + static_cast<std::ptrdiff_t>(i),
                                          words.begin() + static_cast<std::ptrdiff_t>(i + len));
      const auto it = lexicon.surfaces().find(span);
      if (it != lexicon.surfaces().end()) {
        found.insert(it->second);
        matched = len;
        break;
      }
    }
    i += matched > 0 ? matched : 1;
  }
  return found;
}

ChairScores chair_scores(std::span<const CaptionRecord> records) {
  if (records.empty()) throw DomainError("chair_scores: no caption records");
  ChairScores s;
  s.captions = records.size();
  for (const auto& r : records) {
    std::size_t bad = 0;
    for (const auto& o : r.mentioned_objects) {
      if (r.ground_truth_objects.count(o) == 0) ++bad;
    }
    s.mentioned += r.mentioned_objects.size();
    s.hallucinated += bad;
    if (bad > 0) ++s.captions_with_hallucination;
  }
  if (s.mentioned > 0) s.instance = ratio(s.hallucinated, s.mentioned);
  s.sentence = ratio(s.captions_with_hallucination, s.captions);
  return s;
}

ParsedAnswer parse_answer(std::string_view response) {
  for (const auto& w : tokenize_words(response)) {
    if (w == "yes") return {Answer::yes, false};
    if (w == "no") return {Answer::no, false};
  }
  return {Answer::no, true};
}

PopeScores pope_scores(std::span<const BinaryQARecord> records) {
  if (records.empty()) throw DomainError("pope_scores: no records");
  PopeScores s;
  s.total = records.size();
  for (const auto& r : records) {
    if (r.parse_failed) ++s.parse_failures;
    const bool pred = r.predicted == Answer::yes;
    const bool gold = r.label == Answer::yes;
    if (pred && gold) ++s.tp;
    else if (pred && !gold) ++s.fp;
    else if (!pred && gold) ++s.fn;
    else ++s.tn;
  }
  s.accuracy = ratio(s.tp + s.tn, s.total);
  s.precision = ratio(s.tp, s.tp + s.fp);
  s.recall = ratio(s.tp, s.tp + s.fn);
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  s.yes_ratio = ratio(s.tp + s.fp, s.total);
  return s;
}

MmeScores mme_scores(std::span<const BinaryQARecord> records, MmeScale scale) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // correct, total
  for (const auto& name : kMmeSubsets) tally[name] = {0, 0};
  MmeScores s;
  s.scale = scale;
  for (const auto& r : records) {
    const auto it = tally.find(r.subset);
    if (it == tally.end()) throw DomainError("mme_scores: unknown subset '" + r.subset + "' in record " + r.id);
    ++it->second.second;
    if (r.predicted == r.label) ++it->second.first;
    if (r.parse_failed) ++s.parse_failures;
  }
  const double unit = scale == MmeScale::percent ? 100.0 : 1.0;
  for (const auto& name : kMmeSubsets) {
    const auto [correct, total] = tally[name];
    if (total == 0) {
      s.empty_subsets.push_back(name);
      continue;
    }
    const double acc = ratio(correct, total);
    s.subset_accuracy[name] = acc;
    s.subset_count[name] = total;
    s.total += acc * unit;
  }
  return s;
}

std::vector<std::pair<std::string, std::string>> read_captions(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  IssueLog issues(path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || trim(std::string_view(line).substr(0, tab)).empty()) {
      issues.add(lineno, "expected `image_id<TAB>caption`");
      continue;
    }
    out.emplace_back(std::string(trim(std::string_view(line).substr(0, tab))),
                     std::string(trim(std::string_view(line).substr(tab + 1))));
  }
  issues.raise_if_any();
  return out;
}

std::map<std::string, std::set<std::string>> read_annotations(const std::filesystem::path& path,
                                                              const Lexicon& lexicon) {
  auto in = open_or_throw(path);
  IssueLog issues(path.string());
  std::map<std::string, std::set<std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      issues.add(lineno, "expected `image_id<TAB>object, object, ...`");
      continue;
    }
    const std::string id(trim(std::string_view(line).substr(0, tab)));
    if (out.count(id) > 0) {
      issues.add(lineno, "duplicate image_id '" + id + "'");
      continue;
    }
    auto& objects = out[id];
    for (auto item : split(std::string_view(line).substr(tab + 1), ',')) {
      if (trim(item).empty()) continue;
      const auto canon = lexicon.lookup(item);
      objects.insert(canon ? *canon : join_words(tokenize_words(item)));
    }
  }
  issues.raise_if_any();
  return out;
}

std::vector<CaptionRecord> build_caption_records(
    const std::vector<std::pair<std::string, std::string>>& captions,
    const std::map<std::string, std::set<std::string>>& annotations, const Lexicon& lexicon) {
  std::vector<CaptionRecord> records;
  std::string missing;
  for (const auto& [id, caption] : captions) {
    const auto it = annotations.find(id);
    if (it == annotations.end()) {
      missing += (missing.empty() ? "" : ", ") + id;
      continue;
    }
    records.push_back({id, caption, extract_objects(caption, lexicon), it->second});
  }
  if (!missing.empty()) throw ParseError("<annotations>", 0, "no annotations for image(s): " + missing);
  return records;
}

std::vector<BinaryQARecord> read_qa(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  IssueLog issues(path.string());
  std::vector<BinaryQARecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() < 4) {
      issues.add(lineno, "expected `id<TAB>subset<TAB>label<TAB>response`");
      continue;
    }
    const auto label = parse_label(fields[2]);
    if (!label) {
      issues.add(lineno, "label must be yes or no, got '" + std::string(trim(fields[2])) + "'");
      continue;
    }
    // The response is everything after the third tab.
    const auto resp_start = line.find('\t', line.find('\t', line.find('\t') + 1) + 1) + 1;
    const ParsedAnswer ans = parse_answer(std::string_view(line).substr(resp_start));
    BinaryQARecord r;
    r.id = std::string(trim(fields[0]));
    r.subset = std::string(trim(fields[1]));
    r.label = *label;
    r.predicted = ans.answer;
    r.parse_failed = ans.parse_failed;
    out.push_back(std::move(r));
  }
  issues.raise_if_any();
  return out;
}

}  // namespace catchdec
