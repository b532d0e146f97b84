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

// Hallucination benchmark scorers: CHAIR for captions, POPE-style yes/no
// probing, and the MME existence/count/position/color subsets.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace catchdec {

/// Lowercased alphanumeric words; everything else separates.
std::vector<std::string> tokenize_words(std::string_view text);

/// Surface form (one or more words) -> canonical object class.
class Lexicon {
 public:
  void add(const std::string& canonical, std::string_view surface);

  /// Lines `canonical<TAB>surface, surface, ...`; the canonical name is
  /// always a surface form of itself. '#' comments allowed.
  static Lexicon parse(std::istream& in, const std::string& source = "<lexicon>");
  static Lexicon load(const std::filesystem::path& path);

  bool empty() const { return surfaces_.empty(); }
  std::size_t class_count() const { return classes_.size(); }
  std::size_t max_words() const { return max_words_; }

  /// Canonical class for an exact surface phrase, if any.
  std::optional<std::string> lookup(std::string_view phrase) const;
  const std::map<std::vector<std::string>, std::string>& surfaces() const { return surfaces_; }

 private:
  std::map<std::vector<std::string>, std::string> surfaces_;
  std::set<std::string> classes_;
  std::size_t max_words_ = 0;
};

/// Case-insensitive longest match over the caption's words; each canonical
/// class is reported once. Throws DomainError on an empty lexicon.
std::set<std::string> extract_objects(std::string_view caption, const Lexicon& lexicon);

struct CaptionRecord {
  std::string image_id;
  std::string caption;
  std::set<std::string> mentioned_objects;
  std::set<std::string> ground_truth_objects;
};

struct ChairScores {
  /// Hallucinated object mentions / all object mentions. Absent when no
  /// caption mentions any object.
  std::optional<double> instance;
  /// Captions with at least one hallucinated object / all captions.
  double sentence = 0;
  std::size_t captions = 0;
  std::size_t mentioned = 0;
  std::size_t hallucinated = 0;
  std::size_t captions_with_hallucination = 0;
};

ChairScores chair_scores(std::span<const CaptionRecord> records);

enum class Answer { yes, no };

struct ParsedAnswer {
  Answer answer = Answer::no;
  bool parse_failed = false;
};

/// First standalone "yes" or "no" (case-insensitive). Neither found: "no",
/// flagged as a parse failure.
ParsedAnswer parse_answer(std::string_view response);

struct BinaryQARecord {
  std::string id;
  std::string subset;
  Answer predicted = Answer::no;
  Answer label = Answer::no;
  bool parse_failed = false;
};

struct PopeScores {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double yes_ratio = 0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total = 0;
  std::size_t parse_failures = 0;
};

/// Positive class is "yes". Precision, recall and F1 are 0 when their
/// denominators vanish.
PopeScores pope_scores(std::span<const BinaryQARecord> records);

inline const std::vector<std::string> kMmeSubsets = {"existence", "count", "position", "color"};

enum class MmeScale { unit, percent };

struct MmeScores {
  std::map<std::string, double> subset_accuracy;  // non-empty subsets only
  std::map<std::string, std::size_t> subset_count;
  std::vector<std::string> empty_subsets;
  double total = 0;  // sum of subset accuracies; x100 on the percent scale
  MmeScale scale = MmeScale::unit;
  std::size_t parse_failures = 0;
};

/// Throws DomainError on a subset tag outside kMmeSubsets.
MmeScores mme_scores(std::span<const BinaryQARecord> records, MmeScale scale = MmeScale::unit);

// File readers. All parse problems in a file are collected and reported in
// one ParseError, one `line N: ...` entry each.

/// `image_id<TAB>caption`
std::vector<std::pair<std::string, std::string>> read_captions(const std::filesystem::path& path);
/// `image_id<TAB>object, object, ...`
std::map<std::string, std::set<std::string>> read_annotations(const std::filesystem::path& path,
                                                              const Lexicon& lexicon);
std::vector<CaptionRecord> build_caption_records(
    const std::vector<std::pair<std::string, std::string>>& captions,
    const std::map<std::string, std::set<std::string>>& annotations, const Lexicon& lexicon);
/// `id<TAB>subset<TAB>label<TAB>response text`
std::vector<BinaryQARecord> read_qa(const std::filesystem::path& path);

}  // namespace catchdec
