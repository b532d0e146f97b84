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

#include <doctest.h>

#include <random>
#include <sstream>

#include "catchdec/errors.hpp"
#include "catchdec/segmentation.hpp"
#include "support.hpp"

using namespace catchdec;

namespace {

SegmentMask mask(std::string id, MaskKind kind, std::vector<Pixel> px) {
  return {std::move(id), kind, std::move(px)};
}

// 4x4: O1 takes rows 0-1 minus (1,2),(1,3) -> 6 px; O2 takes (1,2),(1,3),(2,0) -> 3 px.
SegmentationSet grid_4x4() {
  std::vector<Pixel> o1, o2, bg;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (r == 0 || (r == 1 && c < 2)) {
        o1.push_back({r, c});
      } else if ((r == 1 && c >= 2) || (r == 2 && c == 0)) {
        o2.push_back({r, c});
      } else {
        bg.push_back({r, c});
      }
    }
  }
  return SegmentationSet(4, 4, {mask("O1", MaskKind::object, o1), mask("O2", MaskKind::object, o2),
                                mask("bg", MaskKind::background, bg)});
}

// Horizontal strips, one object per given area, rest background.
SegmentationSet strips(const std::vector<std::pair<std::string, int>>& objects, int width = 10) {
  std::vector<SegmentMask> masks;
  int cell = 0;
  for (const auto& [id, area] : objects) {
    SegmentMask m{id, MaskKind::object, {}};
    for (int i = 0; i < area; ++i, ++cell) m.pixels.push_back({cell / width, cell % width});
    masks.push_back(std::move(m));
  }
  const int height = cell / width + 2;
  SegmentMask bg{"background", MaskKind::background, {}};
  for (; cell < width * height; ++cell) bg.pixels.push_back({cell / width, cell % width});
  masks.push_back(std::move(bg));
  return SegmentationSet(width, height, std::move(masks));
}

std::vector<std::string> ids(const std::vector<const SegmentMask*>& ranked) {
  std::vector<std::string> out;
  for (const auto* m : ranked) out.push_back(m->id);
  return out;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("rank_segments examples") {
  CHECK(ids(rank_segments(strips({{"A", 6}, {"B", 3}}))) == std::vector<std::string>{"A", "B"});
  CHECK(ids(rank_segments(strips({{"B", 4}, {"A", 4}}))) == std::vector<std::string>{"A", "B"});
  CHECK(ids(rank_segments(strips({{"A", 1}, {"B", 9}, {"C", 5}}))) == std::vector<std::string>{"B", "C", "A"});
}

TEST_CASE("rank_segments rejects a segmentation without objects") {
  std::vector<Pixel> all;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) all.push_back({r, c});
  const SegmentationSet only_bg(2, 2, {mask("bg", MaskKind::background, all)});
  CHECK_THROWS_AS(rank_segments(only_bg), DomainError);
}

TEST_CASE("select_top_m examples") {
  CHECK(select_top_m(60, 0.05) == 3);
  CHECK(select_top_m(1, 0.05) == 1);
  CHECK(select_top_m(49, 0.05) == 2);
  CHECK(select_top_m(50, 0.05) == 3);  // 2.5 rounds half up
  CHECK(select_top_m(10, 1.0) == 10);
  CHECK(select_top_m(3, 0.05) == 1);
  CHECK_THROWS_AS(select_top_m(0, 0.05), DomainError);
  CHECK_THROWS_AS(select_top_m(5, 0.0), DomainError);
  CHECK_THROWS_AS(select_top_m(5, 1.5), DomainError);
}

TEST_CASE("decouple on the 4x4 grid") {
  const SegmentationSet seg = grid_4x4();
  const DecoupledPair one = decouple(seg, 1);
  CHECK(one.dual.count() == 6);
  CHECK(one.residual.count() == 10);
  CHECK(one.dual_objects == std::vector<std::string>{"O1"});
  CHECK(one.residual_objects == std::vector<std::string>{"O2"});
  CHECK(one.dual(0, 0));
  CHECK(!one.dual(1, 2));

  const DecoupledPair two = decouple(seg, 2);
  CHECK(two.dual.count() == 9);
  CHECK(two.residual.count() == 7);
  CHECK((two.residual == seg.raster(seg.background())).all());
  CHECK(two.residual_objects.empty());

  CHECK_THROWS_AS(decouple(seg, 0), DomainError);
  CHECK_THROWS_AS(decouple(seg, 3), DomainError);
}

TEST_CASE("partition validation names the offending pixel or mask") {
  // Hole at (1,1).
  const std::string hole = error_of([] {
    SegmentationSet(2, 2, {mask("a", MaskKind::object, {{0, 0}, {0, 1}}), mask("bg", MaskKind::background, {{1, 0}})});
  });
  CHECK(hole.find("uncovered pixel (1,1)") != std::string::npos);

  const std::string overlap = error_of([] {
    SegmentationSet(2, 1, {mask("a", MaskKind::object, {{0, 0}, {0, 1}}), mask("bg", MaskKind::background, {{0, 1}})});
  });
  CHECK(overlap.find("(0,1)") != std::string::npos);
  CHECK(overlap.find("'a'") != std::string::npos);
  CHECK(overlap.find("'bg'") != std::string::npos);

  CHECK_THROWS_AS(SegmentationSet(1, 1, {mask("a", MaskKind::object, {{0, 0}}), mask("a", MaskKind::background, {{0, 0}})}),
                  DomainError);
  CHECK_THROWS_AS(SegmentationSet(2, 1, {mask("a", MaskKind::object, {{0, 0}}), mask("bg", MaskKind::background, {{0, 2}})}),
                  DomainError);
  CHECK_THROWS_AS(SegmentationSet(1, 1, {mask("a", MaskKind::object, {}), mask("bg", MaskKind::background, {{0, 0}})}),
                  DomainError);
  CHECK_THROWS_AS(SegmentationSet(1, 1, {mask("a", MaskKind::object, {{0, 0}})}), DomainError);
  CHECK_THROWS_AS(SegmentationSet(2, 1, {mask("b1", MaskKind::background, {{0, 0}}), mask("b2", MaskKind::background, {{0, 1}})}),
                  DomainError);
  CHECK_THROWS_AS(SegmentationSet(0, 3, {}), DomainError);
}

TEST_CASE("segmentation file round trip and errors") {
  const SegmentationSet seg = load_segmentation(testing::data_path("sandwich.seg"));
  CHECK(seg.width() == 6);
  CHECK(seg.height() == 6);
  CHECK(seg.object_count() == 3);
  CHECK(seg.find("person")->area() == 14);
  CHECK(seg.background().area() == 10);

  std::ostringstream out;
  write_segmentation(out, seg);
  std::istringstream in(out.str());
  const SegmentationSet again = parse_segmentation(in);
  REQUIRE(again.masks().size() == seg.masks().size());
  for (std::size_t i = 0; i < seg.masks().size(); ++i) {
    CHECK(again.masks()[i].id == seg.masks()[i].id);
    CHECK(again.masks()[i].pixels == seg.masks()[i].pixels);
  }

  std::istringstream holey("2 2\na object 2 0,0 0,1\nbg background 1 1,0\n");
  CHECK_THROWS_WITH_AS(parse_segmentation(holey, "holey.seg"), doctest::Contains("uncovered pixel (1,1)"), ParseError);
  std::istringstream bad_count("1 1\nbg background 2 0,0\n");
  CHECK_THROWS_AS(parse_segmentation(bad_count), ParseError);
  std::istringstream bad_kind("1 1\nbg sky 1 0,0\n");
  CHECK_THROWS_WITH_AS(parse_segmentation(bad_kind, "k.seg"), doctest::Contains("k.seg:2"), ParseError);
  CHECK_THROWS_AS(load_segmentation("/nonexistent/x.seg"), ParseError);
}

TEST_CASE("decouple keeps the partition on random segmentations") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const SegmentationSet seg = testing::random_segmentation(rng);
    const std::size_t n = seg.object_count();
    PixelMask previous_dual = PixelMask::Constant(seg.height(), seg.width(), false);
    for (std::size_t m = 1; m <= n; ++m) {
      const DecoupledPair pair = decouple(seg, m);
      CHECK_FALSE((pair.dual && pair.residual).any());
      CHECK((pair.dual || pair.residual).all());
      CHECK((pair.residual || !seg.raster(seg.background())).all());
      // Growing m only adds pixels to the dual exposure.
      CHECK((pair.dual || !previous_dual).all());
      CHECK(pair.dual.count() > previous_dual.count());
      previous_dual = pair.dual;

      const DecoupledPair again = decouple(seg, m);
      CHECK((again.dual == pair.dual).all());
    }
  }
}
