/*
Copyright 2026 The memplan Authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/


#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "memplan/layout.hpp"
#include "oracles.hpp"

using namespace memplan;

namespace {

std::vector<LayoutItem> random_items(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::vector<LayoutItem> items;
  for (int i = 0; i < n; ++i) {
    const int a = static_cast<int>(rng() % 10);
    const int b = a + static_cast<int>(rng() % 5);
    items.push_back({i, static_cast<Bytes>(1 + rng() % 6), {a, b}, false});
  }
  return items;
}

}  // namespace

TEST_CASE("long-lived-first example") {
  LayoutProblem p;
  p.items = {{0, 8, {0, 10}, false}, {1, 4, {0, 3}, false}, {2, 4, {4, 10}, false}};
  const auto m = llfb_layout(p);
  CHECK(m.offsets.at(0) == 0);
  CHECK(m.offsets.at(1) == 8);
  CHECK(m.offsets.at(2) == 8);
  CHECK(m.capacity == 12);
  const auto e = exact_layout(p);
  CHECK(e.optimal);
  CHECK(e.layout.capacity == 12);
}

TEST_CASE("exact layout matches permutation search") {
  for (std::uint64_t seed = 0; seed < 80; ++seed) {
    const auto items = random_items(seed, 3 + static_cast<int>(seed % 5));
    LayoutProblem p;
    p.items = items;
    const auto e = exact_layout(p);
    const auto l = llfb_layout(p);
    CAPTURE(seed);
    CHECK(e.optimal);
    CHECK(e.layout.capacity == oracle::min_capacity(items));
    CHECK(e.layout.capacity >= clique_bound(items));
    CHECK(e.layout.capacity <= l.capacity);
    CHECK(validate_layout(items, e.layout).empty());
    CHECK(validate_layout(items, l).empty());
  }
}

TEST_CASE("activations stay at the bottom") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto items = random_items(seed + 500, 7);
    Bytes block = 0;
    for (size_t i = 0; i < items.size(); i += 3) {
      items[i].activation = true;
      block += items[i].size;
    }
    LayoutProblem p;
    p.items = items;
    p.activations_at_bottom = true;
    for (const auto& m : {exact_layout(p).layout, llfb_layout(p)}) {
      CAPTURE(seed);
      CHECK(validate_layout(items, m).empty());
      CHECK(m.activation_block_size == block);
      for (const auto& it : items) {
        const Bytes y = m.offsets.at(it.id);
        if (it.activation) CHECK(y + it.size <= block);
      }
    }
  }
}

TEST_CASE("activation floors match the stacked permutation search") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto items = random_items(seed + 900, 3 + static_cast<int>(seed % 6));
    for (size_t i = seed % 2; i < items.size(); i += 3) items[i].activation = true;
    LayoutProblem p;
    p.items = items;
    p.activations_at_bottom = true;
    const auto e = exact_layout(p);
    CAPTURE(seed);
    CHECK(e.optimal);
    CHECK(e.layout.capacity == oracle::min_capacity_stacked(items));
    CHECK(validate_layout(items, e.layout).empty());
  }
}

TEST_CASE("activation floors prune a dense backward window") {
  LayoutProblem p;
  p.activations_at_bottom = true;
  p.items = {
      {1, 8 * kMiB, {1, 84}, true},
      {2, 8 * kMiB, {2, 81}, true},
      {3, 8 * kMiB, {3, 81}, true},
      {4, 8 * kMiB, {4, 79}, true},
      {6, 8 * kMiB, {6, 80}, true},
      {62, 8 * kMiB, {79, 80}, false},
      {63, 8 * kMiB, {79, 82}, false},
      {64, 8 * kMiB, {80, 81}, false},
      {65, 8 * kMiB, {81, 84}, false},
      {66, 8 * kMiB, {81, 83}, false},
      {67, 8 * kMiB, {82, 97}, false},
      {68, 4 * kMiB, {82, 86}, false},
      {69, 8 * kMiB, {83, 97}, false},
      {70, 4 * kMiB, {83, 90}, false},
      {71, 8 * kMiB, {84, 97}, false},
      {72, 4 * kMiB, {84, 94}, false},
      {104, 4 * kMiB, {85, 87}, false},
      {105, 4 * kMiB, {86, 87}, false},
      {106, 4 * kMiB, {87, 88}, false},
      {107, 4 * kMiB, {89, 91}, false},
      {108, 4 * kMiB, {90, 91}, false},
      {109, 4 * kMiB, {91, 92}, false},
      {110, 4 * kMiB, {93, 95}, false},
      {111, 4 * kMiB, {94, 95}, false},
      {112, 4 * kMiB, {95, 96}, false}};
  const auto e = exact_layout(p);
  CHECK(e.optimal);
  CHECK(e.layout.capacity == 64 * kMiB);
  CHECK(e.nodes < 10000);
  CHECK(llfb_layout(p).capacity == 68 * kMiB);
  CHECK(clique_bound(p.items) == 56 * kMiB);
}

TEST_CASE("concatenation shifts by activation blocks") {
  LayoutProblem a;
  a.items = {{0, 4, {0, 9}, true}, {1, 2, {0, 2}, false}};
  a.activations_at_bottom = true;
  LayoutProblem b;
  b.items = {{2, 3, {3, 6}, true}, {3, 5, {4, 5}, false}};
  b.activations_at_bottom = true;
  const std::vector<LayoutPart> parts{{exact_layout(a).layout, a.items}, {exact_layout(b).layout, b.items}};
  const auto m = concat_layouts(parts);
  CHECK(m.offsets.at(0) == 0);
  CHECK(m.offsets.at(2) == 4);
  CHECK(m.activation_block_size == 7);
  std::vector<LayoutItem> all = a.items;
  all.insert(all.end(), b.items.begin(), b.items.end());
  CHECK(validate_layout(all, m).empty());
}

TEST_CASE("concatenation rejects a broken activation block") {
  LayoutPart part;
  part.items = {{0, 4, {0, 9}, true}};
  part.layout.offsets = {{0, 2}};
  part.layout.capacity = 6;
  part.layout.activation_block_size = 4;
  const std::vector<LayoutPart> parts{part};
  CHECK_THROWS_AS(concat_layouts(parts), InvariantError);
}

TEST_CASE("repair removes overlaps") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    LayoutProblem p;
    p.items = random_items(seed + 900, 8);
    MemoryLayout m;
    for (const auto& it : p.items) {
      m.offsets[it.id] = 0;
      m.capacity = std::max(m.capacity, it.size);
    }
    const auto fixed = repair_conflicts(m, p);
    CAPTURE(seed);
    CHECK(validate_layout(p.items, fixed).empty());
  }
}

TEST_CASE("validation finds overlaps and gaps") {
  const std::vector<LayoutItem> items{{0, 4, {0, 3}, false}, {1, 4, {2, 5}, false}};
  MemoryLayout m;
  m.offsets = {{0, 0}, {1, 2}};
  m.capacity = 6;
  auto v = validate_layout(items, m);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == LayoutViolation::Kind::kOverlap);
  m.offsets.erase(1);
  v = validate_layout(items, m);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == LayoutViolation::Kind::kMissing);
}

TEST_CASE("fragmentation") {
  CHECK(fragmentation_pct(0, 0) == 0.0);
  CHECK(fragmentation_pct(100, 75) == doctest::Approx(25.0));
  CHECK_THROWS_AS(fragmentation_pct(10, 20), InvariantError);
}

TEST_CASE("stored instance where long-lived-first best fit leaves a gap") {
  const auto f = fixture::load_layout("llfb_gap.json");
  const auto exact = exact_layout(f.problem);
  CHECK(exact.optimal);
  CHECK(exact.layout.capacity == f.exact_capacity);
  CHECK(llfb_layout(f.problem).capacity == f.llfb_capacity);
  CHECK(f.exact_capacity < f.llfb_capacity);
  CHECK(oracle::min_capacity(f.problem.items) == f.exact_capacity);
}
