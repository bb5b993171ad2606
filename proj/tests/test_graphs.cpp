#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <numeric>

#include "graph_oracles.hpp"
#include "spi/graphs.hpp"

using namespace spi::graphs;

namespace {

Diagram make(std::vector<int> marks, std::vector<Edge> edges) { return Diagram(std::move(marks), std::move(edges)); }

}  // namespace

TEST_CASE("automorphism orders of small diagrams") {
  CHECK(make({-1}, {{0, 0}}).automorphism_order() == 2);
  CHECK(make({-1}, {{0, 0}, {0, 0}}).automorphism_order() == 8);
  CHECK(make({-1, -1}, {{0, 1}, {0, 1}, {0, 1}}).automorphism_order() == 12);
  CHECK(make({-1, -1}, {{0, 0}, {0, 1}, {1, 1}}).automorphism_order() == 8);
  CHECK(make({-1, -1, -1}, {{0, 1}, {1, 2}, {0, 2}}).automorphism_order() == 6);
  // A mark breaks the vertex swap of the barbell.
  CHECK(make({0, -1}, {{0, 0}, {0, 1}, {1, 1}}).automorphism_order() == 4);
}

TEST_CASE("canonical labels identify isomorphic relabelings") {
  auto a = make({-1, -1, -1}, {{0, 0}, {0, 1}, {1, 2}, {2, 2}, {1, 1}});
  auto b = make({-1, -1, -1}, {{2, 2}, {2, 0}, {0, 1}, {1, 1}, {0, 0}});
  CHECK(a.canonical_label() == b.canonical_label());
  auto c = make({0, -1}, {{0, 1}});
  auto d = make({-1, 0}, {{1, 0}});
  CHECK(c == d);
  auto e = make({1, -1}, {{0, 1}});
  CHECK_FALSE(c == e);
}

TEST_CASE("enumerate at the lowest orders") {
  CHECK(enumerate(0, 0).empty());
  auto one = enumerate(1, 0);
  REQUIRE(one.size() == 3);
  std::multiset<std::uint64_t> auts;
  for (const auto& d : one) {
    CHECK(d.euler_characteristic() == -1);
    auts.insert(d.automorphism_order());
  }
  CHECK(auts == std::multiset<std::uint64_t>{8, 8, 12});
  CHECK_THROWS_AS(enumerate(kMaxOrder + 1, 0), LimitExceeded);
}

TEST_CASE("marked enumeration at order one") {
  auto m0 = enumerate(0, 1);
  REQUIRE(m0.size() == 1);
  CHECK(m0[0].vertex_count() == 1);
  CHECK(m0[0].edge_count() == 0);
  std::size_t at_one = 0;
  for (const auto& d : enumerate(1, 1)) at_one += d.loop_order() == 1;
  // Lone star with the three vacuum diagrams, star loop, star-tadpole.
  CHECK(at_one == 5);
  auto two = enumerate(0, 2);
  REQUIRE(two.size() == 1);  // two isolated stars
  CHECK(enumerate(1, 2).size() > 1);
}

TEST_CASE("brute-force half-edge automorphisms agree for all E <= 4") {
  for (int marks = 0; marks <= 2; ++marks) {
    for (const auto& d : enumerate(2, marks)) {
      if (d.edge_count() > 4) continue;
      CHECK_MESSAGE(d.automorphism_order() == oracle::half_edge_automorphisms(d), d.dump());
    }
  }
}

TEST_CASE("enumeration matches the naive generator") {
  for (int m = 0; m <= 2; ++m) {
    auto ours = enumerate(m, 0);
    CHECK(ours.size() == oracle::naive_class_count(m));
    std::set<std::string> labels;
    for (const auto& d : ours) labels.insert(d.canonical_label());
    CHECK(labels.size() == ours.size());
  }
}

TEST_CASE("Wick profile sums of 1/|Aut|") {
  auto profile_sum = [](std::vector<int> degs) {
    std::sort(degs.rbegin(), degs.rend());
    double s = 0;
    for (const auto& d : enumerate(2, 0)) {
      std::vector<int> p;
      for (int v = 0; v < d.vertex_count(); ++v) p.push_back(d.degree(v));
      std::sort(p.rbegin(), p.rend());
      if (p == degs) s += 1.0 / d.automorphism_order();
    }
    return s;
  };
  // [3,3]: 15 pairings / (3!^2 * 2!)
  CHECK(profile_sum({3, 3}) == doctest::Approx(pairings(6).size() / 72.0));
  // [4]: 3 pairings / 4!
  CHECK(profile_sum({4}) == doctest::Approx(pairings(4).size() / 24.0));
  // [4,4]: 105 / (4!^2 * 2!)
  CHECK(profile_sum({4, 4}) == doctest::Approx(pairings(8).size() / 1152.0));
  // [3,3,4]: 945 / (3!^2 * 2! * 4!)
  CHECK(profile_sum({4, 3, 3}) == doctest::Approx(pairings(10).size() / 1728.0));
}

TEST_CASE("pairings") {
  CHECK(pairings(3).empty());
  CHECK(pairings(2).size() == 1);
  CHECK(pairings(2)[0] == std::vector<std::pair<int, int>>{{1, 2}});
  CHECK(pairings(4).size() == 3);
  CHECK(pairings(8).size() == 105);
  for (const auto& p : pairings(6)) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      CHECK(p[k].first < p[k].second);
      if (k) CHECK(p[k - 1].first < p[k].first);
    }
  }
}

TEST_CASE("dump format") {
  auto d = make({-1, -1}, {{0, 1}, {0, 1}, {0, 1}});
  CHECK(d.dump() == "V=2 marks=none edges=(0,1),(0,1),(0,1) chi=-1 aut=12");
}

TEST_CASE("components") {
  auto d = make({0, -1, -1}, {{1, 2}, {1, 2}, {1, 2}});
  CHECK(d.components().size() == 2);
}
