#include <cmath>
#include <limits>
#include <random>

#include "agtb/error.hpp"
#include "agtb/mst.hpp"
#include "agtb/treebank.hpp"
#include "doctest.h"

using namespace agtb;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

ScoreMatrix with_diag_masked(ScoreMatrix m) {
  for (int i = 1; i <= m.n; ++i) m.at(i, i) = kNegInf;
  return m;
}

ScoreMatrix random_real_matrix(std::mt19937_64& rng, int n) {
  ScoreMatrix m = ScoreMatrix::zeros(n);
  for (int i = 1; i <= n; ++i)
    for (int h = 0; h <= n; ++h)
      m.at(i, h) = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 10.0 - 5.0;
  return with_diag_masked(m);
}

// Small-integer scores: exact arithmetic, ties common.
ScoreMatrix random_int_matrix(std::mt19937_64& rng, int n) {
  ScoreMatrix m = ScoreMatrix::zeros(n);
  for (int i = 1; i <= n; ++i)
    for (int h = 0; h <= n; ++h)
      m.at(i, h) = rng() % 11 == 0 ? kNegInf : static_cast<double>(rng() % 5);
  return with_diag_masked(m);
}

Sentence sentence_from_heads(const std::vector<int>& heads) {
  Sentence s;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    Token t;
    t.id = static_cast<int>(i) + 1;
    t.form = "w";
    t.relation = "R";
    t.head = heads[i];
    s.tokens.push_back(t);
  }
  return s;
}

}  // namespace

TEST_CASE("decode: single token") {
  ScoreMatrix m = ScoreMatrix::zeros(1);
  m.at(1, 0) = 0.0;
  m.at(1, 1) = kNegInf;
  for (bool single_root : {false, true}) {
    const auto tree = decode(m, single_root);
    CHECK(tree.heads == std::vector<int>{0});
    CHECK(tree.total_score == 0.0);
  }
}

TEST_CASE("decode: greedy cycle is contracted and resolved") {
  // row 1: head0=1.0, head2=3.0; row 2: head0=2.0, head1=2.5
  ScoreMatrix m = ScoreMatrix::zeros(2);
  m.at(1, 0) = 1.0;
  m.at(1, 1) = kNegInf;
  m.at(1, 2) = 3.0;
  m.at(2, 0) = 2.0;
  m.at(2, 1) = 2.5;
  m.at(2, 2) = kNegInf;
  const auto tree = decode(m, false);
  CHECK(tree.heads == std::vector<int>{2, 0});
  CHECK(tree.total_score == 5.0);
  const auto oracle = brute_force_decode(m, false);
  CHECK(oracle.heads == tree.heads);
  CHECK(oracle.total_score == tree.total_score);
}

TEST_CASE("decode: acyclic greedy optimum is returned as-is") {
  ScoreMatrix m = ScoreMatrix::zeros(3);
  for (int i = 1; i <= 3; ++i)
    for (int h = 0; h <= 3; ++h) m.at(i, h) = i == h ? kNegInf : 0.0;
  m.at(1, 0) = 5.0;  // per-row argmaxes: 1<-0, 2<-1, 3<-1 (a tree already)
  m.at(2, 1) = 4.0;
  m.at(3, 1) = 3.0;
  const auto tree = decode(m, true);
  CHECK(tree.heads == std::vector<int>{0, 1, 1});
  CHECK(tree.total_score == 12.0);
}

TEST_CASE("brute force: all-equal scores give the lexicographically smallest tree") {
  ScoreMatrix m = ScoreMatrix::zeros(3);
  for (int i = 1; i <= 3; ++i)
    for (int h = 0; h <= 3; ++h) m.at(i, h) = i == h ? kNegInf : 1.0;
  const auto multi = brute_force_decode(m, false);
  CHECK(multi.heads == std::vector<int>{0, 0, 0});
  const auto single = brute_force_decode(m, true);
  CHECK(single.heads == std::vector<int>{0, 1, 1});
  // decode agrees on both
  CHECK(decode(m, false).heads == multi.heads);
  CHECK(decode(m, true).heads == single.heads);
}

TEST_CASE("brute force: size limit") {
  try {
    brute_force_decode(ScoreMatrix::zeros(7), false);
    FAIL("expected SizeLimit");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SizeLimit);
  }
}

TEST_CASE("decode: infeasible single-root") {
  ScoreMatrix m = ScoreMatrix::zeros(2);
  m.at(1, 0) = kNegInf;
  m.at(1, 1) = kNegInf;
  m.at(1, 2) = 1.0;
  m.at(2, 0) = kNegInf;
  m.at(2, 1) = 1.0;
  m.at(2, 2) = kNegInf;
  try {
    decode(m, false);
    FAIL("expected Infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }
}

TEST_CASE("oracle equivalence on random matrices") {
  std::mt19937_64 rng(4242);
  for (int n = 1; n <= 5; ++n) {
    for (int it = 0; it < 250; ++it) {
      const ScoreMatrix m = it % 2 ? random_int_matrix(rng, n) : random_real_matrix(rng, n);
      for (bool single_root : {false, true}) {
        DecodedTree fast, slow;
        bool fast_failed = false, slow_failed = false;
        try {
          fast = decode(m, single_root);
        } catch (const Error&) {
          fast_failed = true;
        }
        try {
          slow = brute_force_decode(m, single_root);
        } catch (const Error&) {
          slow_failed = true;
        }
        REQUIRE(fast_failed == slow_failed);
        if (fast_failed) continue;
        CHECK(fast.total_score == slow.total_score);
        CHECK(fast.heads == slow.heads);
      }
    }
  }
}

TEST_CASE("decode output always passes strict tree validation") {
  std::mt19937_64 rng(17);
  for (int it = 0; it < 200; ++it) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const ScoreMatrix m = random_real_matrix(rng, n);
    CHECK(validate_tree(sentence_from_heads(decode(m, false).heads)).ok());
    CHECK(validate_tree(sentence_from_heads(decode(m, true).heads), true).ok());
  }
}

TEST_CASE("adding a constant to one dependent row shifts the total, not the tree") {
  std::mt19937_64 rng(55);
  for (int it = 0; it < 100; ++it) {
    const int n = 2 + static_cast<int>(rng() % 4);
    ScoreMatrix m = random_int_matrix(rng, n);
    DecodedTree base;
    try {
      base = decode(m, false);
    } catch (const Error&) {
      continue;
    }
    const int row = 1 + static_cast<int>(rng() % n);
    const double c = static_cast<double>(1 + rng() % 9);
    ScoreMatrix shifted = m;
    for (int h = 0; h <= n; ++h)
      if (shifted.at(row, h) != kNegInf) shifted.at(row, h) += c;
    const auto moved = decode(shifted, false);
    CHECK(moved.heads == base.heads);
    CHECK(moved.total_score == base.total_score + c);
  }
}
