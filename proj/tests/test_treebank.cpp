#include <random>

#include "agtb/error.hpp"
#include "agtb/treebank.hpp"
#include "doctest.h"

using namespace agtb;

namespace {

Sentence sentence_with_heads(const std::vector<int>& heads) {
  Sentence s;
  s.sentence_id = "t";
  for (std::size_t i = 0; i < heads.size(); ++i) {
    Token t;
    t.id = static_cast<int>(i) + 1;
    t.form = "w" + std::to_string(i + 1);
    t.lemma = t.form;
    t.relation = "REL";
    t.head = heads[i];
    s.tokens.push_back(t);
  }
  return s;
}

}  // namespace

TEST_CASE("validate_tree accepts a chain to root") {
  const auto s = sentence_with_heads({2, 0, 2});
  CHECK(validate_tree(s).ok());
  CHECK(validate_tree(s, true).ok());
}

TEST_CASE("validate_tree reports mutual heads as a cycle") {
  const auto verdict = validate_tree(sentence_with_heads({2, 1}));
  CHECK(verdict.kind == TreeVerdict::Kind::Cycle);
  CHECK(verdict.ids == std::vector<int>{1, 2});
  CHECK(to_string(verdict) == "cycle(1,2)");
}

TEST_CASE("validate_tree reports multiple roots only in single-root mode") {
  const auto s = sentence_with_heads({0, 0, 1});
  CHECK(validate_tree(s).ok());
  const auto verdict = validate_tree(s, true);
  CHECK(verdict.kind == TreeVerdict::Kind::MultipleRoots);
  CHECK(verdict.ids == std::vector<int>{1, 2});
}

TEST_CASE("validate_tree reports out-of-range and self heads") {
  auto verdict = validate_tree(sentence_with_heads({5, 0}));
  CHECK(verdict.kind == TreeVerdict::Kind::DanglingHead);
  CHECK(verdict.ids == std::vector<int>{1});

  verdict = validate_tree(sentence_with_heads({0, 2}));
  CHECK(verdict.kind == TreeVerdict::Kind::DanglingHead);
  CHECK(verdict.ids == std::vector<int>{2});
}

TEST_CASE("validate_tree is pure") {
  const auto s = sentence_with_heads({3, 1, 2});
  CHECK(validate_tree(s) == validate_tree(s));
}

TEST_CASE("postag_to_feats maps positions to sorted keys") {
  const Feats expected{{"mood", "i"}, {"number", "s"}, {"person", "3"}, {"tense", "p"}, {"voice", "a"}};
  CHECK(postag_to_feats("v3spia---") == expected);

  CHECK(postag_to_feats("---------").empty());

  const Feats nominal{{"case", "n"}, {"gender", "f"}, {"number", "s"}};
  CHECK(postag_to_feats("n-s---fn-") == nominal);
}

TEST_CASE("postag_to_feats rejects tags that are not 9 characters") {
  try {
    postag_to_feats("v3spia");
    FAIL("expected MalformedTag");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedTag);
  }
  CHECK_THROWS_AS(postag_to_feats("v3spia----"), Error);
}

TEST_CASE("feats round-trip through a 9-char tag") {
  std::mt19937_64 rng(7);
  const std::string values = "123abcdfgmnopstv-";
  for (int it = 0; it < 200; ++it) {
    std::string tag(9, '-');
    tag[0] = "vnadcpl"[rng() % 7];
    for (int i = 1; i < 9; ++i) tag[static_cast<std::size_t>(i)] = values[rng() % values.size()];
    const auto feats = postag_to_feats(tag);
    CHECK(feats_to_postag(tag[0], feats) == tag);
    CHECK(postag_to_feats(feats_to_postag(tag[0], feats)) == feats);
  }
}

TEST_CASE("feats_to_postag validates keys and values") {
  CHECK_THROWS_AS(feats_to_postag('v', {{"sparkle", "x"}}), Error);
  CHECK_THROWS_AS(feats_to_postag('v', {{"case", "xy"}}), Error);
}

TEST_CASE("sanitize_postag pads short tags and replaces long ones") {
  bool changed = false;
  CHECK(sanitize_postag("v3spia---", &changed) == "v3spia---");
  CHECK_FALSE(changed);
  CHECK(sanitize_postag("n-s", &changed) == "n-s------");
  CHECK(changed);
  CHECK(sanitize_postag("v3spia----x", &changed) == "---------");
  CHECK(changed);
  CHECK(sanitize_postag("", &changed) == "---------");
  CHECK(changed);
}
