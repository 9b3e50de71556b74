#include <set>

#include "agtb/conllu.hpp"
#include "agtb/error.hpp"
#include "agtb/split.hpp"
#include "doctest.h"

using namespace agtb;

namespace {

std::vector<Sentence> make_corpus(int n) {
  std::vector<Sentence> corpus;
  for (int i = 0; i < n; ++i) {
    Sentence s;
    s.sentence_id = "s" + std::to_string(i);
    Token t;
    t.id = 1;
    t.form = "w" + std::to_string(i);
    t.lemma = t.form;
    t.relation = "PRED";
    t.head = 0;
    s.tokens.push_back(t);
    corpus.push_back(std::move(s));
  }
  return corpus;
}

std::multiset<std::string> ids_of(const std::string& conllu) {
  std::multiset<std::string> out;
  for (const Sentence& s : read_conllu(conllu)) out.insert(s.sentence_id);
  return out;
}

}  // namespace

TEST_CASE("make_splits: sizes for 100 sentences") {
  const auto corpus = make_corpus(100);
  const auto m = make_splits(corpus, 7);
  CHECK(m.test_ids.size() == 20);
  for (const auto& fold : m.folds) CHECK(fold.size() == 16);
  CHECK(m.runs.size() == 10);
  CHECK(m.runs[0].train_seed == 7);
  CHECK(m.runs[1].train_seed == (7 ^ 1));
  CHECK(m.runs[5].fold == 0);
  CHECK(m.runs[5].repetition == 1);
}

TEST_CASE("make_splits: remainder goes to lower folds") {
  const auto m = make_splits(make_corpus(10), 3);
  CHECK(m.test_ids.size() == 2);
  CHECK(m.folds[0].size() == 2);
  CHECK(m.folds[1].size() == 2);
  CHECK(m.folds[2].size() == 2);
  CHECK(m.folds[3].size() == 1);
  CHECK(m.folds[4].size() == 1);
}

TEST_CASE("make_splits: deterministic for equal inputs") {
  const auto corpus = make_corpus(50);
  CHECK(make_splits(corpus, 11) == make_splits(corpus, 11));
  CHECK(write_manifest(make_splits(corpus, 11)) == write_manifest(make_splits(corpus, 11)));
}

TEST_CASE("make_splits: too few sentences") {
  try {
    make_splits(make_corpus(9), 1);
    FAIL("expected TooFewSentences");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFewSentences);
  }
}

TEST_CASE("make_splits: duplicate ids are rejected") {
  auto corpus = make_corpus(10);
  corpus[3].sentence_id = corpus[7].sentence_id;
  CHECK_THROWS_AS(make_splits(corpus, 1), Error);
}

TEST_CASE("materialize: partition per run, constant test block") {
  const auto corpus = make_corpus(37);
  const auto m = make_splits(corpus, 5);
  std::multiset<std::string> all;
  for (const Sentence& s : corpus) all.insert(s.sentence_id);

  std::string first_test;
  for (int run = 0; run < 10; ++run) {
    const auto files = materialize_split(corpus, m, run);
    auto merged = ids_of(files.train);
    const auto val = ids_of(files.validation);
    const auto test = ids_of(files.test);
    merged.insert(val.begin(), val.end());
    merged.insert(test.begin(), test.end());
    CHECK(merged == all);
    CHECK(val.size() + ids_of(files.train).size() + test.size() == all.size());
    if (run == 0) first_test = files.test;
    else CHECK(files.test == first_test);
    // validation block is exactly fold (run mod 5)
    std::multiset<std::string> fold_ids(m.folds[static_cast<std::size_t>(run % 5)].begin(),
                                        m.folds[static_cast<std::size_t>(run % 5)].end());
    CHECK(val == fold_ids);
  }

  // same fold, different repetition: identical files, different seed
  const auto run0 = materialize_split(corpus, m, 0);
  const auto run5 = materialize_split(corpus, m, 5);
  CHECK(run0.train == run5.train);
  CHECK(run0.validation == run5.validation);
  CHECK(m.runs[0].train_seed != m.runs[5].train_seed);
}

TEST_CASE("materialize: id mismatch is fatal") {
  const auto corpus = make_corpus(20);
  const auto m = make_splits(corpus, 5);
  auto other = make_corpus(19);
  try {
    materialize_split(other, m, 0);
    FAIL("expected IdMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IdMismatch);
  }
}

TEST_CASE("manifest: text round trip") {
  const auto m = make_splits(make_corpus(23), 99);
  const auto back = read_manifest(write_manifest(m));
  CHECK(back == m);
}
