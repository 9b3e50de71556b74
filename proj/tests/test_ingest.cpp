#include <cmath>
#include <limits>
#include <random>

#include "agtb/agdt_xml.hpp"
#include "agtb/catalog.hpp"
#include "agtb/conllu.hpp"
#include "agtb/error.hpp"
#include "agtb/score_matrix.hpp"
#include "doctest.h"

using namespace agtb;

namespace {

const char* kSmallXml =
    "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    "<treebank>\n"
    "  <sentence id=\"1\" document_id=\"tlg0012.tlg001\">\n"
    "    <word id=\"1\" form=\"μῆνιν\" lemma=\"μῆνις\" postag=\"n-s---fa-\" head=\"2\" relation=\"OBJ\"/>\n"
    "    <word id=\"2\" form=\"ἄειδε\" lemma=\"ἀείδω\" postag=\"v2spma---\" head=\"0\" relation=\"PRED\"/>\n"
    "  </sentence>\n"
    "</treebank>\n";

}  // namespace

TEST_CASE("agdt xml: minimal sentence") {
  const auto result = read_agdt_xml("<treebank><sentence id=\"s1\"><word id=\"1\" form=\"x\" "
                                    "lemma=\"x\" postag=\"d--------\" head=\"0\" relation=\"PRED\"/>"
                                    "</sentence></treebank>");
  REQUIRE(result.sentences.size() == 1);
  CHECK(result.warnings.empty());
  const Sentence& s = result.sentences[0];
  CHECK(s.sentence_id == "s1");
  REQUIRE(s.size() == 1);
  CHECK(s.tokens[0].head == 0);
}

TEST_CASE("agdt xml: attribute fields land where they should") {
  const auto result = read_agdt_xml(kSmallXml);
  REQUIRE(result.sentences.size() == 1);
  const Sentence& s = result.sentences[0];
  CHECK(s.provenance == "tlg0012.tlg001");
  REQUIRE(s.size() == 2);
  CHECK(s.tokens[0].form == "μῆνιν");
  CHECK(s.tokens[0].lemma == "μῆνις");
  CHECK(s.tokens[0].postag == "n-s---fa-");
  CHECK(s.tokens[0].head == 2);
  CHECK(s.tokens[0].relation == "OBJ");
  CHECK_FALSE(s.tokens[0].elliptical);
}

TEST_CASE("agdt xml: non-numeric head is sanitized to 0 with a warning") {
  const auto result = read_agdt_xml(
      "<t><sentence id=\"s\"><word id=\"1\" form=\"a\" lemma=\"a\" postag=\"d--------\" "
      "head=\"x\" relation=\"AuxZ\"/></sentence></t>");
  REQUIRE(result.sentences.size() == 1);
  CHECK(result.sentences[0].tokens[0].head == 0);
  REQUIRE(result.warnings.size() == 1);
  CHECK(result.warnings[0].find("non-numeric head") != std::string::npos);
}

TEST_CASE("agdt xml: artificial attribute marks elliptical tokens") {
  const auto result = read_agdt_xml(
      "<t><sentence id=\"s\"><word id=\"1\" form=\"a\" lemma=\"a\" postag=\"d--------\" "
      "head=\"0\" relation=\"PRED\"/><word id=\"2\" form=\"b\" lemma=\"b\" "
      "postag=\"d--------\" head=\"1\" relation=\"SBJ\" artificial=\"elliptic\"/>"
      "</sentence></t>");
  REQUIRE(result.sentences.size() == 1);
  CHECK_FALSE(result.sentences[0].tokens[0].elliptical);
  CHECK(result.sentences[0].tokens[1].elliptical);
}

TEST_CASE("agdt xml: placeholder forms are elliptical too") {
  const auto result = read_agdt_xml(
      "<t><sentence id=\"s\"><word id=\"1\" form=\"[0]\" lemma=\"x\" postag=\"d--------\" "
      "head=\"0\" relation=\"PRED\"/></sentence></t>");
  CHECK(result.sentences[0].tokens[0].elliptical);
}

TEST_CASE("agdt xml: duplicate ids are fatal") {
  CHECK_THROWS_AS(read_agdt_xml("<t><sentence id=\"s\"><word id=\"1\" form=\"a\"/>"
                                "<word id=\"1\" form=\"b\"/></sentence></t>"),
                  Error);
}

TEST_CASE("agdt xml: empty sentence is fatal") {
  try {
    read_agdt_xml("<t><sentence id=\"s\"></sentence></t>");
    FAIL("expected EmptySentence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptySentence);
  }
}

TEST_CASE("agdt xml: id gaps are renumbered with head remapping") {
  const auto result = read_agdt_xml(
      "<t><sentence id=\"s\"><word id=\"2\" form=\"a\" lemma=\"a\" postag=\"d--------\" "
      "head=\"5\" relation=\"AuxZ\"/><word id=\"5\" form=\"b\" lemma=\"b\" "
      "postag=\"d--------\" head=\"0\" relation=\"PRED\"/></sentence></t>");
  REQUIRE(result.sentences.size() == 1);
  const Sentence& s = result.sentences[0];
  CHECK(s.tokens[0].id == 1);
  CHECK(s.tokens[0].head == 2);
  CHECK(s.tokens[1].id == 2);
  CHECK(s.tokens[1].head == 0);
}

TEST_CASE("agdt xml: never panics on arbitrary bytes") {
  std::mt19937_64 rng(123);
  for (int it = 0; it < 300; ++it) {
    std::string junk;
    const std::size_t len = rng() % 200;
    for (std::size_t i = 0; i < len; ++i) junk.push_back(static_cast<char>(rng() & 0xFF));
    try {
      read_agdt_xml(junk);
    } catch (const Error&) {
      // structured failure is fine
    }
  }
  // and on hostile but structured inputs
  for (const char* bad : {"<", "<a", "<a b=", "<a b=\"x", "</a>", "<a b=\"&bogus;\"/>",
                          "<sentence>", "<a><b></a></b>", "<!DOCTYPE", "<!--"}) {
    CHECK_THROWS_AS(read_agdt_xml(bad), Error);
  }
}

TEST_CASE("agdt xml: token count is preserved through conllu") {
  const auto result = read_agdt_xml(kSmallXml);
  const auto back = read_conllu(write_conllu(result.sentences));
  REQUIRE(back.size() == result.sentences.size());
  CHECK(back[0].size() == 2);  // number of word elements in the fixture
  CHECK(back[0] == result.sentences[0]);
}

TEST_CASE("conllu: three-token round trip is the identity") {
  Sentence s;
  s.sentence_id = "42";
  s.provenance = "doc";
  for (int i = 1; i <= 3; ++i) {
    Token t;
    t.id = i;
    t.form = "φ" + std::to_string(i);
    t.lemma = "λ" + std::to_string(i);
    t.postag = i == 1 ? "v3spia---" : "n-s---fn-";
    t.head = i == 2 ? 0 : 2;
    t.relation = i == 2 ? "PRED" : "SBJ";
    t.elliptical = i == 3;
    s.tokens.push_back(t);
  }
  const auto read_back = read_conllu(write_conllu({s}));
  REQUIRE(read_back.size() == 1);
  CHECK(read_back[0] == s);
}

TEST_CASE("conllu: feats reconstruct the postag when xpos is missing") {
  const std::string text =
      "1\tx\tx\tn\t_\tcase=n|gender=f|number=s\t0\tPRED\t_\t_\n\n";
  const auto sentences = read_conllu(text);
  REQUIRE(sentences.size() == 1);
  CHECK(sentences[0].tokens[0].postag == "n-s---fn-");
}

TEST_CASE("conllu: a file without a trailing newline keeps its last sentence") {
  const std::string text =
      "1\tx\tx\tn\tn-s---fn-\tcase=n|gender=f|number=s\t0\tPRED\t_\t_\n\n"
      "1\ty\ty\tn\tn-s---fn-\tcase=n|gender=f|number=s\t0\tPRED\t_\t_";
  const auto sentences = read_conllu(text);
  REQUIRE(sentences.size() == 2);
  CHECK(sentences[1].tokens[0].form == "y");
}

TEST_CASE("conllu: multiword ranges are unsupported") {
  const std::string text = "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n";
  try {
    read_conllu(text);
    FAIL("expected Unsupported");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Unsupported);
  }
}

TEST_CASE("conllu: structural errors carry their kind") {
  try {
    read_conllu("1\tx\tx\tn\tn--------\t_\t0\tPRED\t_\n\n");
    FAIL("expected ColumnCount");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ColumnCount);
  }
  try {
    read_conllu("2\tx\tx\tn\tn--------\t_\t0\tPRED\t_\t_\n\n");
    FAIL("expected NonContiguousIds");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonContiguousIds);
  }
  try {
    read_conllu("1\tx\tx\tn\tn--------\t_\t0\tPRED\t_\t_\n\n\n1\ty\ty\tn\tn--------\t_\t0\tPRED\t_\t_\n");
    FAIL("expected BlankLineProtocol");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BlankLineProtocol);
  }
}

TEST_CASE("score matrices: spec fixtures") {
  const auto one = read_score_matrices("n=1\n0.0 -inf\n");
  REQUIRE(one.size() == 1);
  CHECK(one[0].n == 1);
  CHECK(one[0].at(1, 0) == 0.0);
  CHECK(one[0].at(1, 1) == -std::numeric_limits<double>::infinity());

  const auto two = read_score_matrices("n=2\n0 1 2\n3 4 5\n");
  REQUIRE(two.size() == 1);
  CHECK(two[0].at(2, 1) == 4.0);

  try {
    read_score_matrices("n=2\n0 1\n0 1 2\n");
    FAIL("expected RowLength");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RowLength);
  }
}

TEST_CASE("score matrices: finite values round-trip bit-exactly") {
  std::mt19937_64 rng(99);
  std::vector<ScoreMatrix> matrices;
  for (int m = 0; m < 10; ++m) {
    const int n = 1 + static_cast<int>(rng() % 5);
    ScoreMatrix mat = ScoreMatrix::zeros(n);
    for (int i = 1; i <= n; ++i)
      for (int h = 0; h <= n; ++h) {
        if (h == i || rng() % 7 == 0) {
          mat.at(i, h) = -std::numeric_limits<double>::infinity();
        } else {
          // full double mantissas, mixed magnitudes
          const double mant = static_cast<double>(rng()) / 1e3;
          mat.at(i, h) = (rng() % 2 ? mant : -mant) * std::pow(10.0, static_cast<double>(rng() % 7) - 3.0);
        }
      }
    matrices.push_back(mat);
  }
  const auto round = read_score_matrices(write_score_matrices(matrices));
  REQUIRE(round.size() == matrices.size());
  for (std::size_t m = 0; m < matrices.size(); ++m) {
    CHECK(round[m].n == matrices[m].n);
    for (std::size_t k = 0; k < matrices[m].scores.size(); ++k)
      CHECK(round[m].scores[k] == matrices[m].scores[k]);
  }
}

TEST_CASE("catalog: signed ISO-style ranges") {
  // U+2212 minus signs, as printed sources use them
  const auto rows = read_catalog(
      "tlg0003.tlg001\tThucydides\tHistory of the Peloponnesian War\t\xE2\x88\x92"
      "0430-01/\xE2\x88\x92"
      "0410-12\t32344\n"
      "tlg0554.tlg001\tChariton\tDe Chaerea et Callirhoe\t+0075-01/+0125-12\t6265\tromance\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].date_start == YearMonth{-430, 1});
  CHECK(rows[0].date_end == YearMonth{-410, 12});
  CHECK(rows[0].genre.empty());
  CHECK(rows[1].date_start == YearMonth{75, 1});
  CHECK(rows[1].date_end == YearMonth{125, 12});
  CHECK(rows[1].token_count == 6265);
  CHECK(rows[1].genre == "romance");
}

TEST_CASE("catalog: inverted range is rejected") {
  try {
    read_catalog("u\ta\tt\t\xE2\x88\x92"
                 "0410-12/\xE2\x88\x92"
                 "0430-01\t5\n");
    FAIL("expected RangeOrder");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RangeOrder);
  }
}

TEST_CASE("catalog: malformed dates are rejected") {
  for (const char* bad : {"u\ta\tt\t-430-01/-410-12\t5\n",      // three-digit year
                          "u\ta\tt\t-0430-13/-0410-12\t5\n",     // bad month
                          "u\ta\tt\t-0430-01\t5\n"}) {           // no slash
    try {
      read_catalog(bad);
      FAIL("expected DateSyntax");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DateSyntax);
    }
  }
}

TEST_CASE("century_of follows the no-year-zero convention") {
  CHECK(century_of(75) == 1);
  CHECK(century_of(100) == 1);
  CHECK(century_of(101) == 2);
  CHECK(century_of(-430) == -5);
  CHECK(century_of(-500) == -5);
  CHECK(century_of(-501) == -6);
}
