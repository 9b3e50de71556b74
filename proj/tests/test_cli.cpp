#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "agtb/conllu.hpp"
#include "agtb/split.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

// Runs the built binary with stdout captured to a file; stderr is shared.
RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out_path = dir / "stdout.txt";
  const std::string cmd = std::string(AGTB_CLI_PATH) + " " + args + " > " + out_path.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  r.out = buf.str();
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("agtb-test-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

const char* kXmlFixture =
    "<treebank>"
    "<sentence id=\"1\" document_id=\"doc-a\">"
    "<word id=\"1\" form=\"\xCE\xB4\xE2\x80\x99\" lemma=\"\xCE\xB4\xCE\xAD\" postag=\"d--------\" head=\"2\" relation=\"AuxZ_CO\"/>"
    "<word id=\"2\" form=\"x\" lemma=\"x\" postag=\"v3spia---\" head=\"0\" relation=\"PRED\"/>"
    "</sentence>"
    "</treebank>";

}  // namespace

TEST_CASE("cli: normalize then re-normalize is a zero-change run") {
  TempDir tmp;
  spit(tmp.path / "in.xml", kXmlFixture);
  const auto first = run_cli("normalize --out-dir " + (tmp.path / "out1").string() + " " +
                                 (tmp.path / "in.xml").string(),
                             tmp.path);
  REQUIRE(first.exit_code == 0);
  CHECK(first.out.find("apostrophes_changed = 1") != std::string::npos);
  CHECK(first.out.find("suffixes_stripped = 1") != std::string::npos);

  const auto second = run_cli("normalize --out-dir " + (tmp.path / "out2").string() + " " +
                                  (tmp.path / "out1" / "in.conllu").string(),
                              tmp.path);
  REQUIRE(second.exit_code == 0);
  CHECK(second.out.find("apostrophes_changed = 0") != std::string::npos);
  CHECK(second.out.find("suffixes_stripped = 0") != std::string::npos);
  CHECK(slurp(tmp.path / "out1" / "in.conllu") == slurp(tmp.path / "out2" / "in.conllu"));
}

TEST_CASE("cli: normalize with --jobs matches the serial output") {
  TempDir tmp;
  spit(tmp.path / "a.xml", kXmlFixture);
  spit(tmp.path / "b.xml", kXmlFixture);
  const std::string inputs = (tmp.path / "a.xml").string() + " " + (tmp.path / "b.xml").string();
  REQUIRE(run_cli("normalize --out-dir " + (tmp.path / "serial").string() + " " + inputs, tmp.path)
              .exit_code == 0);
  REQUIRE(run_cli("normalize --jobs 2 --out-dir " + (tmp.path / "par").string() + " " + inputs,
                  tmp.path)
              .exit_code == 0);
  CHECK(slurp(tmp.path / "serial" / "a.conllu") == slurp(tmp.path / "par" / "a.conllu"));
  CHECK(slurp(tmp.path / "serial" / "b.conllu") == slurp(tmp.path / "par" / "b.conllu"));
}

TEST_CASE("cli: malformed xml exits 2 with a line diagnostic") {
  TempDir tmp;
  spit(tmp.path / "bad.xml", "<treebank>\n<sentence id=\"1\">\n<word id=\"1\"\n");
  const auto r = run_cli("normalize --out-dir " + (tmp.path / "out").string() + " " +
                             (tmp.path / "bad.xml").string() + " 2> " +
                             (tmp.path / "stderr.txt").string(),
                         tmp.path);
  CHECK(r.exit_code == 2);
  const std::string err = slurp(tmp.path / "stderr.txt");
  CHECK(err.find("bad.xml") != std::string::npos);
  CHECK(err.find("line") != std::string::npos);
}

TEST_CASE("cli: stats counts tokens and joins the catalog") {
  TempDir tmp;
  spit(tmp.path / "in.xml", kXmlFixture);
  spit(tmp.path / "catalog.tsv", "doc-a\tHomer\tIliad\t\xE2\x88\x92"
                                 "0799-01/\xE2\x88\x92"
                                 "0700-12\t2\tpoem\n");
  const auto r = run_cli("stats --catalog " + (tmp.path / "catalog.tsv").string() + " " +
                             (tmp.path / "in.xml").string(),
                         tmp.path);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("total = 2") != std::string::npos);
  CHECK(r.out.find("document doc-a = 2") != std::string::npos);
  CHECK(r.out.find("author Homer = 2") != std::string::npos);
  CHECK(r.out.find("genre poem = 2") != std::string::npos);
  CHECK(r.out.find("century -8 = 2") != std::string::npos);
}

TEST_CASE("cli: split writes a manifest and ten byte-stable runs") {
  TempDir tmp;
  std::string conllu;
  for (int i = 0; i < 12; ++i) {
    conllu += "# sent_id = s" + std::to_string(i) + "\n";
    conllu += "1\tw\tw\td\td--------\t_\t0\tPRED\t_\t_\n\n";
  }
  spit(tmp.path / "corpus.conllu", conllu);
  const std::string base = (tmp.path / "splits").string();
  REQUIRE(run_cli("split --seed 7 --out-dir " + base + " " + (tmp.path / "corpus.conllu").string(),
                  tmp.path)
              .exit_code == 0);
  REQUIRE(run_cli("split --seed 7 --out-dir " + base + "2 " + (tmp.path / "corpus.conllu").string(),
                  tmp.path)
              .exit_code == 0);
  CHECK(slurp(base + "/manifest.txt") == slurp(base + "2/manifest.txt"));
  for (int run = 0; run < 10; ++run) {
    const std::string dir = base + "/run" + std::to_string(run);
    CHECK(slurp(dir + "/test.conllu") == slurp(base + "/run0/test.conllu"));
    CHECK(slurp(dir + "/train.conllu") ==
          slurp(base + "2/run" + std::to_string(run) + "/train.conllu"));
  }
  const auto manifest = agtb::read_manifest(slurp(base + "/manifest.txt"));
  CHECK(manifest.seed == 7);
  CHECK(manifest.test_ids.size() == 2);
}

TEST_CASE("cli: decode fills heads from a score file") {
  TempDir tmp;
  spit(tmp.path / "skeleton.conllu",
       "# sent_id = s\n"
       "1\ta\ta\td\td--------\t_\t0\tX\t_\t_\n"
       "2\tb\tb\td\td--------\t_\t0\tY\t_\t_\n\n");
  spit(tmp.path / "scores.txt", "n=2\n1.0 -inf 3.0\n2.0 2.5 -inf\n");
  const fs::path out = tmp.path / "decoded.conllu";
  REQUIRE(run_cli("decode --scores " + (tmp.path / "scores.txt").string() + " --skeleton " +
                      (tmp.path / "skeleton.conllu").string() + " --out " + out.string(),
                  tmp.path)
              .exit_code == 0);
  const auto decoded = agtb::read_conllu(slurp(out));
  REQUIRE(decoded.size() == 1);
  CHECK(decoded[0].tokens[0].head == 2);
  CHECK(decoded[0].tokens[1].head == 0);
}

TEST_CASE("cli: eval prints the seven metrics and strict mode rejects cycles") {
  TempDir tmp;
  const std::string gold =
      "# sent_id = s\n"
      "1\ta\ta\tv\tv3spia---\tmood=i|number=s|person=3|tense=p|voice=a\t2\tX\t_\t_\n"
      "2\tb\tb\tv\tv3spia---\tmood=i|number=s|person=3|tense=p|voice=a\t0\tPRED\t_\t_\n"
      "3\tc\tc\tv\tv3spia---\tmood=i|number=s|person=3|tense=p|voice=a\t2\tY\t_\t_\n\n";
  spit(tmp.path / "gold.conllu", gold);
  std::string system = gold;
  const std::size_t last = system.rfind("\t2\tY");
  system.replace(last, 4, "\t1\tY");
  spit(tmp.path / "system.conllu", system);

  const auto r = run_cli("eval --gold " + (tmp.path / "gold.conllu").string() + " --system " +
                             (tmp.path / "system.conllu").string() + " --report " +
                             (tmp.path / "report.txt").string(),
                         tmp.path);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("UAS\t66.67") != std::string::npos);
  CHECK(r.out.find("LAS\t66.67") != std::string::npos);
  CHECK(r.out.find("POS\t100.00") != std::string::npos);
  const std::string report = slurp(tmp.path / "report.txt");
  CHECK(report.find("UAS\t66.67") != std::string::npos);
  CHECK(report.find("tokens\t3") != std::string::npos);

  // two root children: strict mode refuses
  std::string multi = gold;
  multi.replace(multi.find("\t2\tX"), 4, "\t0\tX");
  spit(tmp.path / "multi.conllu", multi);
  const auto strict = run_cli("eval --gold " + (tmp.path / "gold.conllu").string() + " --system " +
                                  (tmp.path / "multi.conllu").string() + " 2> /dev/null",
                              tmp.path);
  CHECK(strict.exit_code == 2);
  const auto permissive = run_cli("eval --permissive --gold " + (tmp.path / "gold.conllu").string() +
                                      " --system " + (tmp.path / "multi.conllu").string(),
                                  tmp.path);
  CHECK(permissive.exit_code == 0);
}

TEST_CASE("cli: report renders mean (SD) rows; compare renders the pair table") {
  TempDir tmp;
  std::string scores = "alpha";
  for (int i = 0; i < 10; ++i) scores += "\t96.18";
  scores += "\nbeta";
  for (int i = 0; i < 10; ++i) scores += "\t" + std::to_string(90.0 + i * 0.1);
  scores += "\n";
  spit(tmp.path / "scores.tsv", scores);

  const auto report = run_cli("report --scores " + (tmp.path / "scores.tsv").string(), tmp.path);
  REQUIRE(report.exit_code == 0);
  CHECK(report.out.find("alpha\t96.18 (0.00)") != std::string::npos);

  const auto compare = run_cli("compare --scores " + (tmp.path / "scores.tsv").string() +
                                   " --grid-dir " + (tmp.path / "grids").string(),
                               tmp.path);
  REQUIRE(compare.exit_code == 0);
  CHECK(compare.out.find("alpha-beta") != std::string::npos);
  CHECK(fs::exists(tmp.path / "grids" / "alpha-beta.csv"));
  const std::string csv = slurp(tmp.path / "grids" / "alpha-beta.csv");
  CHECK(csv.rfind("delta,density\n", 0) == 0);
}

TEST_CASE("cli: train-mini writes model, loss trace, annotations, and scores") {
  TempDir tmp;
  spit(tmp.path / "mini.cfg",
       "char_embed_dim = 4\nchar_rnn_dim = 6\ntoken_rnn_dim = 6\narc_dim = 4\n"
       "max_lemma_len = 4\nlearning_rate = 0.05\nseed = 3\nepochs = 2\n");
  const std::string corpus =
      "# sent_id = a\n"
      "1\tab\tab\tn\tn-s---fn-\tcase=n|gender=f|number=s\t2\tSBJ\t_\t_\n"
      "2\tcd\tcd\tv\tv3spia---\tmood=i|number=s|person=3|tense=p|voice=a\t0\tPRED\t_\t_\n\n"
      "# sent_id = b\n"
      "1\tba\tba\tv\tv3spia---\tmood=i|number=s|person=3|tense=p|voice=a\t0\tPRED\t_\t_\n\n";
  spit(tmp.path / "corpus.conllu", corpus);
  const auto r = run_cli(
      "train-mini --corpus " + (tmp.path / "corpus.conllu").string() + " --config " +
          (tmp.path / "mini.cfg").string() + " --model-out " + (tmp.path / "model.bin").string() +
          " --loss-out " + (tmp.path / "loss.csv").string() + " --annotate-out " +
          (tmp.path / "annotated.conllu").string() + " --scores-out " +
          (tmp.path / "scores.txt").string() + " 2> /dev/null",
      tmp.path);
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(tmp.path / "loss.csv").rfind("epoch,loss\n", 0) == 0);
  const auto annotated = agtb::read_conllu(slurp(tmp.path / "annotated.conllu"));
  REQUIRE(annotated.size() == 2);
  CHECK(annotated[0].size() == 2);
  const std::string model = slurp(tmp.path / "model.bin");
  CHECK(model.rfind("AGTBDMX1", 0) == 0);
  CHECK(slurp(tmp.path / "scores.txt").rfind("n=2", 0) == 0);
}

TEST_CASE("cli: usage errors exit 1") {
  TempDir tmp;
  CHECK(run_cli("no-such-command 2> /dev/null", tmp.path).exit_code == 1);
  CHECK(run_cli("eval 2> /dev/null", tmp.path).exit_code == 1);
}
