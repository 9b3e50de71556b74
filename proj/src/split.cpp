#include "agtb/split.hpp"

#include <map>
#include <random>
#include <sstream>

#include "agtb/conllu.hpp"
#include "agtb/error.hpp"

namespace agtb {

namespace {

constexpr int kFolds = 5;
constexpr int kRepetitions = 2;

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

RunManifest make_splits(const std::vector<Sentence>& corpus, std::uint64_t seed) {
  const std::size_t n = corpus.size();
  if (n < 10)
    fail(ErrorKind::TooFewSentences,
         "need at least 10 sentences, got " + std::to_string(n));

  std::vector<std::string> ids;
  ids.reserve(n);
  std::map<std::string_view, int> seen;
  for (const Sentence& s : corpus) {
    if (s.sentence_id.empty())
      fail(ErrorKind::DuplicateSentenceId, "sentence without id cannot be keyed in a manifest");
    if (s.sentence_id.find_first_of(" \t\n") != std::string::npos)
      fail(ErrorKind::DuplicateSentenceId,
           "sentence id contains whitespace: '" + s.sentence_id + "'");
    if (!seen.emplace(s.sentence_id, 1).second)
      fail(ErrorKind::DuplicateSentenceId, "duplicate sentence id '" + s.sentence_id + "'");
    ids.push_back(s.sentence_id);
  }

  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(ids[i], ids[j]);
  }

  RunManifest m;
  m.seed = seed;
  const std::size_t test_size = n / 5;  // floor(0.2 n)
  m.test_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(test_size));

  const std::size_t rest = n - test_size;
  const std::size_t base = rest / kFolds;
  const std::size_t extra = rest % kFolds;
  std::size_t cursor = test_size;
  for (int f = 0; f < kFolds; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    m.folds[static_cast<std::size_t>(f)].assign(
        ids.begin() + static_cast<std::ptrdiff_t>(cursor),
        ids.begin() + static_cast<std::ptrdiff_t>(cursor + size));
    cursor += size;
  }

  for (int r = 0; r < kFolds * kRepetitions; ++r) {
    RunSpec run;
    run.run_index = r;
    run.fold = r % kFolds;
    run.repetition = r / kFolds;
    run.train_seed = seed ^ static_cast<std::uint64_t>(r);
    m.runs.push_back(run);
  }
  return m;
}

SplitFiles materialize_split(const std::vector<Sentence>& corpus, const RunManifest& manifest, int run) {
  if (run < 0 || run >= static_cast<int>(manifest.runs.size()))
    fail(ErrorKind::InvalidArgument, "run index out of range: " + std::to_string(run));
  std::map<std::string_view, const Sentence*> by_id;
  for (const Sentence& s : corpus) by_id[s.sentence_id] = &s;

  const auto pick = [&](const std::vector<std::string>& keys, std::vector<Sentence>& out) {
    for (const std::string& id : keys) {
      const auto it = by_id.find(id);
      if (it == by_id.end())
        fail(ErrorKind::IdMismatch, "manifest id '" + id + "' not present in the corpus");
      out.push_back(*it->second);
    }
  };

  const int fold = manifest.runs[static_cast<std::size_t>(run)].fold;
  std::vector<Sentence> train, validation, test;
  for (int f = 0; f < kFolds; ++f) {
    if (f == fold) continue;
    pick(manifest.folds[static_cast<std::size_t>(f)], train);
  }
  pick(manifest.folds[static_cast<std::size_t>(fold)], validation);
  pick(manifest.test_ids, test);

  return {write_conllu(train), write_conllu(validation), write_conllu(test)};
}

std::string write_manifest(const RunManifest& m) {
  std::ostringstream os;
  os << "seed = " << m.seed << "\n";
  os << "test =";
  for (const std::string& id : m.test_ids) os << " " << id;
  os << "\n";
  for (int f = 0; f < kFolds; ++f) {
    os << "fold." << f << " =";
    for (const std::string& id : m.folds[static_cast<std::size_t>(f)]) os << " " << id;
    os << "\n";
  }
  for (const RunSpec& r : m.runs)
    os << "run." << r.run_index << " = fold=" << r.fold << " rep=" << r.repetition
       << " seed=" << r.train_seed << "\n";
  return os.str();
}

RunManifest read_manifest(std::string_view text) {
  RunManifest m;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool saw_seed = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::FieldSyntax, "manifest line " + std::to_string(line_no) + ": expected key = value");
    auto strip = [](std::string_view v) {
      while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
      while (!v.empty() && (v.back() == ' ' || v.back() == '\t' || v.back() == '\r')) v.remove_suffix(1);
      return v;
    };
    const std::string key(strip(line.substr(0, eq)));
    const std::string value(strip(line.substr(eq + 1)));
    try {
    if (key == "seed") {
      m.seed = std::stoull(value);
      saw_seed = true;
    } else if (key == "test") {
      m.test_ids = split_ws(value);
    } else if (key.rfind("fold.", 0) == 0) {
      const int f = std::stoi(key.substr(5));
      if (f < 0 || f >= kFolds)
        fail(ErrorKind::FieldSyntax, "manifest line " + std::to_string(line_no) + ": bad fold index");
      m.folds[static_cast<std::size_t>(f)] = split_ws(value);
    } else if (key.rfind("run.", 0) == 0) {
      RunSpec run;
      run.run_index = std::stoi(key.substr(4));
      for (const std::string& field : split_ws(value)) {
        if (field.rfind("fold=", 0) == 0) run.fold = std::stoi(field.substr(5));
        else if (field.rfind("rep=", 0) == 0) run.repetition = std::stoi(field.substr(4));
        else if (field.rfind("seed=", 0) == 0) run.train_seed = std::stoull(field.substr(5));
        else fail(ErrorKind::FieldSyntax, "manifest line " + std::to_string(line_no) + ": bad run field '" + field + "'");
      }
      m.runs.push_back(run);
    } else {
      fail(ErrorKind::FieldSyntax, "manifest line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(ErrorKind::FieldSyntax, "manifest line " + std::to_string(line_no) + ": bad numeric value");
    }
  }
  if (!saw_seed) fail(ErrorKind::FieldSyntax, "manifest is missing the seed");
  if (m.runs.size() != static_cast<std::size_t>(kFolds * kRepetitions))
    fail(ErrorKind::FieldSyntax, "manifest must list exactly 10 runs");
  return m;
}

}  // namespace agtb
