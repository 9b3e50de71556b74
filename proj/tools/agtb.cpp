#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "agtb/agdt_xml.hpp"
#include "agtb/bayes.hpp"
#include "agtb/catalog.hpp"
#include "agtb/conllu.hpp"
#include "agtb/dithrax.hpp"
#include "agtb/error.hpp"
#include "agtb/eval.hpp"
#include "agtb/mst.hpp"
#include "agtb/normalize.hpp"
#include "agtb/score_matrix.hpp"
#include "agtb/split.hpp"
#include "agtb/stats.hpp"

namespace fs = std::filesystem;
using namespace agtb;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes via a sibling temp file and renames into place.
void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

bool is_xml_path(const fs::path& path) {
  return path.extension() == ".xml" || path.extension() == ".XML";
}

std::vector<Sentence> read_corpus_file(const fs::path& path, std::vector<std::string>* warnings) {
  const std::string bytes = read_file(path);
  if (is_xml_path(path)) {
    auto result = read_agdt_xml(bytes);
    if (warnings)
      for (std::string& w : result.warnings) warnings->push_back(path.string() + ": " + w);
    return std::move(result.sentences);
  }
  return read_conllu(bytes);
}

// Re-raises parse errors with the file name prepended.
std::vector<Sentence> read_corpus_file_diagnosed(const fs::path& path,
                                                 std::vector<std::string>* warnings) {
  try {
    return read_corpus_file(path, warnings);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= count) return;
          body(i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (std::thread& t : workers) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

MiniConfig parse_mini_config(std::string_view text) {
  MiniConfig cfg;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string line(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    const auto trim = [](std::string& s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    };
    trim(line);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    trim(key);
    trim(value);
    try {
      if (key == "char_embed_dim") cfg.char_embed_dim = std::stoi(value);
      else if (key == "char_rnn_dim") cfg.char_rnn_dim = std::stoi(value);
      else if (key == "token_rnn_dim") cfg.token_rnn_dim = std::stoi(value);
      else if (key == "arc_dim") cfg.arc_dim = std::stoi(value);
      else if (key == "max_lemma_len") cfg.max_lemma_len = std::stoi(value);
      else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "epochs") cfg.epochs = std::stoi(value);
      else fail(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": bad value '" + value + "'");
    }
  }
  if (cfg.char_embed_dim < 1 || cfg.char_rnn_dim < 1 || cfg.token_rnn_dim < 1 || cfg.arc_dim < 1 ||
      cfg.max_lemma_len < 1 || cfg.epochs < 0 || cfg.learning_rate < 0)
    fail(ErrorKind::InvalidConfig, "mini-model dimensions must be positive");
  return cfg;
}

struct NormalizeArgs {
  std::vector<std::string> inputs;
  std::string config_path;
  std::string out_dir;
  std::string report_path;
  int jobs = 1;
};

int cmd_normalize(const NormalizeArgs& args) {
  const NormalizationConfig config = args.config_path.empty()
                                         ? NormalizationConfig::defaults()
                                         : NormalizationConfig::from_text(read_file(args.config_path));
  fs::create_directories(args.out_dir);
  std::vector<NormalizationReport> reports(args.inputs.size());
  std::vector<std::vector<std::string>> warnings(args.inputs.size());

  parallel_for(args.inputs.size(), args.jobs, [&](std::size_t i) {
    const fs::path in_path = args.inputs[i];
    auto sentences = read_corpus_file_diagnosed(in_path, &warnings[i]);
    NormalizationReport report;
    for (Sentence& s : sentences) report += normalize_pipeline(s, config);
    const fs::path out_path = fs::path(args.out_dir) / (in_path.stem().string() + ".conllu");
    write_file_atomic(out_path, write_conllu(sentences));
    reports[i] = report;
  });

  NormalizationReport total;
  for (const auto& r : reports) total += r;
  for (const auto& per_file : warnings)
    for (const std::string& w : per_file) std::cerr << "warning: " << w << "\n";
  const std::string rendered = render_report(total);
  if (args.report_path.empty()) std::cout << rendered;
  else write_file_atomic(args.report_path, rendered);
  return kExitOk;
}

struct StatsArgs {
  std::vector<std::string> inputs;
  std::string catalog_path;
};

int cmd_stats(const StatsArgs& args) {
  std::vector<Sentence> corpus;
  std::vector<std::string> warnings;
  for (const std::string& input : args.inputs) {
    auto sentences = read_corpus_file_diagnosed(input, &warnings);
    // fall back to the file stem when sentences carry no provenance
    const std::string stem = fs::path(input).stem().string();
    for (Sentence& s : sentences) {
      if (s.provenance.empty()) s.provenance = stem;
      corpus.push_back(std::move(s));
    }
  }
  std::vector<DocumentMeta> catalog;
  if (!args.catalog_path.empty()) catalog = read_catalog(read_file(args.catalog_path));
  const StatsReport report = corpus_stats(corpus, catalog);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << render_stats(report);
  return kExitOk;
}

struct SplitArgs {
  std::vector<std::string> inputs;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string manifest_path;
};

int cmd_split(const SplitArgs& args) {
  std::vector<Sentence> corpus;
  for (const std::string& input : args.inputs) {
    auto sentences = read_corpus_file_diagnosed(input, nullptr);
    for (Sentence& s : sentences) corpus.push_back(std::move(s));
  }
  const RunManifest manifest = make_splits(corpus, args.seed);
  fs::create_directories(args.out_dir);
  const fs::path manifest_path = args.manifest_path.empty()
                                     ? fs::path(args.out_dir) / "manifest.txt"
                                     : fs::path(args.manifest_path);
  write_file_atomic(manifest_path, write_manifest(manifest));
  for (int run = 0; run < static_cast<int>(manifest.runs.size()); ++run) {
    const SplitFiles files = materialize_split(corpus, manifest, run);
    const fs::path run_dir = fs::path(args.out_dir) / ("run" + std::to_string(run));
    fs::create_directories(run_dir);
    write_file_atomic(run_dir / "train.conllu", files.train);
    write_file_atomic(run_dir / "val.conllu", files.validation);
    write_file_atomic(run_dir / "test.conllu", files.test);
  }
  return kExitOk;
}

struct DecodeArgs {
  std::string scores_path;
  std::string skeleton_path;
  std::string out_path;
  bool single_root = false;
  int jobs = 1;
};

int cmd_decode(const DecodeArgs& args) {
  const auto matrices = read_score_matrices(read_file(args.scores_path));
  auto sentences = read_conllu(read_file(args.skeleton_path));
  if (matrices.size() != sentences.size())
    fail(ErrorKind::LengthMismatch,
         "score file has " + std::to_string(matrices.size()) + " blocks but the skeleton has " +
             std::to_string(sentences.size()) + " sentences");
  parallel_for(sentences.size(), args.jobs, [&](std::size_t i) {
    if (matrices[i].n != sentences[i].size())
      fail(ErrorKind::LengthMismatch,
           "sentence " + std::to_string(i + 1) + ": matrix n=" + std::to_string(matrices[i].n) +
               " but the skeleton has " + std::to_string(sentences[i].size()) + " tokens");
    const DecodedTree tree = decode(matrices[i], args.single_root);
    for (int k = 0; k < sentences[i].size(); ++k)
      sentences[i].tokens[static_cast<std::size_t>(k)].head = tree.heads[static_cast<std::size_t>(k)];
  });
  write_file_atomic(args.out_path, write_conllu(sentences));
  return kExitOk;
}

struct EvalArgs {
  std::string gold_path;
  std::string system_path;
  std::string report_path;
  bool permissive = false;
};

int cmd_eval(const EvalArgs& args) {
  const auto gold = read_conllu(read_file(args.gold_path));
  const auto system = read_conllu(read_file(args.system_path));
  const EvalReport report =
      evaluate(gold, system, args.permissive ? EvalMode::Permissive : EvalMode::StrictTree);
  const std::string rendered = render_eval_report(report);
  std::cout << rendered;
  if (!args.report_path.empty())
    write_file_atomic(args.report_path,
                      rendered + "tokens\t" + std::to_string(report.token_total) + "\n");
  return kExitOk;
}

struct CompareArgs {
  std::string scores_path;
  double rope_lo = -1.0;
  double rope_hi = 1.0;
  double rho = 0.2;
  std::string grid_dir;
  int grid_points = 1001;
  double grid_span = 6.0;
};

int cmd_compare(const CompareArgs& args) {
  const auto vectors = read_score_vectors(read_file(args.scores_path));
  const auto pairs = compare_all_pairs(vectors, {args.rope_lo, args.rope_hi}, args.rho);
  std::cout << render_comparison_table(pairs);
  if (!args.grid_dir.empty()) {
    fs::create_directories(args.grid_dir);
    for (const PairComparison& pair : pairs) {
      if (pair.summary.degenerate) {
        std::cerr << "warning: " << pair.first << "-" << pair.second
                  << " has zero variance; no density grid written\n";
        continue;
      }
      std::ostringstream csv;
      csv << "delta,density\n";
      char buf[80];
      for (const auto& [delta, density] : posterior_grid(pair.summary, args.grid_points, args.grid_span)) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", delta, density);
        csv << buf;
      }
      write_file_atomic(fs::path(args.grid_dir) / (pair.first + "-" + pair.second + ".csv"), csv.str());
    }
  }
  return kExitOk;
}

struct TrainMiniArgs {
  std::string corpus_path;
  std::string config_path;
  std::string model_out;
  std::string loss_out;
  std::string annotate_path;
  std::string annotate_out;
  std::string scores_out;
};

int cmd_train_mini(const TrainMiniArgs& args) {
  const auto corpus = read_conllu(read_file(args.corpus_path));
  const MiniConfig config =
      args.config_path.empty() ? MiniConfig{} : parse_mini_config(read_file(args.config_path));
  std::vector<double> trace;
  const MiniModel model = train_mini(corpus, config, &trace);

  if (!args.model_out.empty()) write_file_atomic(args.model_out, model.serialize());
  if (!args.loss_out.empty()) {
    std::ostringstream csv;
    csv << "epoch,loss\n";
    char buf[64];
    for (std::size_t e = 0; e < trace.size(); ++e) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e, trace[e]);
      csv << buf;
    }
    write_file_atomic(args.loss_out, csv.str());
  }

  const std::string target_path = args.annotate_path.empty() ? args.corpus_path : args.annotate_path;
  if (!args.annotate_out.empty() || !args.scores_out.empty()) {
    const auto target = read_conllu(read_file(target_path));
    if (!args.annotate_out.empty()) {
      std::vector<Sentence> annotated;
      for (const Sentence& s : target) annotated.push_back(model.predict(s));
      write_file_atomic(args.annotate_out, write_conllu(annotated));
    }
    if (!args.scores_out.empty()) {
      std::vector<ScoreMatrix> matrices;
      for (const Sentence& s : target) matrices.push_back(model.arc_scores(s));
      write_file_atomic(args.scores_out, write_score_matrices(matrices));
    }
  }
  if (!trace.empty()) std::cerr << "final epoch loss: " << trace.back() << "\n";
  return kExitOk;
}

struct ReportArgs {
  std::string scores_path;
  double rope_lo = -1.0;
  double rope_hi = 1.0;
  double rho = 0.2;
};

int cmd_report(const ReportArgs& args) {
  const auto vectors = read_score_vectors(read_file(args.scores_path));
  for (const ScoreVector& v : vectors) {
    const auto [mean, sd] = mean_and_sd(v.scores);
    std::cout << v.model_name << "\t" << format_f1(mean) << " (" << format_f1(sd) << ")\n";
  }
  if (vectors.size() >= 2) {
    std::cout << "\n";
    std::cout << render_comparison_table(compare_all_pairs(vectors, {args.rope_lo, args.rope_hi}, args.rho));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treebank experiment toolkit: normalization, splits, decoding, scoring, comparison"};
  app.require_subcommand(1);

  NormalizeArgs normalize_args;
  auto* normalize = app.add_subcommand("normalize", "Normalize treebank files into CoNLL-U");
  normalize->add_option("inputs", normalize_args.inputs, "AGDT XML or CoNLL-U files")->required();
  normalize->add_option("--config", normalize_args.config_path, "normalization config file");
  normalize->add_option("--out-dir", normalize_args.out_dir, "output directory")->required();
  normalize->add_option("--report", normalize_args.report_path, "write the aggregate report here");
  normalize->add_option("--jobs", normalize_args.jobs, "parallel workers");

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "Token counts per document and corpus totals");
  stats->add_option("inputs", stats_args.inputs, "AGDT XML or CoNLL-U files")->required();
  stats->add_option("--catalog", stats_args.catalog_path, "document catalog TSV");

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Deterministic 60/20/20 + 5x2 cross-validation splits");
  split->add_option("inputs", split_args.inputs, "CoNLL-U files")->required();
  split->add_option("--seed", split_args.seed, "shuffle seed")->required();
  split->add_option("--out-dir", split_args.out_dir, "output directory")->required();
  split->add_option("--manifest", split_args.manifest_path, "manifest path (default <out-dir>/manifest.txt)");

  DecodeArgs decode_args;
  auto* decode_cmd = app.add_subcommand("decode", "Maximum spanning arborescence decoding");
  decode_cmd->add_option("--scores", decode_args.scores_path, "score-matrix file")->required();
  decode_cmd->add_option("--skeleton", decode_args.skeleton_path, "CoNLL-U skeleton")->required();
  decode_cmd->add_option("--out", decode_args.out_path, "output CoNLL-U")->required();
  decode_cmd->add_flag("--single-root", decode_args.single_root, "allow exactly one root child");
  decode_cmd->add_option("--jobs", decode_args.jobs, "parallel workers");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Seven-metric F1 scoring");
  eval_cmd->add_option("--gold", eval_args.gold_path, "gold CoNLL-U")->required();
  eval_cmd->add_option("--system", eval_args.system_path, "system CoNLL-U")->required();
  eval_cmd->add_option("--report", eval_args.report_path, "also write a key-value report file");
  eval_cmd->add_flag("--permissive", eval_args.permissive, "skip tree-validity checks");

  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare", "Bayesian correlated t-test over paired runs");
  compare->add_option("--scores", compare_args.scores_path, "score-vector file")->required();
  compare->add_option("--rope-lo", compare_args.rope_lo, "rope lower bound");
  compare->add_option("--rope-hi", compare_args.rope_hi, "rope upper bound");
  compare->add_option("--rho", compare_args.rho, "run correlation, default 1/folds");
  compare->add_option("--grid-dir", compare_args.grid_dir, "write per-pair (delta,density) CSVs here");
  compare->add_option("--grid-points", compare_args.grid_points, "grid resolution");
  compare->add_option("--grid-span", compare_args.grid_span, "grid half-width in scales");

  TrainMiniArgs train_args;
  auto* train = app.add_subcommand("train-mini", "Train the desk-scale parser");
  train->add_option("--corpus", train_args.corpus_path, "training CoNLL-U")->required();
  train->add_option("--config", train_args.config_path, "mini-model config file");
  train->add_option("--model-out", train_args.model_out, "write the trained model here");
  train->add_option("--loss-out", train_args.loss_out, "write the per-epoch loss CSV here");
  train->add_option("--annotate", train_args.annotate_path, "file to annotate (default: the corpus)");
  train->add_option("--annotate-out", train_args.annotate_out, "write predictions here");
  train->add_option("--scores-out", train_args.scores_out, "write arc score matrices here");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Mean (SD) rows plus pairwise posterior table");
  report->add_option("--scores", report_args.scores_path, "score-vector file")->required();
  report->add_option("--rope-lo", report_args.rope_lo, "rope lower bound");
  report->add_option("--rope-hi", report_args.rope_hi, "rope upper bound");
  report->add_option("--rho", report_args.rho, "run correlation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (normalize->parsed()) return cmd_normalize(normalize_args);
    if (stats->parsed()) return cmd_stats(stats_args);
    if (split->parsed()) return cmd_split(split_args);
    if (decode_cmd->parsed()) return cmd_decode(decode_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (compare->parsed()) return cmd_compare(compare_args);
    if (train->parsed()) return cmd_train_mini(train_args);
    if (report->parsed()) return cmd_report(report_args);
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
