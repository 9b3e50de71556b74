#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>

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

namespace py = pybind11;
using namespace agtb;

namespace {

ScoreMatrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  const int n = static_cast<int>(rows.size());
  if (n < 1) fail(ErrorKind::InvalidArgument, "empty score matrix");
  ScoreMatrix m = ScoreMatrix::zeros(n);
  for (int i = 1; i <= n; ++i) {
    if (rows[static_cast<std::size_t>(i - 1)].size() != static_cast<std::size_t>(n) + 1)
      fail(ErrorKind::RowLength, "row " + std::to_string(i) + " must have n+1 entries");
    for (int h = 0; h <= n; ++h)
      m.at(i, h) = rows[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(h)];
  }
  return m;
}

std::vector<std::vector<double>> rows_from_matrix(const ScoreMatrix& m) {
  std::vector<std::vector<double>> rows;
  for (int i = 1; i <= m.n; ++i) {
    std::vector<double> row;
    for (int h = 0; h <= m.n; ++h) row.push_back(m.at(i, h));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Treebank experiment toolkit: normalization, splits, MST decoding, CoNLL scoring, "
            "Bayesian model comparison, and a desk-scale neural parser";

  py::register_exception<Error>(m, "AgtbError");

  py::class_<Token>(m, "Token")
      .def(py::init<>())
      .def_readwrite("id", &Token::id)
      .def_readwrite("form", &Token::form)
      .def_readwrite("lemma", &Token::lemma)
      .def_readwrite("postag", &Token::postag)
      .def_readwrite("head", &Token::head)
      .def_readwrite("relation", &Token::relation)
      .def_readwrite("elliptical", &Token::elliptical)
      .def("__eq__", [](const Token& a, const Token& b) { return a == b; })
      .def("__repr__", [](const Token& t) {
        return "<Token " + std::to_string(t.id) + " '" + t.form + "' head=" + std::to_string(t.head) + ">";
      });

  py::class_<Sentence>(m, "Sentence")
      .def(py::init<>())
      .def_readwrite("sentence_id", &Sentence::sentence_id)
      .def_readwrite("provenance", &Sentence::provenance)
      .def_readwrite("tokens", &Sentence::tokens)
      .def("__len__", &Sentence::size)
      .def("__eq__", [](const Sentence& a, const Sentence& b) { return a == b; })
      .def("__repr__", [](const Sentence& s) {
        return "<Sentence '" + s.sentence_id + "' with " + std::to_string(s.size()) + " tokens>";
      });

  py::class_<TreeVerdict>(m, "TreeVerdict")
      .def_property_readonly("ok", &TreeVerdict::ok)
      .def_readonly("ids", &TreeVerdict::ids)
      .def("__repr__", [](const TreeVerdict& v) { return to_string(v); });

  m.def("validate_tree", &validate_tree, py::arg("sentence"), py::arg("single_root") = false);
  m.def("postag_to_feats", &postag_to_feats);
  m.def("feats_to_postag", &feats_to_postag);

  m.def("read_conllu", [](const std::string& text) { return read_conllu(text); });
  m.def("write_conllu",
        [](const std::vector<Sentence>& sentences) { return write_conllu(sentences); });
  m.def("read_agdt_xml", [](const py::bytes& data) {
    const auto result = read_agdt_xml(std::string(data));
    return py::make_tuple(result.sentences, result.warnings);
  });
  m.def("read_catalog", [](const std::string& text) {
    py::list out;
    for (const DocumentMeta& meta : read_catalog(text)) {
      py::dict d;
      d["cts_urn"] = meta.cts_urn;
      d["author"] = meta.author;
      d["title"] = meta.title;
      d["start"] = py::make_tuple(meta.date_start.year, meta.date_start.month);
      d["end"] = py::make_tuple(meta.date_end.year, meta.date_end.month);
      d["token_count"] = meta.token_count;
      d["genre"] = meta.genre;
      out.append(d);
    }
    return out;
  });

  py::class_<NormalizationConfig>(m, "NormalizationConfig")
      .def_static("defaults", &NormalizationConfig::defaults)
      .def_static("from_text", &NormalizationConfig::from_text)
      .def("to_text", &NormalizationConfig::to_text);

  py::class_<NormalizationReport>(m, "NormalizationReport")
      .def_readonly("apostrophes_changed", &NormalizationReport::apostrophes_changed)
      .def_readonly("suffixes_stripped", &NormalizationReport::suffixes_stripped)
      .def_readonly("tokens_split", &NormalizationReport::tokens_split)
      .def_readonly("ellipses_relocated", &NormalizationReport::ellipses_relocated)
      .def_readonly("cycles_repaired", &NormalizationReport::cycles_repaired)
      .def("__repr__", [](const NormalizationReport& r) { return render_report(r); });

  m.def(
      "normalize",
      [](Sentence sentence, const NormalizationConfig& config) {
        const NormalizationReport report = normalize_pipeline(sentence, config);
        return py::make_tuple(sentence, report);
      },
      py::arg("sentence"), py::arg("config") = NormalizationConfig::defaults(),
      "Runs the full normalization pipeline on a copy; returns (sentence, report)");

  py::class_<RunSpec>(m, "RunSpec")
      .def_readonly("run_index", &RunSpec::run_index)
      .def_readonly("fold", &RunSpec::fold)
      .def_readonly("repetition", &RunSpec::repetition)
      .def_readonly("train_seed", &RunSpec::train_seed);

  py::class_<RunManifest>(m, "RunManifest")
      .def_readonly("seed", &RunManifest::seed)
      .def_readonly("test_ids", &RunManifest::test_ids)
      .def_readonly("folds", &RunManifest::folds)
      .def_readonly("runs", &RunManifest::runs);

  m.def("make_splits", &make_splits, py::arg("corpus"), py::arg("seed"));
  m.def("materialize_split", [](const std::vector<Sentence>& corpus, const RunManifest& manifest, int run) {
    const SplitFiles files = materialize_split(corpus, manifest, run);
    return py::make_tuple(files.train, files.validation, files.test);
  });
  m.def("write_manifest", &write_manifest);
  m.def("read_manifest", [](const std::string& text) { return read_manifest(text); });

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("pos", &EvalReport::pos)
      .def_readonly("xpos", &EvalReport::xpos)
      .def_readonly("feats", &EvalReport::feats)
      .def_readonly("alltags", &EvalReport::alltags)
      .def_readonly("uas", &EvalReport::uas)
      .def_readonly("las", &EvalReport::las)
      .def_readonly("lemmas", &EvalReport::lemmas)
      .def_readonly("token_total", &EvalReport::token_total)
      .def("__repr__", [](const EvalReport& r) { return render_eval_report(r); });

  m.def(
      "evaluate",
      [](const std::vector<Sentence>& gold, const std::vector<Sentence>& system, bool strict) {
        return evaluate(gold, system, strict ? EvalMode::StrictTree : EvalMode::Permissive);
      },
      py::arg("gold"), py::arg("system"), py::arg("strict") = true);
  m.def("mean_and_sd", &mean_and_sd);
  m.def("format_f1", &format_f1);

  m.def(
      "decode",
      [](const std::vector<std::vector<double>>& rows, bool single_root) {
        const DecodedTree tree = decode(matrix_from_rows(rows), single_root);
        return py::make_tuple(tree.heads, tree.total_score);
      },
      py::arg("scores"), py::arg("single_root") = false,
      "Maximum spanning arborescence; scores[i][h] is the score of head h for dependent i+1");
  m.def(
      "brute_force_decode",
      [](const std::vector<std::vector<double>>& rows, bool single_root) {
        const DecodedTree tree = brute_force_decode(matrix_from_rows(rows), single_root);
        return py::make_tuple(tree.heads, tree.total_score);
      },
      py::arg("scores"), py::arg("single_root") = false);

  m.def("student_t_cdf", &student_t_cdf, py::arg("t"), py::arg("dof"));

  py::class_<PosteriorSummary>(m, "PosteriorSummary")
      .def_readonly("mean_diff", &PosteriorSummary::mean_diff)
      .def_readonly("scale", &PosteriorSummary::scale)
      .def_readonly("dof", &PosteriorSummary::dof)
      .def_readonly("rho", &PosteriorSummary::rho)
      .def_readonly("p_left", &PosteriorSummary::p_left)
      .def_readonly("p_rope", &PosteriorSummary::p_rope)
      .def_readonly("p_right", &PosteriorSummary::p_right)
      .def_readonly("degenerate", &PosteriorSummary::degenerate);

  m.def(
      "correlated_ttest",
      [](const std::vector<double>& x, const std::vector<double>& y,
         const std::pair<double, double>& rope, double rho) {
        return correlated_ttest({"x", x}, {"y", y}, {rope.first, rope.second}, rho);
      },
      py::arg("x"), py::arg("y"), py::arg("rope") = std::pair<double, double>(-1.0, 1.0),
      py::arg("rho") = 0.2);
  m.def(
      "posterior_grid",
      [](const PosteriorSummary& summary, int points, double span) {
        return posterior_grid(summary, points, span);
      },
      py::arg("summary"), py::arg("points") = 1001, py::arg("span") = 6.0);
  m.def(
      "compare_all_pairs",
      [](const std::vector<std::pair<std::string, std::vector<double>>>& models,
         const std::pair<double, double>& rope, double rho) {
        std::vector<ScoreVector> vectors;
        for (const auto& [name, scores] : models) vectors.push_back({name, scores});
        py::list out;
        for (const PairComparison& pair :
             compare_all_pairs(vectors, {rope.first, rope.second}, rho))
          out.append(py::make_tuple(pair.first, pair.second, pair.summary));
        return out;
      },
      py::arg("models"), py::arg("rope") = std::pair<double, double>(-1.0, 1.0),
      py::arg("rho") = 0.2);

  py::class_<MiniConfig>(m, "MiniConfig")
      .def(py::init<>())
      .def_readwrite("char_embed_dim", &MiniConfig::char_embed_dim)
      .def_readwrite("char_rnn_dim", &MiniConfig::char_rnn_dim)
      .def_readwrite("token_rnn_dim", &MiniConfig::token_rnn_dim)
      .def_readwrite("arc_dim", &MiniConfig::arc_dim)
      .def_readwrite("max_lemma_len", &MiniConfig::max_lemma_len)
      .def_readwrite("learning_rate", &MiniConfig::learning_rate)
      .def_readwrite("seed", &MiniConfig::seed)
      .def_readwrite("epochs", &MiniConfig::epochs);

  py::class_<MiniModel>(m, "MiniModel")
      .def("predict", &MiniModel::predict)
      .def("loss", &MiniModel::loss)
      .def("grad_check", &MiniModel::grad_check, py::arg("sentence"), py::arg("epsilon") = 1e-4)
      .def("arc_scores",
           [](const MiniModel& model, const Sentence& s) { return rows_from_matrix(model.arc_scores(s)); })
      .def("serialize", [](const MiniModel& model) { return py::bytes(model.serialize()); })
      .def_static("deserialize",
                  [](const py::bytes& data) { return MiniModel::deserialize(std::string(data)); });

  m.def(
      "train_mini",
      [](const std::vector<Sentence>& corpus, const MiniConfig& config) {
        std::vector<double> trace;
        MiniModel model = train_mini(corpus, config, &trace);
        return py::make_tuple(std::move(model), trace);
      },
      py::arg("corpus"), py::arg("config") = MiniConfig{},
      "Trains on the corpus; returns (model, per-epoch loss trace)");

  m.attr("NEG_INF") = -std::numeric_limits<double>::infinity();
}
