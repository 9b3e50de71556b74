#include "agtb/conllu.hpp"

#include <sstream>

#include "agtb/error.hpp"

namespace agtb {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  long v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
    if (v > 1'000'000'000L) return false;
  }
  out = static_cast<int>(v);
  return true;
}

Feats parse_feats(std::string_view field, std::size_t line_no) {
  Feats feats;
  if (field == "_") return feats;
  std::size_t start = 0;
  while (start <= field.size()) {
    std::size_t bar = field.find('|', start);
    if (bar == std::string_view::npos) bar = field.size();
    const std::string_view item = field.substr(start, bar - start);
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 >= item.size())
      fail(ErrorKind::FieldSyntax, "line " + std::to_string(line_no) + ": bad FEATS item '" + std::string(item) + "'");
    feats.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    if (bar == field.size()) break;
    start = bar + 1;
  }
  return feats;
}

std::string render_feats(const Feats& feats) {
  if (feats.empty()) return "_";
  std::string out;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    if (i) out += '|';
    out += feats[i].first;
    out += '=';
    out += feats[i].second;
  }
  return out;
}

bool misc_has_ellipsis(std::string_view misc) {
  std::size_t start = 0;
  while (start <= misc.size()) {
    std::size_t bar = misc.find('|', start);
    if (bar == std::string_view::npos) bar = misc.size();
    if (misc.substr(start, bar - start) == "Ellipsis=Yes") return true;
    if (bar == misc.size()) break;
    start = bar + 1;
  }
  return false;
}

void finish_sentence(std::vector<Sentence>& out, Sentence& current, bool& in_sentence, std::size_t line_no) {
  if (current.tokens.empty())
    fail(ErrorKind::EmptySentence, "line " + std::to_string(line_no) + ": sentence without tokens");
  out.push_back(std::move(current));
  current = Sentence{};
  in_sentence = false;
}

}  // namespace

std::vector<Sentence> read_conllu(std::string_view bytes) {
  std::vector<Sentence> out;
  Sentence current;
  bool in_sentence = false;  // token or comment lines seen for the pending sentence
  bool prev_blank = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    std::string_view line = bytes.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;

    if (line.empty()) {
      if (in_sentence) {
        finish_sentence(out, current, in_sentence, line_no);
        prev_blank = true;
      } else if (prev_blank || out.empty()) {
        fail(ErrorKind::BlankLineProtocol,
             "line " + std::to_string(line_no) + ": unexpected blank line");
      }
      continue;
    }
    prev_blank = false;

    if (line[0] == '#') {
      if (in_sentence && !current.tokens.empty())
        fail(ErrorKind::BlankLineProtocol,
             "line " + std::to_string(line_no) + ": comment after token lines");
      in_sentence = true;
      std::string_view body = line.substr(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      if (body.rfind("sent_id = ", 0) == 0) current.sentence_id = std::string(body.substr(10));
      else if (body.rfind("doc_id = ", 0) == 0) current.provenance = std::string(body.substr(9));
      continue;
    }

    const auto cols = split_tabs(line);
    if (cols.size() != 10)
      fail(ErrorKind::ColumnCount, "line " + std::to_string(line_no) + ": expected 10 columns, got " +
                                       std::to_string(cols.size()));
    if (cols[0].find('-') != std::string_view::npos)
      fail(ErrorKind::Unsupported, "line " + std::to_string(line_no) + ": multiword-token ranges are unsupported");
    if (cols[0].find('.') != std::string_view::npos)
      fail(ErrorKind::Unsupported, "line " + std::to_string(line_no) + ": empty nodes are unsupported");

    Token t;
    if (!parse_int(cols[0], t.id) || t.id < 1)
      fail(ErrorKind::FieldSyntax, "line " + std::to_string(line_no) + ": bad ID '" + std::string(cols[0]) + "'");
    if (t.id != static_cast<int>(current.tokens.size()) + 1)
      fail(ErrorKind::NonContiguousIds,
           "line " + std::to_string(line_no) + ": expected id " +
               std::to_string(current.tokens.size() + 1) + ", got " + std::to_string(t.id));
    t.form = std::string(cols[1]);
    t.lemma = cols[2] == "_" ? std::string() : std::string(cols[2]);
    if (cols[4] != "_" && cols[4].size() == kPostagLen) {
      t.postag = std::string(cols[4]);
    } else {
      const char pos_char = cols[3] == "_" || cols[3].empty() ? '-' : cols[3][0];
      t.postag = feats_to_postag(pos_char, parse_feats(cols[5], line_no));
    }
    if (!parse_int(cols[6], t.head))
      fail(ErrorKind::NonNumeric, "line " + std::to_string(line_no) + ": bad HEAD '" + std::string(cols[6]) + "'");
    t.relation = std::string(cols[7]);
    t.elliptical = misc_has_ellipsis(cols[9]);
    in_sentence = true;
    current.tokens.push_back(std::move(t));
  }
  if (in_sentence) {
    if (current.tokens.empty())
      fail(ErrorKind::EmptySentence, "line " + std::to_string(line_no) + ": sentence without tokens");
    out.push_back(std::move(current));
  }
  return out;
}

std::string write_conllu(const Sentence& s) {
  std::ostringstream os;
  if (!s.sentence_id.empty()) os << "# sent_id = " << s.sentence_id << "\n";
  if (!s.provenance.empty()) os << "# doc_id = " << s.provenance << "\n";
  for (const Token& t : s.tokens) {
    const std::string upos = t.postag.empty() ? "_" : std::string(1, t.postag[0]);
    os << t.id << '\t' << t.form << '\t' << (t.lemma.empty() ? "_" : t.lemma) << '\t' << upos << '\t'
       << t.postag << '\t' << render_feats(postag_to_feats(t.postag)) << '\t' << t.head << '\t'
       << t.relation << '\t' << '_' << '\t' << (t.elliptical ? "Ellipsis=Yes" : "_") << '\n';
  }
  os << '\n';
  return os.str();
}

std::string write_conllu(const std::vector<Sentence>& sentences) {
  std::string out;
  for (const Sentence& s : sentences) out += write_conllu(s);
  return out;
}

}  // namespace agtb
