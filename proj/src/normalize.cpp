#include "agtb/normalize.hpp"

#include <algorithm>
#include <sstream>

#include "agtb/error.hpp"
#include "agtb/utf8.hpp"

namespace agtb {

namespace {

constexpr char32_t kModifierApostrophe = 0x02BC;

std::size_t replace_codepoint(std::string& text, const std::string& from, const std::string& to) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
    ++count;
  }
  return count;
}

std::vector<SplitComponent> parse_split_components(std::string_view rhs);

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_on(std::string_view s, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t hit = s.find(sep, start);
    if (hit == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, hit - start)));
    start = hit + sep.size();
  }
}

char32_t parse_codepoint(const std::string& token) {
  if (token.size() < 3 || (token.rfind("U+", 0) != 0 && token.rfind("u+", 0) != 0))
    fail(ErrorKind::InvalidConfig, "apostrophe_sources entries must look like U+02BC, got '" + token + "'");
  char32_t cp = 0;
  for (std::size_t i = 2; i < token.size(); ++i) {
    const char c = token[i];
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else fail(ErrorKind::InvalidConfig, "bad codepoint '" + token + "'");
    cp = cp * 16 + static_cast<char32_t>(d);
    if (cp > 0x10FFFF) fail(ErrorKind::InvalidConfig, "codepoint out of range: '" + token + "'");
  }
  return cp;
}

void validate_config(NormalizationConfig& config) {
  for (const std::string& suffix : config.suffixes_to_strip)
    if (suffix.empty() || suffix[0] != '_')
      fail(ErrorKind::InvalidConfig, "suffixes_to_strip entries must begin with '_': '" + suffix + "'");

  // Keep the pipeline idempotent: lexicon keys and template strings must be
  // stable under the apostrophe pass.
  std::map<std::string, std::vector<SplitComponent>> normalized;
  for (auto& [fused, components] : config.split_lexicon) {
    std::string key = fused;
    normalize_apostrophes(key, config);
    for (SplitComponent& c : components) {
      normalize_apostrophes(c.form, config);
      normalize_apostrophes(c.lemma, config);
    }
    if (!normalized.emplace(std::move(key), std::move(components)).second)
      fail(ErrorKind::InvalidConfig, "split_lexicon keys collide after apostrophe normalization");
  }
  config.split_lexicon = std::move(normalized);

  for (auto& [fused, components] : config.split_lexicon) {
    if (components.size() < 2)
      fail(ErrorKind::InvalidConfig, "split_lexicon entry '" + fused + "' needs >= 2 components");
    for (std::size_t i = 0; i < components.size(); ++i) {
      SplitComponent& c = components[i];
      c.postag = sanitize_postag(c.postag);
      if (c.form.empty())
        fail(ErrorKind::InvalidConfig, "split component of '" + fused + "' has an empty form");
      if (config.split_lexicon.count(c.form))
        fail(ErrorKind::InvalidConfig,
             "split component '" + c.form + "' of '" + fused + "' is itself a lexicon key");
      if (i == 0) {
        if (c.anchor != 0)
          fail(ErrorKind::InvalidConfig, "first component of '" + fused + "' cannot have an anchor");
      } else if (c.anchor < 1 || c.anchor > static_cast<int>(i)) {
        fail(ErrorKind::TemplateHeadOutOfRange,
             "component " + std::to_string(i + 1) + " of '" + fused + "' must anchor to an earlier component");
      }
    }
  }
}

}  // namespace

NormalizationConfig NormalizationConfig::defaults() {
  NormalizationConfig c;
  c.apostrophe_sources = {0x0027, 0x2019, 0x1FBD, 0x1FBF, 0x0315, 0xA78C};
  c.suffixes_to_strip = {"_CO", "_AP"};
  c.split_lexicon = {
      {"οὐδέ",
       {{"οὐ", "οὐ", "d--------", "", 0}, {"δέ", "δέ", "c--------", "AuxY", 1}}},
      {"οὐδὲ",
       {{"οὐ", "οὐ", "d--------", "", 0}, {"δὲ", "δέ", "c--------", "AuxY", 1}}},
      {"εἴτε",
       {{"εἴ", "εἰ", "c--------", "", 0}, {"τε", "τε", "d--------", "AuxY", 1}}},
  };
  validate_config(c);
  return c;
}

NormalizationConfig NormalizationConfig::from_text(std::string_view text) {
  NormalizationConfig config = defaults();
  bool lexicon_reset = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "apostrophe_sources") {
      config.apostrophe_sources.clear();
      for (const std::string& tok : split_on(value, " "))
        if (!tok.empty()) config.apostrophe_sources.push_back(parse_codepoint(tok));
    } else if (key == "suffixes_to_strip") {
      config.suffixes_to_strip.clear();
      for (const std::string& tok : split_on(value, " "))
        if (!tok.empty()) config.suffixes_to_strip.push_back(tok);
    } else if (key == "cycle_repair") {
      if (value != "reattach_to_root")
        fail(ErrorKind::InvalidConfig, "unknown cycle_repair strategy '" + value + "'");
      config.cycle_repair = CycleRepair::ReattachToRoot;
    } else if (key == "single_root_enforce") {
      if (value != "true" && value != "false")
        fail(ErrorKind::InvalidConfig, "single_root_enforce must be true or false");
      config.single_root_enforce = value == "true";
    } else if (key == "split_lexicon") {
      if (!lexicon_reset) {
        config.split_lexicon.clear();
        lexicon_reset = true;
      }
      const std::size_t arrow = value.find("->");
      if (arrow == std::string::npos)
        fail(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": split_lexicon needs 'FUSED -> components'");
      const std::string fused = trim(std::string_view(value).substr(0, arrow));
      if (fused.empty())
        fail(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": empty fused form");
      config.split_lexicon[fused] = parse_split_components(std::string_view(value).substr(arrow + 2));
    } else {
      fail(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  validate_config(config);
  return config;
}

namespace {

std::vector<SplitComponent> parse_split_components(std::string_view rhs) {
  std::vector<SplitComponent> components;
  for (const std::string& chunk : split_on(rhs, " + ")) {
    const auto fields = split_on(chunk, "|");
    if (fields.size() != 5)
      fail(ErrorKind::InvalidConfig, "split component needs form|lemma|postag|relation|anchor: '" + chunk + "'");
    SplitComponent c;
    c.form = fields[0];
    c.lemma = fields[1];
    c.postag = fields[2];
    c.relation = fields[3] == "*" ? std::string() : fields[3];
    if (fields[4] == "*") {
      c.anchor = 0;
    } else {
      int anchor = 0;
      for (char ch : fields[4]) {
        if (ch < '0' || ch > '9')
          fail(ErrorKind::InvalidConfig, "bad anchor '" + fields[4] + "' in '" + chunk + "'");
        anchor = anchor * 10 + (ch - '0');
      }
      c.anchor = anchor;
    }
    components.push_back(std::move(c));
  }
  return components;
}

}  // namespace

std::string NormalizationConfig::to_text() const {
  std::ostringstream os;
  os << "apostrophe_sources =";
  for (char32_t cp : apostrophe_sources) {
    char buf[16];
    std::snprintf(buf, sizeof buf, " U+%04X", static_cast<unsigned>(cp));
    os << buf;
  }
  os << "\nsuffixes_to_strip =";
  for (const std::string& s : suffixes_to_strip) os << " " << s;
  os << "\ncycle_repair = reattach_to_root";
  os << "\nsingle_root_enforce = " << (single_root_enforce ? "true" : "false") << "\n";
  for (const auto& [fused, components] : split_lexicon) {
    os << "split_lexicon = " << fused << " ->";
    for (std::size_t i = 0; i < components.size(); ++i) {
      const SplitComponent& c = components[i];
      os << (i ? " + " : " ") << c.form << "|" << c.lemma << "|" << c.postag << "|"
         << (c.relation.empty() ? "*" : c.relation) << "|";
      if (c.anchor == 0) os << "*";
      else os << c.anchor;
    }
    os << "\n";
  }
  return os.str();
}

NormalizationReport& NormalizationReport::operator+=(const NormalizationReport& other) {
  apostrophes_changed += other.apostrophes_changed;
  suffixes_stripped += other.suffixes_stripped;
  tokens_split += other.tokens_split;
  ellipses_relocated += other.ellipses_relocated;
  cycles_repaired += other.cycles_repaired;
  return *this;
}

std::string render_report(const NormalizationReport& r) {
  std::ostringstream os;
  os << "apostrophes_changed = " << r.apostrophes_changed << "\n"
     << "suffixes_stripped = " << r.suffixes_stripped << "\n"
     << "tokens_split = " << r.tokens_split << "\n"
     << "ellipses_relocated = " << r.ellipses_relocated << "\n"
     << "cycles_repaired = " << r.cycles_repaired << "\n";
  return os.str();
}

std::size_t normalize_apostrophes(std::string& text, const NormalizationConfig& config) {
  const std::string target = utf8::encode_one(kModifierApostrophe);
  std::size_t count = 0;
  for (char32_t cp : config.apostrophe_sources) {
    if (cp == kModifierApostrophe) continue;
    count += replace_codepoint(text, utf8::encode_one(cp), target);
  }
  return count;
}

std::size_t normalize_apostrophes(Sentence& s, const NormalizationConfig& config) {
  std::size_t count = 0;
  for (Token& t : s.tokens) {
    count += normalize_apostrophes(t.form, config);
    count += normalize_apostrophes(t.lemma, config);
  }
  return count;
}

std::size_t strip_label_suffixes(Sentence& s, const NormalizationConfig& config) {
  std::size_t count = 0;
  for (Token& t : s.tokens) {
    std::size_t best = 0;
    for (const std::string& suffix : config.suffixes_to_strip) {
      if (suffix.size() > best && suffix.size() < t.relation.size() &&
          t.relation.compare(t.relation.size() - suffix.size(), suffix.size(), suffix) == 0)
        best = suffix.size();
    }
    if (best > 0) {
      t.relation.resize(t.relation.size() - best);
      ++count;
    }
  }
  return count;
}

std::size_t split_fused_conjunctions(Sentence& s, const NormalizationConfig& config) {
  if (config.split_lexicon.empty()) return 0;
  bool any = false;
  for (const Token& t : s.tokens)
    if (config.split_lexicon.count(t.form)) {
      any = true;
      break;
    }
  if (!any) return 0;

  const int n = s.size();
  std::vector<int> new_id(static_cast<std::size_t>(n) + 1, 0);
  int next = 1;
  for (int i = 1; i <= n; ++i) {
    new_id[static_cast<std::size_t>(i)] = next;
    const auto it = config.split_lexicon.find(s.tokens[static_cast<std::size_t>(i - 1)].form);
    next += it == config.split_lexicon.end() ? 1 : static_cast<int>(it->second.size());
  }

  std::size_t count = 0;
  std::vector<Token> out;
  out.reserve(static_cast<std::size_t>(next - 1));
  for (int i = 1; i <= n; ++i) {
    const Token& old = s.tokens[static_cast<std::size_t>(i - 1)];
    const int mapped_head = old.head == 0 || old.head > n ? old.head : new_id[static_cast<std::size_t>(old.head)];
    const auto it = config.split_lexicon.find(old.form);
    if (it == config.split_lexicon.end()) {
      Token t = old;
      t.id = new_id[static_cast<std::size_t>(i)];
      t.head = mapped_head;
      out.push_back(std::move(t));
      continue;
    }
    ++count;
    const int base = new_id[static_cast<std::size_t>(i)];
    const auto& components = it->second;
    for (std::size_t k = 0; k < components.size(); ++k) {
      const SplitComponent& c = components[k];
      Token t;
      t.id = base + static_cast<int>(k);
      t.form = c.form;
      t.lemma = c.lemma;
      t.postag = c.postag;
      if (k == 0) {
        t.head = mapped_head;
        t.relation = old.relation;
        t.elliptical = old.elliptical;
      } else {
        t.head = base + c.anchor - 1;
        t.relation = c.relation;
      }
      out.push_back(std::move(t));
    }
  }
  s.tokens = std::move(out);
  return count;
}

std::size_t relocate_ellipsis(Sentence& s) {
  const int n = s.size();
  std::vector<int> order;  // old ids in new order
  order.reserve(static_cast<std::size_t>(n));
  for (const Token& t : s.tokens)
    if (!t.elliptical) order.push_back(t.id);
  const std::size_t regular = order.size();
  for (const Token& t : s.tokens)
    if (t.elliptical) order.push_back(t.id);
  if (regular == static_cast<std::size_t>(n)) return 0;

  std::vector<int> new_id(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t i = 0; i < order.size(); ++i)
    new_id[static_cast<std::size_t>(order[i])] = static_cast<int>(i) + 1;

  std::size_t count = 0;
  std::vector<Token> out(static_cast<std::size_t>(n));
  std::size_t placeholder = 0;
  for (const Token& old : s.tokens) {
    Token t = old;
    const int id = new_id[static_cast<std::size_t>(old.id)];
    if (t.elliptical) {
      const std::string form = "[" + std::to_string(placeholder++) + "]";
      if (form != t.form || id != old.id) ++count;
      t.form = form;
    }
    t.id = id;
    if (t.head >= 1 && t.head <= n) t.head = new_id[static_cast<std::size_t>(t.head)];
    out[static_cast<std::size_t>(id - 1)] = std::move(t);
  }
  s.tokens = std::move(out);
  return count;
}

std::size_t repair_cycles(Sentence& s, const NormalizationConfig& config) {
  const int n = s.size();
  std::size_t repairs = 0;
  for (Token& t : s.tokens) {
    if (t.head < 0 || t.head > n || t.head == t.id) {
      t.head = 0;
      ++repairs;
    }
  }
  while (true) {
    const TreeVerdict verdict = validate_tree(s);
    if (verdict.ok()) break;
    // validate_tree returns cycle members sorted, smallest first.
    s.tokens[static_cast<std::size_t>(verdict.ids.front() - 1)].head = 0;
    ++repairs;
  }
  if (config.single_root_enforce) {
    int first_root = 0;
    for (const Token& t : s.tokens) {
      if (t.head != 0) continue;
      if (first_root == 0) first_root = t.id;
    }
    for (Token& t : s.tokens)
      if (t.head == 0 && t.id != first_root) t.head = first_root;
  }
  return repairs;
}

NormalizationReport normalize_pipeline(Sentence& s, const NormalizationConfig& config) {
  NormalizationReport report;
  report.apostrophes_changed = normalize_apostrophes(s, config);
  report.suffixes_stripped = strip_label_suffixes(s, config);
  report.tokens_split = split_fused_conjunctions(s, config);
  report.cycles_repaired = repair_cycles(s, config);
  report.ellipses_relocated = relocate_ellipsis(s);
  return report;
}

}  // namespace agtb
