#include "agtb/agdt_xml.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "agtb/error.hpp"

namespace agtb {

namespace {

struct Attr {
  std::string name;
  std::string value;
};

struct Tag {
  enum class Kind { Open, Close, SelfClose } kind = Kind::Open;
  std::string name;
  std::vector<Attr> attrs;
  std::size_t line = 0;

  const std::string* attr(std::string_view name_) const {
    for (const Attr& a : attrs)
      if (a.name == name_) return &a.value;
    return nullptr;
  }
};

bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '-' || c == '.' || c == ':' || static_cast<unsigned char>(c) >= 0x80;
}

class Scanner {
 public:
  explicit Scanner(std::string_view s) : s_(s) {
    if (s_.size() >= 3 && s_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;  // UTF-8 BOM
  }

  // Advances to the next element tag, skipping text, comments, PIs, doctype
  // and CDATA. Returns nullopt at end of input.
  std::optional<Tag> next_tag() {
    while (true) {
      const std::size_t lt = find_advance('<');
      if (lt == npos) return std::nullopt;
      if (starts_with("!--")) {
        skip_until("-->");
        continue;
      }
      if (starts_with("![CDATA[")) {
        skip_until("]]>");
        continue;
      }
      if (starts_with("!")) {  // DOCTYPE and friends
        skip_decl();
        continue;
      }
      if (starts_with("?")) {
        skip_until("?>");
        continue;
      }
      return parse_tag();
    }
  }

  std::size_t line() const { return line_; }

  [[noreturn]] void syntax_error(const std::string& what) const {
    fail(ErrorKind::XmlSyntax, "line " + std::to_string(line_) + ": " + what);
  }

 private:
  static constexpr std::size_t npos = std::string_view::npos;

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  bool eof() const { return pos_ >= s_.size(); }

  void advance() {
    if (s_[pos_] == '\n') ++line_;
    ++pos_;
  }

  std::size_t find_advance(char c) {
    while (!eof()) {
      const char cur = s_[pos_];
      advance();
      if (cur == c) return pos_;
    }
    return npos;
  }

  bool starts_with(std::string_view prefix) const { return s_.substr(pos_, prefix.size()) == prefix; }

  void skip_until(std::string_view terminator) {
    while (!eof()) {
      if (starts_with(terminator)) {
        for (std::size_t i = 0; i < terminator.size(); ++i) advance();
        return;
      }
      advance();
    }
    syntax_error("unterminated markup");
  }

  void skip_decl() {
    int depth = 1;  // '<' already consumed
    while (!eof()) {
      const char c = peek();
      advance();
      if (c == '<') ++depth;
      if (c == '>' && --depth == 0) return;
    }
    syntax_error("unterminated declaration");
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n')) advance();
  }

  std::string parse_name() {
    std::string name;
    while (!eof() && is_name_char(peek())) {
      name.push_back(peek());
      advance();
    }
    if (name.empty()) syntax_error("expected a name");
    return name;
  }

  std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
      if (raw[i] != '&') {
        out.push_back(raw[i++]);
        continue;
      }
      const std::size_t semi = raw.find(';', i);
      if (semi == npos) syntax_error("unterminated entity");
      const std::string_view body = raw.substr(i + 1, semi - i - 1);
      if (body == "amp") out += '&';
      else if (body == "lt") out += '<';
      else if (body == "gt") out += '>';
      else if (body == "quot") out += '"';
      else if (body == "apos") out += '\'';
      else if (!body.empty() && body[0] == '#') {
        char32_t cp = 0;
        bool ok = body.size() > 1;
        if (body.size() > 2 && (body[1] == 'x' || body[1] == 'X')) {
          for (std::size_t k = 2; k < body.size() && ok; ++k) {
            const char c = body[k];
            int d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
            else { ok = false; break; }
            cp = cp * 16 + static_cast<char32_t>(d);
            if (cp > 0x10FFFF) ok = false;
          }
          ok = ok && body.size() > 2;
        } else {
          for (std::size_t k = 1; k < body.size() && ok; ++k) {
            const char c = body[k];
            if (c < '0' || c > '9') { ok = false; break; }
            cp = cp * 10 + static_cast<char32_t>(c - '0');
            if (cp > 0x10FFFF) ok = false;
          }
        }
        if (!ok) syntax_error("bad character reference &" + std::string(body) + ";");
        out += utf8_encode(cp);
      } else {
        syntax_error("unknown entity &" + std::string(body) + ";");
      }
      i = semi + 1;
    }
    return out;
  }

  static std::string utf8_encode(char32_t cp);

  Tag parse_tag() {
    Tag tag;
    tag.line = line_;
    if (peek() == '/') {
      advance();
      tag.kind = Tag::Kind::Close;
      tag.name = parse_name();
      skip_ws();
      if (peek() != '>') syntax_error("expected '>' after closing tag");
      advance();
      return tag;
    }
    tag.name = parse_name();
    while (true) {
      skip_ws();
      if (eof()) syntax_error("unterminated tag <" + tag.name);
      if (peek() == '>') {
        advance();
        return tag;
      }
      if (peek() == '/') {
        advance();
        if (peek() != '>') syntax_error("expected '/>'");
        advance();
        tag.kind = Tag::Kind::SelfClose;
        return tag;
      }
      Attr attr;
      attr.name = parse_name();
      skip_ws();
      if (peek() != '=') syntax_error("expected '=' after attribute " + attr.name);
      advance();
      skip_ws();
      const char quote = peek();
      if (quote != '"' && quote != '\'') syntax_error("expected quoted attribute value");
      advance();
      const std::size_t start = pos_;
      while (!eof() && peek() != quote && peek() != '<') advance();
      if (eof() || peek() != quote) syntax_error("unterminated attribute value");
      attr.value = decode_entities(s_.substr(start, pos_ - start));
      advance();
      tag.attrs.push_back(std::move(attr));
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

std::string Scanner::utf8_encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) out.push_back(static_cast<char>(cp));
  else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

bool looks_like_placeholder(const std::string& form) {
  if (form.size() < 3 || form.front() != '[' || form.back() != ']') return false;
  return std::all_of(form.begin() + 1, form.end() - 1, [](char c) { return c >= '0' && c <= '9'; });
}

struct RawToken {
  Token token;
  bool head_known = false;
};

class SentenceBuilder {
 public:
  SentenceBuilder(std::string sentence_id, std::string provenance, std::size_t line)
      : line_(line) {
    sentence_.sentence_id = std::move(sentence_id);
    sentence_.provenance = std::move(provenance);
  }

  void add_word(const Tag& tag, std::vector<std::string>& warnings) {
    RawToken raw;
    Token& t = raw.token;

    if (const std::string* id = tag.attr("id"); id && !id->empty() && parse_nonneg(*id, t.id) && t.id >= 1) {
      for (const RawToken& prev : raw_)
        if (prev.token.id == t.id)
          fail(ErrorKind::DuplicateTokenId,
               where(tag) + ": duplicate token id " + std::to_string(t.id));
    } else {
      t.id = raw_.empty() ? 1 : raw_.back().token.id + 1;
      warn(warnings, tag, "missing or non-numeric word id; assigned " + std::to_string(t.id));
    }

    if (const std::string* form = tag.attr("form"); form && !form->empty()) {
      t.form = *form;
    } else {
      t.form = "_";
      warn(warnings, tag, "empty form; replaced with '_'");
    }

    if (const std::string* lemma = tag.attr("lemma"); lemma && !lemma->empty()) t.lemma = *lemma;
    else {
      t.lemma = t.form;
      warn(warnings, tag, "missing lemma; copied form");
    }

    bool tag_changed = false;
    const std::string* postag = tag.attr("postag");
    t.postag = sanitize_postag(postag ? *postag : std::string(), &tag_changed);
    if (tag_changed) warn(warnings, tag, "postag not 9 characters; sanitized");

    if (const std::string* head = tag.attr("head"); head && parse_nonneg(*head, t.head)) {
      raw.head_known = true;
    } else {
      t.head = 0;
      warn(warnings, tag, head ? "non-numeric head; reset to 0" : "missing head; reset to 0");
    }

    if (const std::string* rel = tag.attr("relation"); rel && !rel->empty()) t.relation = *rel;
    else {
      t.relation = "UNDEFINED";
      warn(warnings, tag, "missing relation; set to UNDEFINED");
    }

    t.elliptical = tag.attr("artificial") != nullptr || looks_like_placeholder(t.form);
    raw_.push_back(std::move(raw));
  }

  Sentence finish(std::vector<std::string>& warnings) {
    if (raw_.empty())
      fail(ErrorKind::EmptySentence, "line " + std::to_string(line_) + ": sentence '" +
                                         sentence_.sentence_id + "' has no word elements");
    // Renumber to 1..n in document order and remap heads.
    std::map<int, int> new_id;
    bool renumbered = false;
    for (std::size_t i = 0; i < raw_.size(); ++i) {
      const int old_id = raw_[i].token.id;
      new_id[old_id] = static_cast<int>(i) + 1;
      if (old_id != static_cast<int>(i) + 1) renumbered = true;
    }
    if (renumbered)
      warnings.push_back(context() + ": non-contiguous word ids; renumbered in document order");
    for (RawToken& raw : raw_) {
      Token& t = raw.token;
      t.id = new_id[t.id];
      if (t.head == 0) continue;
      if (const auto it = new_id.find(t.head); it != new_id.end()) {
        t.head = it->second;
      } else {
        warnings.push_back(context() + ": token " + std::to_string(t.id) + " head " +
                           std::to_string(t.head) + " does not exist; reset to 0");
        t.head = 0;
      }
      if (t.head == t.id) {
        warnings.push_back(context() + ": token " + std::to_string(t.id) + " is its own head; reset to 0");
        t.head = 0;
      }
    }
    for (RawToken& raw : raw_) sentence_.tokens.push_back(std::move(raw.token));
    return std::move(sentence_);
  }

 private:
  static bool parse_nonneg(const std::string& s, int& out) {
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

  std::string context() const {
    return "sentence '" + sentence_.sentence_id + "' (line " + std::to_string(line_) + ")";
  }

  std::string where(const Tag& tag) const {
    return "line " + std::to_string(tag.line) + " in sentence '" + sentence_.sentence_id + "'";
  }

  void warn(std::vector<std::string>& warnings, const Tag& tag, const std::string& msg) {
    warnings.push_back(where(tag) + ": " + msg);
  }

  Sentence sentence_;
  std::vector<RawToken> raw_;
  std::size_t line_;
};

}  // namespace

XmlReadResult read_agdt_xml(std::string_view bytes) {
  XmlReadResult result;
  Scanner scanner(bytes);
  std::vector<std::string> stack;
  std::optional<SentenceBuilder> builder;
  std::size_t sentence_count = 0;

  while (auto tag = scanner.next_tag()) {
    switch (tag->kind) {
      case Tag::Kind::Open:
      case Tag::Kind::SelfClose: {
        const bool self_close = tag->kind == Tag::Kind::SelfClose;
        if (tag->name == "sentence") {
          if (builder) scanner.syntax_error("nested sentence element");
          ++sentence_count;
          const std::string* id = tag->attr("id");
          const std::string* doc = tag->attr("document_id");
          std::string sentence_id = id && !id->empty() ? *id : "s" + std::to_string(sentence_count);
          if (!id || id->empty())
            result.warnings.push_back("line " + std::to_string(tag->line) +
                                      ": sentence without id; assigned '" + sentence_id + "'");
          builder.emplace(std::move(sentence_id), doc ? *doc : std::string(), tag->line);
          if (self_close)
            fail(ErrorKind::EmptySentence,
                 "line " + std::to_string(tag->line) + ": self-closing sentence element");
        } else if (tag->name == "word") {
          if (builder) builder->add_word(*tag, result.warnings);
          // word elements outside a sentence are ignored
        }
        if (!self_close) stack.push_back(tag->name);
        break;
      }
      case Tag::Kind::Close: {
        if (stack.empty() || stack.back() != tag->name)
          scanner.syntax_error("mismatched closing tag </" + tag->name + ">");
        stack.pop_back();
        if (tag->name == "sentence" && builder) {
          result.sentences.push_back(builder->finish(result.warnings));
          builder.reset();
        }
        break;
      }
    }
  }
  if (!stack.empty())
    fail(ErrorKind::XmlSyntax, "unexpected end of input: unclosed element <" + stack.back() + ">");
  return result;
}

}  // namespace agtb
