#include "agtb/catalog.hpp"

#include <string>

#include "agtb/error.hpp"

namespace agtb {

namespace {

// Accepts '+', '-', or U+2212 (0xE2 0x88 0x92). Returns the sign and the
// number of bytes consumed, or 0 bytes when no sign is present.
int read_sign(std::string_view s, std::size_t& consumed) {
  if (!s.empty() && s[0] == '+') { consumed = 1; return 1; }
  if (!s.empty() && s[0] == '-') { consumed = 1; return -1; }
  if (s.size() >= 3 && s.substr(0, 3) == "\xE2\x88\x92") { consumed = 3; return -1; }
  consumed = 0;
  return 1;
}

YearMonth parse_year_month(std::string_view s, std::size_t line_no) {
  const auto bad = [&]() -> YearMonth {
    fail(ErrorKind::DateSyntax, "line " + std::to_string(line_no) + ": bad date '" + std::string(s) + "'");
  };
  std::size_t sign_len = 0;
  const int sign = read_sign(s, sign_len);
  std::string_view rest = s.substr(sign_len);
  // ±YYYY-MM: four year digits, '-', two month digits.
  if (rest.size() != 7 || rest[4] != '-') return bad();
  int year = 0, month = 0;
  for (int i = 0; i < 4; ++i) {
    if (rest[i] < '0' || rest[i] > '9') return bad();
    year = year * 10 + (rest[i] - '0');
  }
  for (int i = 5; i < 7; ++i) {
    if (rest[i] < '0' || rest[i] > '9') return bad();
    month = month * 10 + (rest[i] - '0');
  }
  if (month < 1 || month > 12) return bad();
  return {sign * year, month};
}

}  // namespace

int century_of(int year) {
  if (year > 0) return (year - 1) / 100 + 1;
  if (year < 0) return -((-year - 1) / 100 + 1);
  return 0;
}

std::vector<DocumentMeta> read_catalog(std::string_view bytes) {
  std::vector<DocumentMeta> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    std::string_view line = bytes.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;

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
    if (cols.size() != 5 && cols.size() != 6)
      fail(ErrorKind::FieldSyntax,
           "line " + std::to_string(line_no) + ": expected 5 or 6 tab-separated fields, got " +
               std::to_string(cols.size()));

    DocumentMeta meta;
    meta.cts_urn = std::string(cols[0]);
    meta.author = std::string(cols[1]);
    meta.title = std::string(cols[2]);

    const std::string_view range = cols[3];
    const std::size_t slash = range.find('/');
    if (slash == std::string_view::npos)
      fail(ErrorKind::DateSyntax,
           "line " + std::to_string(line_no) + ": date_range missing '/': '" + std::string(range) + "'");
    meta.date_start = parse_year_month(range.substr(0, slash), line_no);
    meta.date_end = parse_year_month(range.substr(slash + 1), line_no);
    if (meta.date_end < meta.date_start)
      fail(ErrorKind::RangeOrder,
           "line " + std::to_string(line_no) + ": date range ends before it starts: '" +
               std::string(range) + "'");

    std::uint64_t count = 0;
    bool any_digit = false;
    for (char c : cols[4]) {
      if (c == ',') continue;  // thousands separators tolerated
      if (c < '0' || c > '9')
        fail(ErrorKind::FieldSyntax,
             "line " + std::to_string(line_no) + ": bad token count '" + std::string(cols[4]) + "'");
      count = count * 10 + static_cast<std::uint64_t>(c - '0');
      any_digit = true;
    }
    if (!any_digit)
      fail(ErrorKind::FieldSyntax, "line " + std::to_string(line_no) + ": empty token count");
    meta.token_count = count;
    if (cols.size() == 6) meta.genre = std::string(cols[5]);
    out.push_back(std::move(meta));
  }
  return out;
}

}  // namespace agtb
