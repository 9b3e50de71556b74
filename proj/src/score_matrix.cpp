#include "agtb/score_matrix.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "agtb/error.hpp"

namespace agtb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_score(std::string_view field, std::size_t line_no) {
  if (field == "-inf") return kNegInf;
  const std::string buf(field);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || !std::isfinite(v))
    fail(ErrorKind::NonNumeric, "line " + std::to_string(line_no) + ": bad score '" + buf + "'");
  return v;
}

}  // namespace

ScoreMatrix ScoreMatrix::zeros(int n) {
  ScoreMatrix m;
  m.n = n;
  m.scores.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1), 0.0);
  return m;
}

std::vector<ScoreMatrix> read_score_matrices(std::string_view bytes) {
  std::vector<ScoreMatrix> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  int expect_rows = 0;  // remaining rows of the open block; 0 = expect header
  ScoreMatrix current;

  auto flush = [&] {
    if (expect_rows > 0)
      fail(ErrorKind::HeaderMismatch, "line " + std::to_string(line_no) + ": block ended after " +
                                          std::to_string(current.n - expect_rows) + " of " +
                                          std::to_string(current.n) + " rows");
    if (current.n > 0) {
      out.push_back(std::move(current));
      current = ScoreMatrix{};
    }
  };

  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    std::string_view line = bytes.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;

    const auto fields = split_ws(line);
    if (fields.empty()) {
      flush();
      continue;
    }
    if (expect_rows == 0) {
      if (current.n != 0) flush();
      std::string_view header = fields[0];
      if (fields.size() != 1 || header.rfind("n=", 0) != 0)
        fail(ErrorKind::HeaderMismatch, "line " + std::to_string(line_no) + ": expected 'n=<k>' header");
      int n = 0;
      bool ok = header.size() > 2;
      for (std::size_t i = 2; i < header.size(); ++i) {
        const char c = header[i];
        if (c < '0' || c > '9') { ok = false; break; }
        n = n * 10 + (c - '0');
        if (n > 100000) { ok = false; break; }
      }
      if (!ok || n < 1)
        fail(ErrorKind::HeaderMismatch, "line " + std::to_string(line_no) + ": bad matrix size in header");
      current.n = n;
      current.scores.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1));
      expect_rows = n;
      continue;
    }
    if (fields.size() != static_cast<std::size_t>(current.n) + 1)
      fail(ErrorKind::RowLength, "line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(current.n + 1) + " scores, got " +
                                     std::to_string(fields.size()));
    for (std::string_view f : fields) current.scores.push_back(parse_score(f, line_no));
    --expect_rows;
  }
  flush();
  return out;
}

std::string write_score_matrices(const std::vector<ScoreMatrix>& matrices) {
  std::string out;
  char buf[64];
  for (std::size_t m = 0; m < matrices.size(); ++m) {
    const ScoreMatrix& mat = matrices[m];
    if (m) out += '\n';
    out += "n=" + std::to_string(mat.n) + '\n';
    for (int i = 1; i <= mat.n; ++i) {
      for (int h = 0; h <= mat.n; ++h) {
        if (h) out += ' ';
        const double v = mat.at(i, h);
        if (v == kNegInf) {
          out += "-inf";
        } else {
          std::snprintf(buf, sizeof buf, "%.17g", v);
          out += buf;
        }
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace agtb
