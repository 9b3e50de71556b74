#include "agtb/treebank.hpp"

#include <algorithm>
#include <sstream>

#include "agtb/error.hpp"

namespace agtb {

const char* const kFeatureKeys[8] = {"person", "number", "tense",  "mood",
                                     "voice",  "gender", "case",   "degree"};

std::string to_string(const TreeVerdict& v) {
  std::ostringstream os;
  switch (v.kind) {
    case TreeVerdict::Kind::Ok: return "ok";
    case TreeVerdict::Kind::Cycle: os << "cycle("; break;
    case TreeVerdict::Kind::MultipleRoots: os << "multiple_roots("; break;
    case TreeVerdict::Kind::DanglingHead: os << "dangling_head("; break;
  }
  for (std::size_t i = 0; i < v.ids.size(); ++i) {
    if (i) os << ",";
    os << v.ids[i];
  }
  os << ")";
  return os.str();
}

TreeVerdict validate_tree(const Sentence& s, bool single_root) {
  const int n = s.size();
  for (const Token& t : s.tokens) {
    if (t.head < 0 || t.head > n || t.head == t.id)
      return {TreeVerdict::Kind::DanglingHead, {t.id}};
  }
  // Walk head chains; a chain that revisits an in-progress node is a cycle.
  std::vector<int> state(static_cast<std::size_t>(n) + 1, 0);  // 0 new, 1 on path, 2 done
  state[0] = 2;
  for (int start = 1; start <= n; ++start) {
    if (state[static_cast<std::size_t>(start)] != 0) continue;
    int v = start;
    std::vector<int> path;
    while (state[static_cast<std::size_t>(v)] == 0) {
      state[static_cast<std::size_t>(v)] = 1;
      path.push_back(v);
      v = s.tokens[static_cast<std::size_t>(v - 1)].head;
    }
    if (state[static_cast<std::size_t>(v)] == 1) {
      std::vector<int> cycle;
      int u = v;
      do {
        cycle.push_back(u);
        u = s.tokens[static_cast<std::size_t>(u - 1)].head;
      } while (u != v);
      std::sort(cycle.begin(), cycle.end());
      return {TreeVerdict::Kind::Cycle, cycle};
    }
    for (int u : path) state[static_cast<std::size_t>(u)] = 2;
  }
  if (single_root) {
    std::vector<int> roots;
    for (const Token& t : s.tokens)
      if (t.head == 0) roots.push_back(t.id);
    if (roots.size() > 1) return {TreeVerdict::Kind::MultipleRoots, roots};
  }
  return {};
}

Feats postag_to_feats(const std::string& postag) {
  if (postag.size() != kPostagLen)
    fail(ErrorKind::MalformedTag,
         "expected 9-character tag, got " + std::to_string(postag.size()) + " in '" + postag + "'");
  Feats out;
  for (int i = 0; i < 8; ++i) {
    const char c = postag[static_cast<std::size_t>(i) + 1];
    if (c != '-') out.emplace_back(kFeatureKeys[i], std::string(1, c));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string feats_to_postag(char pos, const Feats& feats) {
  std::string tag(kPostagLen, '-');
  tag[0] = pos;
  for (const auto& [key, value] : feats) {
    if (value.size() != 1)
      fail(ErrorKind::MalformedTag, "feature value must be one character: " + key + "=" + value);
    int idx = -1;
    for (int i = 0; i < 8; ++i)
      if (key == kFeatureKeys[i]) idx = i;
    if (idx < 0) fail(ErrorKind::MalformedTag, "unknown feature key: " + key);
    tag[static_cast<std::size_t>(idx) + 1] = value[0];
  }
  return tag;
}

std::string sanitize_postag(const std::string& raw, bool* changed) {
  bool dirty = false;
  std::string tag = raw;
  if (tag.empty() || tag.size() > kPostagLen) {
    dirty = true;
    tag.assign(kPostagLen, '-');
  } else if (tag.size() < kPostagLen) {
    dirty = true;
    tag.append(kPostagLen - tag.size(), '-');
  }
  if (changed) *changed = dirty;
  return tag;
}

}  // namespace agtb
