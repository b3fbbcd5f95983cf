#include "saecon/encode.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "saecon/utf8.hpp"

namespace saecon {

using json = nlohmann::json;

namespace {

bool is_space_cp(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' ||
         c == U'\f' || c == 0x00A0;
}

// ASCII punctuation plus common typographic marks; apostrophes between
// letters stay inside the token ("wasn't" handled by the caller loop).
bool is_punct_cp(char32_t c) {
  if (c < 128) {
    return std::ispunct(static_cast<int>(c)) != 0;
  }
  switch (c) {
    case 0x2018: case 0x2019: case 0x201C: case 0x201D:
    case 0x2013: case 0x2014: case 0x2026:
      return true;
    default:
      return false;
  }
}

std::string fold_ascii(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

}  // namespace

TokenSequence tokenize(const std::string& sentence) {
  const Utf8Text text = Utf8Text::decode(sentence);
  TokenSequence out;
  size_t i = 0;
  const size_t n = text.size();
  auto emit = [&](size_t start, size_t end) {
    out.tokens.push_back(text.substr(start, end));
    out.char_spans.emplace_back(start, end);
  };
  while (i < n) {
    if (is_space_cp(text.points[i])) {
      ++i;
      continue;
    }
    if (is_punct_cp(text.points[i])) {
      emit(i, i + 1);
      ++i;
      continue;
    }
    size_t start = i;
    while (i < n && !is_space_cp(text.points[i]) && !is_punct_cp(text.points[i])) ++i;
    emit(start, i);
  }
  return out;
}

LabelVocab::LabelVocab() = default;

std::string LabelVocab::key(EdgeDirection dir, const std::string& dep_type) {
  switch (dir) {
    case EdgeDirection::Out: return "out:" + dep_type;
    case EdgeDirection::Inv: return "inv:" + dep_type;
    case EdgeDirection::Self: return "self:" + dep_type;
  }
  return dep_type;
}

int LabelVocab::add(EdgeDirection dir, const std::string& dep_type) {
  const std::string k = key(dir, dep_type);
  auto it = ids_.find(k);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(ids_.size()) + 1;  // 0 reserved for UNK
  ids_.emplace(k, id);
  return id;
}

int LabelVocab::lookup(EdgeDirection dir, const std::string& dep_type) const {
  auto it = ids_.find(key(dir, dep_type));
  return it == ids_.end() ? unk_id() : it->second;
}

std::vector<std::pair<int, std::string>> LabelVocab::entries() const {
  std::vector<std::pair<int, std::string>> out;
  out.reserve(ids_.size());
  for (const auto& [k, id] : ids_) out.emplace_back(id, k);
  std::sort(out.begin(), out.end());
  return out;
}

LabelVocab LabelVocab::from_entries(
    const std::vector<std::pair<int, std::string>>& entries) {
  LabelVocab v;
  for (const auto& [id, k] : entries) {
    if (id != static_cast<int>(v.ids_.size()) + 1)
      throw Error(ErrorCode::Validation, "label vocab ids not dense");
    v.ids_.emplace(k, id);
  }
  return v;
}

DependencyGraph build_graph(const TokenSequence& toks, const std::vector<RawEdge>& raw,
                            LabelVocab* vocab) {
  const int n = static_cast<int>(toks.size());
  DependencyGraph g;
  g.num_vertices = n;
  g.edges.reserve(raw.size() * 2 + n);
  for (const auto& e : raw) {
    if (e.head < 0 || e.head >= n || e.dependent < 0 || e.dependent >= n)
      throw Error(ErrorCode::Validation,
                  "build_graph: edge endpoint out of range (" +
                      std::to_string(e.head) + " -> " + std::to_string(e.dependent) +
                      ", n=" + std::to_string(n) + ")");
    g.edges.push_back({e.head, e.dependent, e.dep_type, EdgeDirection::Out});
    g.edges.push_back({e.dependent, e.head, e.dep_type, EdgeDirection::Inv});
    if (vocab) {
      vocab->add(EdgeDirection::Out, e.dep_type);
      vocab->add(EdgeDirection::Inv, e.dep_type);
    }
  }
  for (int v = 0; v < n; ++v)
    g.edges.push_back({v, v, kSelfDepType, EdgeDirection::Self});
  if (vocab && n > 0) vocab->add(EdgeDirection::Self, kSelfDepType);
  return g;
}

std::vector<RawEdge> chain_edges(size_t n_tokens) {
  std::vector<RawEdge> edges;
  for (size_t i = 0; i + 1 < n_tokens; ++i)
    edges.push_back({static_cast<int>(i + 1), static_cast<int>(i), "dep"});
  return edges;
}

std::vector<ConlluSentence> load_conllu(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open " + path.string());

  std::vector<ConlluSentence> out;
  ConlluSentence cur;
  std::string line;
  size_t lineno = 0;
  size_t char_cursor = 0;

  auto flush = [&]() {
    if (!cur.tokens.tokens.empty()) out.push_back(std::move(cur));
    cur = ConlluSentence{};
    char_cursor = 0;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      const std::string marker = "# sent_id";
      if (line.rfind(marker, 0) == 0) {
        auto eq = line.find('=');
        if (eq != std::string::npos) {
          std::string v = line.substr(eq + 1);
          v.erase(0, v.find_first_not_of(" \t"));
          cur.sent_id = v;
        }
      }
      continue;
    }
    std::vector<std::string> cols;
    {
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, '\t')) cols.push_back(col);
    }
    if (cols.size() < 8)
      throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) +
                                        ": expected 10 tab-separated columns");
    const std::string& id_col = cols[0];
    // Multiword ranges (1-2) and empty nodes (1.1) carry no tree edge.
    if (id_col.find('-') != std::string::npos || id_col.find('.') != std::string::npos)
      continue;
    int id = 0, head = 0;
    try {
      id = std::stoi(id_col);
    } catch (...) {
      throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) +
                                        ": non-integer ID \"" + id_col + "\"");
    }
    try {
      head = std::stoi(cols[6]);
    } catch (...) {
      throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) +
                                        ": non-integer HEAD \"" + cols[6] + "\"");
    }
    const std::string& form = cols[1];
    const size_t len = utf8_length(form);
    cur.tokens.tokens.push_back(form);
    cur.tokens.char_spans.emplace_back(char_cursor, char_cursor + len);
    char_cursor += len + 1;  // synthetic spans; realigned against the raw text later
    if (head > 0)
      cur.edges.push_back({head - 1, id - 1, cols[7]});
  }
  flush();
  return out;
}

void EmbeddingTable::insert(const std::string& token, Eigen::VectorXf vec) {
  if (dim_ == 0) dim_ = static_cast<int>(vec.size());
  vectors_[fold_ascii(token)] = std::move(vec);
}

Eigen::VectorXf EmbeddingTable::lookup(const std::string& token, bool* oov) const {
  auto it = vectors_.find(fold_ascii(token));
  if (it == vectors_.end()) {
    if (oov) *oov = true;
    return Eigen::VectorXf::Zero(dim_);
  }
  if (oov) *oov = false;
  return it->second;
}

bool EmbeddingTable::contains(const std::string& token) const {
  return vectors_.count(fold_ascii(token)) > 0;
}

EmbeddingTable load_static_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  EmbeddingTable table;
  std::string line;
  size_t lineno = 0;
  int dim = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<float> vals;
    float x;
    while (ss >> x) vals.push_back(x);
    if (vals.empty())
      throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) +
                                        ": no vector components");
    if (dim < 0) dim = static_cast<int>(vals.size());
    if (static_cast<int>(vals.size()) != dim)
      throw Error(ErrorCode::Parse,
                  path.string() + ":" + std::to_string(lineno) + ": ragged row, expected " +
                      std::to_string(dim) + " dims, got " + std::to_string(vals.size()));
    Eigen::VectorXf v(dim);
    for (int i = 0; i < dim; ++i) v[i] = vals[i];
    table.insert(token, std::move(v));
  }
  return table;
}

std::pair<int, int> resolve_entity_tokens(const TokenSequence& toks,
                                          const EntitySpan& span, const std::string& id) {
  int first = -1, last = -1;
  for (size_t i = 0; i < toks.size(); ++i) {
    const auto& [ts, te] = toks.char_spans[i];
    const bool overlaps = ts < span.end && span.start < te;
    if (overlaps) {
      if (first < 0) first = static_cast<int>(i);
      last = static_cast<int>(i);
    }
  }
  if (first < 0)
    throw Error(ErrorCode::Validation,
                (id.empty() ? std::string("entity") : id) + ": entity span [" +
                    std::to_string(span.start) + "," + std::to_string(span.end) +
                    ") intersects no token");
  return {first, last};
}

EmbeddedSentence embed_sentence(const TokenSequence& toks, const EmbeddingTable& table,
                                const std::vector<EntitySpan>& entities,
                                const std::string& id) {
  EmbeddedSentence out;
  const int n = static_cast<int>(toks.size());
  out.vectors.resize(n, table.dim());
  out.oov.resize(n);
  for (int i = 0; i < n; ++i) {
    bool oov = false;
    out.vectors.row(i) = table.lookup(toks.tokens[i], &oov).transpose();
    out.oov[i] = oov;
  }
  for (const auto& e : entities)
    out.entity_token_spans.push_back(resolve_entity_tokens(toks, e, id));
  return out;
}

Eigen::MatrixXf pool_wordpieces(const Eigen::MatrixXf& pieces,
                                const std::vector<int>& piece_to_word, int n_words) {
  if (static_cast<size_t>(pieces.rows()) != piece_to_word.size())
    throw Error(ErrorCode::Validation, "pool_wordpieces: alignment length mismatch");
  Eigen::MatrixXf out = Eigen::MatrixXf::Zero(n_words, pieces.cols());
  std::vector<int> counts(n_words, 0);
  for (int p = 0; p < pieces.rows(); ++p) {
    const int w = piece_to_word[p];
    if (w < 0) continue;  // special token, dropped
    if (w >= n_words)
      throw Error(ErrorCode::Validation, "pool_wordpieces: word index out of range");
    out.row(w) += pieces.row(p);
    counts[w]++;
  }
  for (int w = 0; w < n_words; ++w) {
    if (counts[w] == 0)
      throw Error(ErrorCode::Validation,
                  "pool_wordpieces: word " + std::to_string(w) + " has no pieces");
    out.row(w) /= static_cast<float>(counts[w]);
  }
  return out;
}

ContextualStore ContextualStore::open(const std::filesystem::path& index_json,
                                      const std::filesystem::path& bin) {
  std::ifstream in(index_json);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open " + index_json.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, index_json.string() + ": " + e.what());
  }
  ContextualStore store;
  store.bin_path_ = bin;
  for (auto it = j.begin(); it != j.end(); ++it) {
    Entry e;
    e.offset = it.value().at("offset").get<uint64_t>();
    e.n = it.value().at("n").get<int>();
    e.d0 = it.value().at("d0").get<int>();
    if (store.d0_ == 0) store.d0_ = e.d0;
    if (e.d0 != store.d0_)
      throw Error(ErrorCode::Validation, index_json.string() + ": mixed d0 widths");
    store.index_[it.key()] = e;
  }
  return store;
}

bool ContextualStore::contains(const std::string& id) const {
  return index_.count(id) > 0;
}

Eigen::MatrixXf ContextualStore::load(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw Error(ErrorCode::Validation, "contextual store: no record for id " + id);
  const Entry& e = it->second;
  std::ifstream in(bin_path_, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open " + bin_path_.string());
  in.seekg(static_cast<std::streamoff>(e.offset * sizeof(float)));
  std::vector<float> buf(static_cast<size_t>(e.n) * e.d0);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in)
    throw Error(ErrorCode::Io, "contextual store: short read for id " + id);
  Eigen::MatrixXf m(e.n, e.d0);
  for (int r = 0; r < e.n; ++r)
    for (int c = 0; c < e.d0; ++c) m(r, c) = buf[static_cast<size_t>(r) * e.d0 + c];
  return m;
}

void ContextualStore::write(
    const std::filesystem::path& index_json, const std::filesystem::path& bin,
    const std::vector<std::pair<std::string, Eigen::MatrixXf>>& records) {
  std::ofstream out(bin, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::Io, "cannot open " + bin.string() + " for writing");
  json index = json::object();
  uint64_t offset = 0;
  for (const auto& [id, m] : records) {
    index[id] = {{"offset", offset},
                 {"n", static_cast<int>(m.rows())},
                 {"d0", static_cast<int>(m.cols())}};
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) {
        const float v = m(r, c);
        out.write(reinterpret_cast<const char*>(&v), sizeof(float));
      }
    offset += static_cast<uint64_t>(m.rows()) * m.cols();
  }
  out.close();
  std::ofstream idx(index_json);
  if (!idx)
    throw Error(ErrorCode::Io, "cannot open " + index_json.string() + " for writing");
  idx << index.dump(2) << "\n";
}

}  // namespace saecon
