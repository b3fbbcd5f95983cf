#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "saecon/corpus.hpp"
#include "saecon/error.hpp"

namespace saecon {

struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<std::pair<size_t, size_t>> char_spans;  // code-point (start,end)

  size_t size() const { return tokens.size(); }
};

// Whitespace-plus-punctuation tokenizer with recorded code-point spans.
// Each punctuation code point becomes its own token.
TokenSequence tokenize(const std::string& sentence);

enum class EdgeDirection : int { Out = 0, Inv = 1, Self = 2 };
constexpr int kNumDirections = 3;
constexpr const char* kSelfDepType = "self";

struct GraphEdge {
  int source = 0;  // message flows source -> target
  int target = 0;
  std::string dep_type;
  EdgeDirection direction = EdgeDirection::Out;
};

// Directed labeled multigraph over token positions. For every parser edge
// (u,v,t) it holds (u,v,t,OUT) and (v,u,t,INV); every vertex carries one
// (v,v,"self",SELF) loop.
struct DependencyGraph {
  int num_vertices = 0;
  std::vector<GraphEdge> edges;
};

struct RawEdge {
  int head = 0;
  int dependent = 0;
  std::string dep_type;
};

// (direction, dep_type) -> dense id, with a reserved UNK for dep types not
// seen while building. Direction classes are always exact.
class LabelVocab {
 public:
  LabelVocab();

  int add(EdgeDirection dir, const std::string& dep_type);       // grows vocab
  int lookup(EdgeDirection dir, const std::string& dep_type) const;  // UNK fallback
  int unk_id() const { return 0; }
  int size() const { return static_cast<int>(ids_.size()) + 1; }  // incl. UNK

  // Stable listing for serialization, ordered by id (UNK excluded).
  std::vector<std::pair<int, std::string>> entries() const;
  static LabelVocab from_entries(const std::vector<std::pair<int, std::string>>& entries);

 private:
  static std::string key(EdgeDirection dir, const std::string& dep_type);
  std::map<std::string, int> ids_;
};

DependencyGraph build_graph(const TokenSequence& toks, const std::vector<RawEdge>& raw,
                            LabelVocab* vocab = nullptr);

// Chain fallback used when no parser output is supplied: token i is headed
// by token i+1 with a generic dep type.
std::vector<RawEdge> chain_edges(size_t n_tokens);

struct ConlluSentence {
  TokenSequence tokens;
  std::vector<RawEdge> edges;
  std::string sent_id;  // from "# sent_id = ..." when present
};

std::vector<ConlluSentence> load_conllu(const std::filesystem::path& path);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  size_t size() const { return vectors_.size(); }

  void insert(const std::string& token, Eigen::VectorXf vec);
  // Case-folded exact match; OOV yields a zero vector and oov=true.
  Eigen::VectorXf lookup(const std::string& token, bool* oov = nullptr) const;
  bool contains(const std::string& token) const;

  const std::unordered_map<std::string, Eigen::VectorXf>& entries() const {
    return vectors_;
  }

 private:
  int dim_ = 0;
  std::unordered_map<std::string, Eigen::VectorXf> vectors_;
};

// Text format: `token v1 ... v_d` per line; ragged rows are an error.
EmbeddingTable load_static_embeddings(const std::filesystem::path& path);

struct EmbeddedSentence {
  Eigen::MatrixXf vectors;  // n x d0, row i = token i
  std::vector<std::pair<int, int>> entity_token_spans;  // inclusive (first,last)
  std::vector<bool> oov;    // per token

  int n() const { return static_cast<int>(vectors.rows()); }
  int d0() const { return static_cast<int>(vectors.cols()); }
};

// Resolves entity character spans to token spans by character overlap.
// Throws when an entity intersects no token; `id` names the instance.
std::pair<int, int> resolve_entity_tokens(const TokenSequence& toks,
                                          const EntitySpan& span, const std::string& id);

EmbeddedSentence embed_sentence(const TokenSequence& toks, const EmbeddingTable& table,
                                const std::vector<EntitySpan>& entities,
                                const std::string& id = "");

// Mean-pools wordpiece vectors into word vectors. piece_to_word maps each
// piece row to its word index, or -1 for special tokens (dropped).
Eigen::MatrixXf pool_wordpieces(const Eigen::MatrixXf& pieces,
                                const std::vector<int>& piece_to_word, int n_words);

// Sidecar of precomputed contextual vectors: tensors.bin holds n x d0
// little-endian float32 blocks (row-major), index.json maps instance id to
// {offset (floats), n, d0}.
class ContextualStore {
 public:
  static ContextualStore open(const std::filesystem::path& index_json,
                              const std::filesystem::path& bin);
  Eigen::MatrixXf load(const std::string& id) const;  // n x d0
  bool contains(const std::string& id) const;
  int d0() const { return d0_; }

  // Writer used to produce fixtures and caches.
  static void write(const std::filesystem::path& index_json,
                    const std::filesystem::path& bin,
                    const std::vector<std::pair<std::string, Eigen::MatrixXf>>& records);

 private:
  struct Entry {
    uint64_t offset = 0;  // in floats
    int n = 0;
    int d0 = 0;
  };
  std::filesystem::path bin_path_;
  std::map<std::string, Entry> index_;
  int d0_ = 0;
};

}  // namespace saecon
