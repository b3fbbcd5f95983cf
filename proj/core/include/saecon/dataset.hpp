#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "saecon/context.hpp"
#include "saecon/corpus.hpp"
#include "saecon/encode.hpp"

namespace saecon {

// Instance with all encoder resources applied: token vectors, resolved
// graph, and entity token spans. Immutable during training.
struct EncodedCpc {
  std::string id;
  Eigen::MatrixXf s0;  // d0 x n (token vectors as columns)
  ResolvedGraph graph;
  std::pair<int, int> tokens_a;  // inclusive token span of entity_a
  std::pair<int, int> tokens_b;
  bool swap_query = false;
  CpcLabel label = CpcLabel::None;

  std::pair<int, int> query_first() const { return swap_query ? tokens_b : tokens_a; }
  std::pair<int, int> query_second() const { return swap_query ? tokens_a : tokens_b; }
};

struct EncodedAbsa {
  std::string id;
  Eigen::MatrixXf s0;
  ResolvedGraph graph;
  std::pair<int, int> aspect_tokens;
  SentiLabel sentiment = SentiLabel::Neu;
  DomainLabel domain = DomainLabel::AbsaDomain;
};

enum class EncoderMode { Static, Contextual };
enum class ParseSource { Conllu, Chain };

// Shared encoding resources. The embedding table serves Static mode, the
// contextual sidecar serves Contextual mode; parses come from CoNLL-U
// sidecars or the built-in chain fallback.
struct EncoderResources {
  EncoderMode mode = EncoderMode::Static;
  const EmbeddingTable* table = nullptr;
  const ContextualStore* store = nullptr;
  ParseSource parse_source = ParseSource::Chain;

  int d0() const;
};

// CoNLL-U blocks keyed by instance id. Blocks align one-to-one, in order,
// with the originally loaded corpus; "# sent_id" comments are cross-checked
// when present. Augmented instance ids ("...#flip", "...#upK") resolve to
// their base instance's parse.
class ParseMap {
 public:
  template <typename Inst>
  static ParseMap from_conllu(const std::filesystem::path& path,
                              const std::vector<Inst>& original) {
    std::vector<std::string> ids;
    ids.reserve(original.size());
    for (const auto& inst : original) ids.push_back(inst.id);
    return build(path, ids);
  }

  const ConlluSentence* find(const std::string& id) const;

 private:
  static ParseMap build(const std::filesystem::path& path,
                        const std::vector<std::string>& ids);
  std::map<std::string, size_t> by_id_;
  std::vector<ConlluSentence> blocks_;
};

EncodedCpc encode_cpc_instance(const CpcInstance& inst, const EncoderResources& res,
                               const ConlluSentence* parse, LabelVocab& vocab,
                               bool grow_vocab);
EncodedAbsa encode_absa_instance(const AbsaInstance& inst, const EncoderResources& res,
                                 const ConlluSentence* parse, LabelVocab& vocab,
                                 bool grow_vocab);

// Bulk encoding. grow_vocab adds unseen dependency labels (training);
// otherwise they resolve to UNK (inference).
std::vector<EncodedCpc> encode_cpc_corpus(const std::vector<CpcInstance>& data,
                                          const EncoderResources& res,
                                          const ParseMap* parses, LabelVocab& vocab,
                                          bool grow_vocab);
std::vector<EncodedAbsa> encode_absa_corpus(const std::vector<AbsaInstance>& data,
                                            const EncoderResources& res,
                                            const ParseMap* parses, LabelVocab& vocab,
                                            bool grow_vocab);

}  // namespace saecon
