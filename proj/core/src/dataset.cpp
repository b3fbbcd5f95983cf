#include "saecon/dataset.hpp"

#include "saecon/utf8.hpp"

namespace saecon {

int EncoderResources::d0() const {
  if (mode == EncoderMode::Static) {
    if (!table)
      throw Error(ErrorCode::Config, "static encoder mode without an embedding table");
    return table->dim();
  }
  if (!store)
    throw Error(ErrorCode::Config, "contextual encoder mode without a sidecar store");
  return store->d0();
}

ParseMap ParseMap::build(const std::filesystem::path& path,
                         const std::vector<std::string>& ids) {
  ParseMap map;
  map.blocks_ = load_conllu(path);
  if (map.blocks_.size() != ids.size())
    throw Error(ErrorCode::Validation,
                path.string() + ": " + std::to_string(map.blocks_.size()) +
                    " parse blocks for " + std::to_string(ids.size()) + " instances");
  for (size_t i = 0; i < ids.size(); ++i) {
    const auto& sid = map.blocks_[i].sent_id;
    if (!sid.empty() && sid != ids[i])
      throw Error(ErrorCode::Validation,
                  path.string() + ": parse block " + std::to_string(i) +
                      " has sent_id \"" + sid + "\" but instance id is \"" + ids[i] +
                      "\"");
    map.by_id_[ids[i]] = i;
  }
  return map;
}

const ConlluSentence* ParseMap::find(const std::string& id) const {
  // '#' is reserved for augmentation suffixes; copies share the base parse.
  const std::string base = id.substr(0, id.find('#'));
  auto it = by_id_.find(base);
  return it == by_id_.end() ? nullptr : &blocks_[it->second];
}

namespace {

// Aligns CoNLL-U FORMs against the raw sentence left-to-right to recover
// in-sentence character spans for each parse token.
TokenSequence align_parse_tokens(const ConlluSentence& parse,
                                 const std::string& sentence, const std::string& id) {
  const Utf8Text text = Utf8Text::decode(sentence);
  TokenSequence out;
  size_t cursor = 0;
  for (const auto& form : parse.tokens.tokens) {
    const Utf8Text f = Utf8Text::decode(form);
    bool found = false;
    for (size_t start = cursor; start + f.size() <= text.size(); ++start) {
      bool ok = true;
      for (size_t k = 0; k < f.size(); ++k)
        if (text.points[start + k] != f.points[k]) {
          ok = false;
          break;
        }
      if (ok) {
        out.tokens.push_back(form);
        out.char_spans.emplace_back(start, start + f.size());
        cursor = start + f.size();
        found = true;
        break;
      }
    }
    if (!found)
      throw Error(ErrorCode::Validation,
                  id + ": parse token \"" + form + "\" not found in sentence");
  }
  return out;
}

struct EncodedCommon {
  TokenSequence toks;
  Eigen::MatrixXf s0;  // d0 x n
  ResolvedGraph graph;
};

EncodedCommon encode_common(const std::string& id, const std::string& sentence,
                            const EncoderResources& res, const ConlluSentence* parse,
                            LabelVocab& vocab, bool grow_vocab) {
  EncodedCommon out;
  std::vector<RawEdge> raw;
  if (res.parse_source == ParseSource::Conllu) {
    if (!parse)
      throw Error(ErrorCode::Validation, id + ": no dependency parse available");
    out.toks = align_parse_tokens(*parse, sentence, id);
    raw = parse->edges;
  } else {
    out.toks = tokenize(sentence);
    raw = chain_edges(out.toks.size());
  }
  if (out.toks.size() == 0)
    throw Error(ErrorCode::Validation, id + ": sentence has no tokens");

  if (res.mode == EncoderMode::Static) {
    EmbeddedSentence emb = embed_sentence(out.toks, *res.table, {}, id);
    out.s0 = emb.vectors.transpose();
  } else {
    Eigen::MatrixXf m = res.store->load(id.substr(0, id.find('#')));
    if (static_cast<size_t>(m.rows()) != out.toks.size())
      throw Error(ErrorCode::Validation,
                  id + ": sidecar has " + std::to_string(m.rows()) +
                      " token vectors but sentence has " +
                      std::to_string(out.toks.size()) + " tokens");
    out.s0 = m.transpose();
  }

  DependencyGraph g = build_graph(out.toks, raw, grow_vocab ? &vocab : nullptr);
  out.graph = resolve_graph(g, vocab);
  return out;
}

}  // namespace

EncodedCpc encode_cpc_instance(const CpcInstance& inst, const EncoderResources& res,
                               const ConlluSentence* parse, LabelVocab& vocab,
                               bool grow_vocab) {
  EncodedCommon common =
      encode_common(inst.id, inst.sentence, res, parse, vocab, grow_vocab);
  EncodedCpc out;
  out.id = inst.id;
  out.s0 = std::move(common.s0);
  out.graph = std::move(common.graph);
  out.tokens_a = resolve_entity_tokens(common.toks, inst.entity_a, inst.id);
  out.tokens_b = resolve_entity_tokens(common.toks, inst.entity_b, inst.id);
  out.swap_query = inst.swap_query;
  out.label = inst.label;
  return out;
}

EncodedAbsa encode_absa_instance(const AbsaInstance& inst, const EncoderResources& res,
                                 const ConlluSentence* parse, LabelVocab& vocab,
                                 bool grow_vocab) {
  EncodedCommon common =
      encode_common(inst.id, inst.sentence, res, parse, vocab, grow_vocab);
  EncodedAbsa out;
  out.id = inst.id;
  out.s0 = std::move(common.s0);
  out.graph = std::move(common.graph);
  out.aspect_tokens = resolve_entity_tokens(common.toks, inst.aspect, inst.id);
  out.sentiment = inst.sentiment;
  out.domain = inst.domain;
  return out;
}

std::vector<EncodedCpc> encode_cpc_corpus(const std::vector<CpcInstance>& data,
                                          const EncoderResources& res,
                                          const ParseMap* parses, LabelVocab& vocab,
                                          bool grow_vocab) {
  std::vector<EncodedCpc> out;
  out.reserve(data.size());
  for (const auto& inst : data)
    out.push_back(encode_cpc_instance(inst, res, parses ? parses->find(inst.id) : nullptr,
                                      vocab, grow_vocab));
  return out;
}

std::vector<EncodedAbsa> encode_absa_corpus(const std::vector<AbsaInstance>& data,
                                            const EncoderResources& res,
                                            const ParseMap* parses, LabelVocab& vocab,
                                            bool grow_vocab) {
  std::vector<EncodedAbsa> out;
  out.reserve(data.size());
  for (const auto& inst : data)
    out.push_back(encode_absa_instance(inst, res,
                                       parses ? parses->find(inst.id) : nullptr, vocab,
                                       grow_vocab));
  return out;
}

}  // namespace saecon
