#include "saecon/pipeline.hpp"

#include <iostream>

namespace saecon {

PipelineData run_pipeline(const RunConfig& cfg, const LabelVocab* frozen_vocab) {
  PipelineData data;
  if (cfg.cpc_train.empty())
    throw Error(ErrorCode::Config, "data.cpc_train is required");

  auto train_raw = load_cpc(cfg.cpc_train, cfg.cpc_format_mode());
  if (!cfg.cpc_test.empty()) {
    auto test_raw = load_cpc(cfg.cpc_test, cfg.cpc_format_mode());
    data.splits = make_splits(train_raw, test_raw, cfg.seed);
  } else {
    data.splits = make_splits(train_raw, cfg.seed);
  }

  switch (cfg.imbalance_mode()) {
    case ImbalanceMode::Flip:
      data.splits.train = flip_augment(data.splits.train);
      break;
    case ImbalanceMode::Upsample:
      data.splits.train = upsample(data.splits.train);
      break;
    default:
      break;
  }
  data.splits.train_counts = count_labels(data.splits.train);

  if (!cfg.absa_train.empty()) data.absa = load_absa(cfg.absa_train);

  EncoderResources res;
  if (cfg.encoder_mode() == EncoderMode::Static) {
    if (cfg.embeddings.empty())
      throw Error(ErrorCode::Config, "data.embeddings required for the static encoder");
    data.table = std::make_shared<EmbeddingTable>(load_static_embeddings(cfg.embeddings));
    res.mode = EncoderMode::Static;
    res.table = data.table.get();
  } else {
    if (cfg.contextual_index.empty() || cfg.contextual_bin.empty())
      throw Error(ErrorCode::Config,
                  "data.contextual_index and data.contextual_bin required for the "
                  "contextual encoder");
    data.store = std::make_shared<ContextualStore>(
        ContextualStore::open(cfg.contextual_index, cfg.contextual_bin));
    res.mode = EncoderMode::Contextual;
    res.store = data.store.get();
  }
  res.parse_source = cfg.parse_source_mode();
  data.d0 = res.d0();

  std::optional<ParseMap> train_parses;
  std::optional<ParseMap> test_parses;
  if (res.parse_source == ParseSource::Conllu) {
    if (cfg.parses_cpc.empty())
      throw Error(ErrorCode::Config, "data.parses_cpc required with parse_source=conllu");
    train_parses = ParseMap::from_conllu(cfg.parses_cpc, train_raw);
    if (!cfg.cpc_test.empty()) {
      if (cfg.parses_cpc_test.empty())
        throw Error(ErrorCode::Config,
                    "data.parses_cpc_test required with a pre-split test file");
      auto test_raw = load_cpc(cfg.cpc_test, cfg.cpc_format_mode());
      test_parses = ParseMap::from_conllu(cfg.parses_cpc_test, test_raw);
    }
  }

  if (frozen_vocab) data.vocab = *frozen_vocab;
  const bool grow = frozen_vocab == nullptr;

  const ParseMap* train_map = train_parses ? &*train_parses : nullptr;
  const ParseMap* test_map = test_parses ? &*test_parses : train_map;
  data.train = encode_cpc_corpus(data.splits.train, res, train_map, data.vocab, grow);
  data.dev = encode_cpc_corpus(data.splits.dev, res, train_map, data.vocab, false);
  data.test = encode_cpc_corpus(data.splits.test, res, test_map, data.vocab, false);

  if (!data.absa.empty()) {
    // The default analyzer is graph-free; ABSA sentences take chain parses
    // unless a CoNLL-U sidecar is supplied.
    EncoderResources absa_res = res;
    std::optional<ParseMap> absa_parses;
    if (res.parse_source == ParseSource::Conllu && !cfg.parses_absa.empty()) {
      absa_parses = ParseMap::from_conllu(cfg.parses_absa, data.absa);
    } else {
      absa_res.parse_source = ParseSource::Chain;
    }
    data.absa_encoded =
        encode_absa_corpus(data.absa, absa_res,
                           absa_parses ? &*absa_parses : nullptr, data.vocab, grow);
  }
  return data;
}

}  // namespace saecon
