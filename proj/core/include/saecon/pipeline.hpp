#pragma once

#include <memory>
#include <optional>

#include "saecon/config.hpp"
#include "saecon/dataset.hpp"

namespace saecon {

// Everything a command needs after ingestion: raw splits, encoder
// resources, the dependency-label vocabulary grown on train, and encoded
// datasets ready for the model.
struct PipelineData {
  SplitBundle splits;
  std::vector<AbsaInstance> absa;

  std::shared_ptr<EmbeddingTable> table;
  std::shared_ptr<ContextualStore> store;
  LabelVocab vocab;
  int d0 = 0;

  std::vector<EncodedCpc> train;
  std::vector<EncodedCpc> dev;
  std::vector<EncodedCpc> test;
  std::vector<EncodedAbsa> absa_encoded;
};

// Loads corpora, applies splits and the configured imbalance treatment to
// the train partition, then encodes everything. With a frozen vocabulary
// (from a checkpoint) unseen dependency labels map to UNK.
PipelineData run_pipeline(const RunConfig& cfg,
                          const LabelVocab* frozen_vocab = nullptr);

}  // namespace saecon
