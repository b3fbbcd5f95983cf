#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "saecon/eval.hpp"
#include "saecon/model.hpp"

namespace saecon {

struct TrainConfig {
  double lr = 5e-4;
  LossWeights loss_weights;
  ClassWeights class_weights{{{CpcLabel::Better, 2.0},
                              {CpcLabel::Worse, 4.0},
                              {CpcLabel::None, 1.0}}};
  BatchSchedule schedule;
  int epochs = 15;
  uint64_t seed = 42;
  AdamConfig adam;
  int lr_step_epochs = 3;
  double lr_gamma = 0.8;
};

// One row per epoch per active task; dev metrics are evaluated at the epoch
// boundary and repeated on both rows.
struct MetricRow {
  int epoch = 0;  // 1-based
  std::string task;
  double lr = 0;
  double loss_c = 0;
  double loss_s = 0;
  double loss_d = 0;
  double dev_micro_f1 = 0;
  double dev_f1_b = 0;
  double dev_f1_w = 0;
  double dev_f1_n = 0;
};

std::string metric_log_to_csv(const std::vector<MetricRow>& rows);

// argmax of dev micro-F1; ties break toward the earlier epoch. 1-based.
int select_best(const std::vector<double>& dev_micro_per_epoch);

// lr for a 1-based epoch under step decay.
inline double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  const int decays = (epoch - 1) / cfg.lr_step_epochs;
  double lr = cfg.lr;
  for (int i = 0; i < decays; ++i) lr *= cfg.lr_gamma;
  return lr;
}

struct TensorInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool trainable = true;
};

// Manifest + packed float32 payload (row-major, manifest order). Reload
// reproduces bit-identical forward outputs.
struct Checkpoint {
  ModelConfig model_config;
  std::vector<std::pair<int, std::string>> label_vocab;
  uint64_t init_seed = 0;
  int epoch = 0;
  double dev_micro_f1 = 0;
  uint64_t seed = 0;
  std::map<std::string, std::string> config_echo;
  std::vector<TensorInfo> tensors;
  std::vector<float> payload;
};

Checkpoint snapshot_model(const SaeconModel<float>& model, const LabelVocab& vocab,
                          uint64_t init_seed, int epoch, double dev_micro_f1,
                          uint64_t seed,
                          const std::map<std::string, std::string>& config_echo);

// Writes manifest.json + tensors.bin into dir (created if absent).
void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& dir);
Checkpoint load_checkpoint_file(const std::filesystem::path& dir);

// Copies payload values into a model built from the same config; throws on
// the first name/shape divergence.
void restore_into(SaeconModel<float>& model, const Checkpoint& cp);

// Convenience: rebuild the model a checkpoint describes and load its values.
SaeconModel<float> load_checkpoint(const std::filesystem::path& dir,
                                   Checkpoint* meta_out = nullptr);

struct TrainResult {
  std::vector<MetricRow> log;
  std::vector<double> dev_micro_per_epoch;
  int best_epoch = 0;  // 1-based
  double best_dev_micro = 0;
  Checkpoint best;
  int epochs_run = 0;
};

// Alternating two-task optimization. Runs cfg.epochs epochs (an epoch = one
// CPC pass) unless `continue_after_epoch` returns false earlier. absa_train
// may be empty when the analyzer branch is disabled; dev drives model
// selection and must be nonempty.
TrainResult train(SaeconModel<float>& model, const std::vector<EncodedCpc>& cpc_train,
                  const std::vector<EncodedCpc>& cpc_dev,
                  const std::vector<EncodedAbsa>& absa_train, const TrainConfig& cfg,
                  const LabelVocab& vocab, uint64_t model_init_seed,
                  const std::map<std::string, std::string>& config_echo = {},
                  const std::function<bool(int)>& continue_after_epoch = nullptr);

std::vector<CpcLabel> predict_all(const SaeconModel<float>& model,
                                  const std::vector<EncodedCpc>& data);

}  // namespace saecon
