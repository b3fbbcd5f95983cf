#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "saecon/dataset.hpp"
#include "saecon/model.hpp"
#include "saecon/train.hpp"

namespace saecon {

enum class ImbalanceMode { Weighted, Flip, Upsample, None };

// Flat key=value configuration with section prefixes (train.lr,
// data.cpc_train, model.d_g). Unknown keys are rejected; defaults match the
// published settings. Flag overrides win over file values.
struct RunConfig {
  // data.*
  std::string cpc_train;
  std::string cpc_test;
  std::string cpc_format = "jsonl";  // jsonl|csv
  std::string absa_train;
  std::string parses_cpc;
  std::string parses_cpc_test;
  std::string parses_absa;
  std::string parse_source = "chain";  // chain|conllu
  std::string encoder = "static";      // static|contextual
  std::string embeddings;
  std::string contextual_index;
  std::string contextual_bin;
  std::string imbalance = "weighted";  // weighted|flip|upsample|none

  // model.*
  int d_g = 240;
  std::vector<int> sgcn_dims = {256, 240};
  int d_a = 240;
  int d_s = 240;
  int window_r = 3;
  int proj_dim = 128;
  int head_hidden = 64;
  double alpha = 1.0;
  bool use_bilstm = true;
  bool use_sgcn = true;
  bool use_analyzer = true;
  bool use_grl_dc = true;
  bool sgcn_directed = true;
  bool sgcn_gated = true;
  std::string sgcn_agg = "sum";  // sum|mean

  // train.*
  double lr = 5e-4;
  int epochs = 15;
  int batch_size = 16;
  int ratio_cpc = 1;
  int ratio_absa = 1;
  double lambda = 1e-4;
  double lambda_s = 1.0;
  double lambda_d = 1.0;
  std::string class_weight_mode = "configured";  // configured|uniform|inverse_freq
  std::vector<double> class_weight_values = {2, 4, 1};
  double beta1 = 0.9;
  double beta2 = 0.999;
  int lr_step = 3;
  double lr_gamma = 0.8;
  uint64_t seed = 42;

  void set(const std::string& key, const std::string& value);

  ModelConfig model_config(int d0, int num_labels) const;
  TrainConfig train_config(const ClassCounts& train_counts) const;
  ImbalanceMode imbalance_mode() const;
  EncoderMode encoder_mode() const;
  ParseSource parse_source_mode() const;
  CpcFormat cpc_format_mode() const;

  // Effective configuration as sorted key=value lines.
  std::map<std::string, std::string> to_map() const;
  std::string echo() const;
};

RunConfig parse_config_file(const std::filesystem::path& path);
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& key_values);

}  // namespace saecon
