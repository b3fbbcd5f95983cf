#include "saecon/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace saecon {

using json = nlohmann::json;

std::string metric_log_to_csv(const std::vector<MetricRow>& rows) {
  std::ostringstream os;
  os << "epoch,task,lr,loss_c,loss_s,loss_d,dev_micro_f1,dev_f1_b,dev_f1_w,dev_f1_n\n";
  os << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.epoch << "," << r.task << "," << r.lr << "," << r.loss_c << "," << r.loss_s
       << "," << r.loss_d << "," << r.dev_micro_f1 << "," << r.dev_f1_b << ","
       << r.dev_f1_w << "," << r.dev_f1_n << "\n";
  }
  return os.str();
}

int select_best(const std::vector<double>& dev_micro_per_epoch) {
  if (dev_micro_per_epoch.empty())
    throw Error(ErrorCode::Validation, "select_best: empty metric log");
  int best = 0;
  for (int i = 1; i < static_cast<int>(dev_micro_per_epoch.size()); ++i)
    if (dev_micro_per_epoch[i] > dev_micro_per_epoch[best]) best = i;
  return best + 1;
}

namespace {

json model_config_to_json(const ModelConfig& m) {
  return json{{"d0", m.d0},
              {"d_g", m.d_g},
              {"sgcn_dims", m.sgcn_dims},
              {"d_a", m.d_a},
              {"d_s", m.d_s},
              {"window_r", m.window_r},
              {"proj_dim", m.proj_dim},
              {"head_hidden", m.head_hidden},
              {"num_labels", m.num_labels},
              {"alpha", m.alpha},
              {"use_bilstm", m.use_bilstm},
              {"use_sgcn", m.use_sgcn},
              {"use_analyzer", m.use_analyzer},
              {"use_grl_dc", m.use_grl_dc},
              {"sgcn_directed", m.sgcn_directed},
              {"sgcn_gated", m.sgcn_gated},
              {"sgcn_agg", m.sgcn_agg == SgcnAgg::Sum ? "sum" : "mean"}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig m;
  m.d0 = j.at("d0").get<int>();
  m.d_g = j.at("d_g").get<int>();
  m.sgcn_dims = j.at("sgcn_dims").get<std::vector<int>>();
  m.d_a = j.at("d_a").get<int>();
  m.d_s = j.at("d_s").get<int>();
  m.window_r = j.at("window_r").get<int>();
  m.proj_dim = j.at("proj_dim").get<int>();
  m.head_hidden = j.at("head_hidden").get<int>();
  m.num_labels = j.at("num_labels").get<int>();
  m.alpha = j.at("alpha").get<double>();
  m.use_bilstm = j.at("use_bilstm").get<bool>();
  m.use_sgcn = j.at("use_sgcn").get<bool>();
  m.use_analyzer = j.at("use_analyzer").get<bool>();
  m.use_grl_dc = j.at("use_grl_dc").get<bool>();
  m.sgcn_directed = j.at("sgcn_directed").get<bool>();
  m.sgcn_gated = j.at("sgcn_gated").get<bool>();
  m.sgcn_agg = j.at("sgcn_agg").get<std::string>() == "mean" ? SgcnAgg::Mean
                                                             : SgcnAgg::Sum;
  return m;
}

}  // namespace

Checkpoint snapshot_model(const SaeconModel<float>& model, const LabelVocab& vocab,
                          uint64_t init_seed, int epoch, double dev_micro_f1,
                          uint64_t seed,
                          const std::map<std::string, std::string>& config_echo) {
  Checkpoint cp;
  cp.model_config = model.config();
  cp.label_vocab = vocab.entries();
  cp.init_seed = init_seed;
  cp.epoch = epoch;
  cp.dev_micro_f1 = dev_micro_f1;
  cp.seed = seed;
  cp.config_echo = config_echo;
  for (const auto& p : model.params().all()) {
    cp.tensors.push_back({p->name, static_cast<int>(p->value.rows()),
                          static_cast<int>(p->value.cols()), p->trainable});
    for (Eigen::Index r = 0; r < p->value.rows(); ++r)
      for (Eigen::Index c = 0; c < p->value.cols(); ++c)
        cp.payload.push_back(p->value(r, c));
  }
  return cp;
}

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["format"] = "saecon-checkpoint-v1";
  manifest["epoch"] = cp.epoch;
  manifest["dev_micro_f1"] = cp.dev_micro_f1;
  manifest["seed"] = cp.seed;
  manifest["init_seed"] = cp.init_seed;
  manifest["model"] = model_config_to_json(cp.model_config);
  json vocab = json::array();
  for (const auto& [id, key] : cp.label_vocab) vocab.push_back({{"id", id}, {"key", key}});
  manifest["label_vocab"] = vocab;
  manifest["hyperparameters"] = cp.config_echo;
  json tensors = json::array();
  uint64_t offset = 0;
  for (const auto& t : cp.tensors) {
    tensors.push_back({{"name", t.name},
                       {"rows", t.rows},
                       {"cols", t.cols},
                       {"trainable", t.trainable},
                       {"offset", offset}});
    offset += static_cast<uint64_t>(t.rows) * t.cols;
  }
  manifest["parameters"] = tensors;

  std::ofstream mf(dir / "manifest.json");
  if (!mf)
    throw Error(ErrorCode::Io, "cannot write " + (dir / "manifest.json").string());
  mf << manifest.dump(2) << "\n";

  std::ofstream bf(dir / "tensors.bin", std::ios::binary);
  if (!bf)
    throw Error(ErrorCode::Io, "cannot write " + (dir / "tensors.bin").string());
  bf.write(reinterpret_cast<const char*>(cp.payload.data()),
           static_cast<std::streamsize>(cp.payload.size() * sizeof(float)));
  if (!bf)
    throw Error(ErrorCode::Io, "checkpoint payload write failed");
}

Checkpoint load_checkpoint_file(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf)
    throw Error(ErrorCode::Io, "cannot open " + (dir / "manifest.json").string());
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, (dir / "manifest.json").string() + ": " + e.what());
  }
  Checkpoint cp;
  cp.epoch = manifest.at("epoch").get<int>();
  cp.dev_micro_f1 = manifest.at("dev_micro_f1").get<double>();
  cp.seed = manifest.at("seed").get<uint64_t>();
  cp.init_seed = manifest.at("init_seed").get<uint64_t>();
  cp.model_config = model_config_from_json(manifest.at("model"));
  for (const auto& v : manifest.at("label_vocab"))
    cp.label_vocab.emplace_back(v.at("id").get<int>(), v.at("key").get<std::string>());
  if (manifest.contains("hyperparameters"))
    cp.config_echo =
        manifest.at("hyperparameters").get<std::map<std::string, std::string>>();
  uint64_t expected = 0;
  for (const auto& t : manifest.at("parameters")) {
    TensorInfo info{t.at("name").get<std::string>(), t.at("rows").get<int>(),
                    t.at("cols").get<int>(), t.at("trainable").get<bool>()};
    expected += static_cast<uint64_t>(info.rows) * info.cols;
    cp.tensors.push_back(std::move(info));
  }

  std::ifstream bf(dir / "tensors.bin", std::ios::binary);
  if (!bf)
    throw Error(ErrorCode::Io, "cannot open " + (dir / "tensors.bin").string());
  cp.payload.resize(expected);
  bf.read(reinterpret_cast<char*>(cp.payload.data()),
          static_cast<std::streamsize>(expected * sizeof(float)));
  if (static_cast<uint64_t>(bf.gcount()) != expected * sizeof(float))
    throw Error(ErrorCode::Io,
                "tensors.bin truncated: expected " + std::to_string(expected) +
                    " floats, read " + std::to_string(bf.gcount() / sizeof(float)));
  return cp;
}

void restore_into(SaeconModel<float>& model, const Checkpoint& cp) {
  const auto& params = model.params().all();
  if (params.size() != cp.tensors.size())
    throw Error(ErrorCode::Validation,
                "checkpoint has " + std::to_string(cp.tensors.size()) +
                    " tensors but model has " + std::to_string(params.size()));
  size_t offset = 0;
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& t = cp.tensors[i];
    auto& p = *params[i];
    if (p.name != t.name)
      throw Error(ErrorCode::Validation, "checkpoint tensor " + std::to_string(i) +
                                             " is \"" + t.name + "\" but model expects \"" +
                                             p.name + "\"");
    if (p.value.rows() != t.rows || p.value.cols() != t.cols)
      throw Error(ErrorCode::Validation,
                  t.name + ": checkpoint shape " + std::to_string(t.rows) + "x" +
                      std::to_string(t.cols) + " but model shape " +
                      std::to_string(p.value.rows()) + "x" +
                      std::to_string(p.value.cols()));
    for (int r = 0; r < t.rows; ++r)
      for (int c = 0; c < t.cols; ++c) p.value(r, c) = cp.payload[offset++];
  }
}

SaeconModel<float> load_checkpoint(const std::filesystem::path& dir,
                                   Checkpoint* meta_out) {
  Checkpoint cp = load_checkpoint_file(dir);
  SaeconModel<float> model(cp.model_config, cp.init_seed);
  restore_into(model, cp);
  if (meta_out) *meta_out = std::move(cp);
  return model;
}

std::vector<CpcLabel> predict_all(const SaeconModel<float>& model,
                                  const std::vector<EncodedCpc>& data) {
  std::vector<CpcLabel> preds;
  preds.reserve(data.size());
  for (const auto& inst : data) preds.push_back(model.predict_cpc(inst));
  return preds;
}

TrainResult train(SaeconModel<float>& model, const std::vector<EncodedCpc>& cpc_train,
                  const std::vector<EncodedCpc>& cpc_dev,
                  const std::vector<EncodedAbsa>& absa_train, const TrainConfig& cfg,
                  const LabelVocab& vocab, uint64_t model_init_seed,
                  const std::map<std::string, std::string>& config_echo,
                  const std::function<bool(int)>& continue_after_epoch) {
  if (cpc_train.empty())
    throw Error(ErrorCode::Validation, "train: empty CPC training set");
  if (cpc_dev.empty())
    throw Error(ErrorCode::Validation, "train: dev set required for model selection");
  const bool absa_active = model.config().use_analyzer && !absa_train.empty();
  if (!absa_active && model.config().use_grl_dc && model.config().use_analyzer)
    std::cerr << "[saecon] warning: domain classifier active but no ABSA data; "
                 "domain loss sees only CPC-domain labels\n";

  AltBatchIterator iterator(cpc_train.size(), absa_active ? absa_train.size() : 0,
                            cfg.schedule, cfg.seed);
  Adam<float> opt(cfg.adam);
  TrainResult result;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    double sum_c = 0, sum_s = 0, sum_d_cpc = 0, sum_d_absa = 0;
    size_t n_cpc = 0, n_absa = 0;
    size_t batch_index = 0;

    while (true) {
      TaskBatch batch = iterator.next();
      ++batch_index;
      Tape<float> tape;
      float total = 0;
      if (batch.task == Task::Cpc) {
        std::vector<CpcForward<float>> outs;
        std::vector<const EncodedCpc*> insts;
        outs.reserve(batch.indices.size());
        for (size_t idx : batch.indices) {
          insts.push_back(&cpc_train[idx]);
          outs.push_back(model.cpc_forward(tape, cpc_train[idx]));
        }
        LossBundle<float> bundle =
            model.cpc_batch_loss(tape, outs, insts, cfg.class_weights, cfg.loss_weights);
        total = bundle.total_value;
        if (!std::isfinite(total))
          throw Error(ErrorCode::Numeric,
                      "non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                          std::to_string(batch_index) + " (CPC)");
        tape.backward(bundle.total);
        sum_c += bundle.loss_c;
        sum_d_cpc += bundle.loss_d;
        ++n_cpc;
      } else {
        std::vector<AbsaForward<float>> outs;
        std::vector<const EncodedAbsa*> insts;
        outs.reserve(batch.indices.size());
        for (size_t idx : batch.indices) {
          insts.push_back(&absa_train[idx]);
          outs.push_back(model.absa_forward(tape, absa_train[idx]));
        }
        LossBundle<float> bundle = model.absa_batch_loss(tape, outs, insts, cfg.loss_weights);
        total = bundle.total_value;
        if (!std::isfinite(total))
          throw Error(ErrorCode::Numeric,
                      "non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                          std::to_string(batch_index) + " (ABSA)");
        tape.backward(bundle.total);
        sum_s += bundle.loss_s;
        sum_d_absa += bundle.loss_d;
        ++n_absa;
      }
      opt.step(model.params(), lr);
      if (batch.task == Task::Cpc && iterator.epoch_boundary()) break;
    }

    std::vector<CpcLabel> dev_preds = predict_all(model, cpc_dev);
    std::vector<CpcLabel> dev_golds;
    dev_golds.reserve(cpc_dev.size());
    for (const auto& inst : cpc_dev) dev_golds.push_back(inst.label);
    EvalReport dev = f1_report(dev_preds, dev_golds);
    result.dev_micro_per_epoch.push_back(dev.micro_f1);

    MetricRow row;
    row.epoch = epoch;
    row.task = "cpc";
    row.lr = lr;
    row.loss_c = n_cpc ? sum_c / static_cast<double>(n_cpc) : 0;
    row.loss_d = n_cpc ? sum_d_cpc / static_cast<double>(n_cpc) : 0;
    row.dev_micro_f1 = dev.micro_f1;
    row.dev_f1_b = dev.f1[0];
    row.dev_f1_w = dev.f1[1];
    row.dev_f1_n = dev.f1[2];
    result.log.push_back(row);
    if (absa_active) {
      MetricRow arow = row;
      arow.task = "absa";
      arow.loss_c = 0;
      arow.loss_s = n_absa ? sum_s / static_cast<double>(n_absa) : 0;
      arow.loss_d = n_absa ? sum_d_absa / static_cast<double>(n_absa) : 0;
      result.log.push_back(arow);
    }

    if (result.best_epoch == 0 || dev.micro_f1 > result.best_dev_micro) {
      result.best_epoch = epoch;
      result.best_dev_micro = dev.micro_f1;
      result.best = snapshot_model(model, vocab, model_init_seed, epoch, dev.micro_f1,
                                   cfg.seed, config_echo);
    }
    result.epochs_run = epoch;
    if (continue_after_epoch && !continue_after_epoch(epoch)) break;
  }
  return result;
}

}  // namespace saecon
