#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "saecon/eval.hpp"
#include "saecon/pipeline.hpp"
#include "saecon/train.hpp"
#include "saecon/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace saecon;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  int64_t seed = -1;
  std::string checkpoint;
};

RunConfig effective_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = parse_config_file(args.config_path);
  apply_overrides(cfg, args.overrides);
  if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
  return cfg;
}

void write_provenance(const fs::path& out, const RunConfig& cfg) {
  fs::create_directories(out);
  write_file(out / "config.effective", cfg.echo());
  std::ostringstream os;
  os << "saecon " << kVersion << "\n" << "seed=" << cfg.seed << "\n";
  write_file(out / "provenance.txt", os.str());
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_checkpoint = false) {
  cmd->add_option("--config", args.config_path, "flat key=value configuration file");
  cmd->add_option("--set", args.overrides, "override KEY=VALUE (repeatable)");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "seed override");
  if (with_checkpoint)
    cmd->add_option("--checkpoint", args.checkpoint, "checkpoint directory")
        ->required();
}

std::vector<CpcLabel> golds_of(const std::vector<CpcInstance>& data) {
  std::vector<CpcLabel> out;
  out.reserve(data.size());
  for (const auto& i : data) out.push_back(i.label);
  return out;
}

int run_prepare(const CommonArgs& args) {
  RunConfig cfg = effective_config(args);
  PipelineData data = run_pipeline(cfg);
  const fs::path out(args.out_dir);
  write_provenance(out, cfg);

  save_cpc_jsonl(data.splits.train, out / "cpc_train.jsonl");
  save_cpc_jsonl(data.splits.dev, out / "cpc_dev.jsonl");
  save_cpc_jsonl(data.splits.test, out / "cpc_test.jsonl");
  if (!data.absa.empty()) save_absa_jsonl(data.absa, out / "absa_train.jsonl");

  json vocab = json::array();
  for (const auto& [id, key] : data.vocab.entries())
    vocab.push_back({{"id", id}, {"key", key}});
  write_file(out / "label_vocab.json", vocab.dump(2) + "\n");

  // vocabulary-filtered embedding cache (static mode)
  if (data.table) {
    std::ofstream emb(out / "embeddings_filtered.txt");
    std::set<std::string> used;
    auto collect = [&](const std::string& sentence) {
      for (const auto& tok : tokenize(sentence).tokens) {
        std::string lower = tok;
        for (auto& c : lower) c = static_cast<char>(std::tolower(c));
        used.insert(lower);
      }
    };
    for (const auto* split : {&data.splits.train, &data.splits.dev, &data.splits.test})
      for (const auto& inst : *split) collect(inst.sentence);
    for (const auto& inst : data.absa) collect(inst.sentence);
    for (const auto& word : used) {
      const auto& entries = data.table->entries();
      auto it = entries.find(word);
      if (it == entries.end()) continue;
      emb << word;
      for (int i = 0; i < it->second.size(); ++i) emb << " " << it->second[i];
      emb << "\n";
    }
  }

  std::ostringstream counts;
  counts << "split,better,worse,none,total\n";
  auto row = [&](const char* name, const ClassCounts& c, size_t total) {
    counts << name << "," << c.at(CpcLabel::Better) << "," << c.at(CpcLabel::Worse)
           << "," << c.at(CpcLabel::None) << "," << total << "\n";
  };
  row("train", data.splits.train_counts, data.splits.train.size());
  row("dev", data.splits.dev_counts, data.splits.dev.size());
  row("test", data.splits.test_counts, data.splits.test.size());
  write_file(out / "class_counts.csv", counts.str());
  std::cerr << "[saecon] prepared corpora under " << out << "\n";
  return 0;
}

int run_train(const CommonArgs& args) {
  RunConfig cfg = effective_config(args);
  PipelineData data = run_pipeline(cfg);
  const fs::path out(args.out_dir);
  write_provenance(out, cfg);

  SaeconModel<float> model(cfg.model_config(data.d0, data.vocab.size()), cfg.seed);
  TrainConfig tc = cfg.train_config(data.splits.train_counts);
  std::cerr << "[saecon] training on " << data.train.size() << " cpc / "
            << data.absa_encoded.size() << " absa instances, " << tc.epochs
            << " epochs\n";
  TrainResult result = train(model, data.train, data.dev, data.absa_encoded, tc,
                             data.vocab, cfg.seed, cfg.to_map());

  write_file(out / "metrics.csv", metric_log_to_csv(result.log));
  save_checkpoint(result.best, out / "checkpoint");
  std::cerr << "[saecon] best epoch " << result.best_epoch << " dev micro-F1 "
            << result.best_dev_micro << "\n";
  return 0;
}

int run_eval(const CommonArgs& args, const std::string& split) {
  RunConfig cfg = effective_config(args);
  Checkpoint meta;
  SaeconModel<float> model = load_checkpoint(args.checkpoint, &meta);
  LabelVocab vocab = LabelVocab::from_entries(meta.label_vocab);
  PipelineData data = run_pipeline(cfg, &vocab);
  const fs::path out(args.out_dir);
  write_provenance(out, cfg);

  const std::vector<EncodedCpc>* encoded = &data.test;
  const std::vector<CpcInstance>* raw = &data.splits.test;
  if (split == "dev") {
    encoded = &data.dev;
    raw = &data.splits.dev;
  } else if (split == "train") {
    encoded = &data.train;
    raw = &data.splits.train;
  }
  if (encoded->empty())
    throw Error(ErrorCode::Validation, "eval: split \"" + split + "\" is empty");

  auto preds = predict_all(model, *encoded);
  auto report = f1_report(preds, golds_of(*raw));
  write_file(out / "report.csv", report_to_csv(report));
  write_file(out / "report.txt", report_to_text(report));

  if (model.config().use_analyzer) {
    std::vector<CaseStudyRow> rows;
    for (size_t i = 0; i < encoded->size(); ++i) {
      auto [s1, s2] = model.predict_entity_sentiments((*encoded)[i]);
      CaseStudyRow row;
      row.id = (*raw)[i].id;
      row.sentence = (*raw)[i].sentence;
      row.senti_first = s1;
      row.senti_second = s2;
      row.delta = sentiment_distance(s1, s2);
      row.predicted = preds[i];
      row.gold = (*raw)[i].label;
      rows.push_back(std::move(row));
    }
    write_file(out / "case_study.csv", case_study_to_csv(rows));
    write_file(out / "case_study.txt", case_study_to_text(rows));
  }
  std::cout << report_to_text(report);
  return 0;
}

int run_predict(const CommonArgs& args) {
  RunConfig cfg = effective_config(args);
  Checkpoint meta;
  SaeconModel<float> model = load_checkpoint(args.checkpoint, &meta);
  LabelVocab vocab = LabelVocab::from_entries(meta.label_vocab);
  PipelineData data = run_pipeline(cfg, &vocab);
  const fs::path out(args.out_dir);
  write_provenance(out, cfg);

  std::ofstream jsonl(out / "predictions.jsonl");
  for (size_t i = 0; i < data.test.size(); ++i) {
    const auto& enc = data.test[i];
    Eigen::Vector3f probs;
    const CpcLabel pred = model.predict_cpc(enc, &probs);
    json j{{"id", enc.id},
           {"pred", to_string(pred)},
           {"probs", {probs(0), probs(1), probs(2)}}};
    if (model.config().use_analyzer) {
      auto [sq1, sq2] = model.predict_entity_sentiments(enc);
      // map query order back to storage order (entity_a earlier)
      const SentiLabel sa = enc.swap_query ? sq2 : sq1;
      const SentiLabel sb = enc.swap_query ? sq1 : sq2;
      j["senti_a"] = to_string(sa);
      j["senti_b"] = to_string(sb);
      j["delta"] = sentiment_distance(sa, sb);
    } else {
      j["senti_a"] = nullptr;
      j["senti_b"] = nullptr;
      j["delta"] = nullptr;
    }
    jsonl << j.dump() << "\n";
  }
  std::cerr << "[saecon] wrote " << data.test.size() << " predictions\n";
  return 0;
}

int run_baseline(const CommonArgs& args) {
  RunConfig cfg = effective_config(args);
  if (cfg.cpc_train.empty())
    throw Error(ErrorCode::Config, "data.cpc_train is required");
  auto train_raw = load_cpc(cfg.cpc_train, cfg.cpc_format_mode());
  SplitBundle splits;
  if (!cfg.cpc_test.empty()) {
    auto test_raw = load_cpc(cfg.cpc_test, cfg.cpc_format_mode());
    splits = make_splits(train_raw, test_raw, cfg.seed);
  } else {
    splits = make_splits(train_raw, cfg.seed);
  }
  const fs::path out(args.out_dir);
  write_provenance(out, cfg);
  auto report = majority_baseline(golds_of(splits.train), golds_of(splits.test));
  write_file(out / "report.csv", report_to_csv(report));
  write_file(out / "report.txt", report_to_text(report));
  std::cout << report_to_text(report);
  return 0;
}

int run_sweep(const CommonArgs& args, const std::string& param,
              const std::string& values_csv) {
  const std::vector<std::string> allowed = {"lr", "dims", "lambda", "sgcn_layers"};
  if (std::find(allowed.begin(), allowed.end(), param) == allowed.end())
    throw Error(ErrorCode::Config,
                "sweep: unknown --param \"" + param +
                    "\" (expected lr|dims|lambda|sgcn_layers)");
  std::vector<std::string> values;
  {
    std::stringstream ss(values_csv);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(item);
  }
  if (values.empty())
    throw Error(ErrorCode::Config, "sweep: --values is empty");

  const fs::path out(args.out_dir);
  std::ostringstream csv;
  csv << "value,micro_f1,f1_b,f1_w,f1_n\n";
  for (const auto& value : values) {
    RunConfig cfg = effective_config(args);
    if (param == "lr") cfg.lr = std::stod(value);
    if (param == "lambda") cfg.lambda = std::stod(value);
    if (param == "dims") {
      const int d = std::stoi(value);
      cfg.d_g = d;
      cfg.d_s = d;
      if (!cfg.sgcn_dims.empty()) cfg.sgcn_dims.back() = d;
    }
    if (param == "sgcn_layers") {
      const int k = std::stoi(value);
      if (k < 1)
        throw Error(ErrorCode::Config, "sweep: sgcn_layers must be >= 1");
      const int hidden = cfg.sgcn_dims.empty() ? 256 : cfg.sgcn_dims.front();
      const int final_d = cfg.sgcn_dims.empty() ? 240 : cfg.sgcn_dims.back();
      cfg.sgcn_dims.assign(k - 1, hidden);
      cfg.sgcn_dims.push_back(final_d);
    }

    PipelineData data = run_pipeline(cfg);
    SaeconModel<float> model(cfg.model_config(data.d0, data.vocab.size()), cfg.seed);
    TrainConfig tc = cfg.train_config(data.splits.train_counts);
    TrainResult result = train(model, data.train, data.dev, data.absa_encoded, tc,
                               data.vocab, cfg.seed, cfg.to_map());

    // evaluate the best checkpoint on test when available, dev otherwise
    SaeconModel<float> best(result.best.model_config, result.best.init_seed);
    restore_into(best, result.best);
    const bool have_test = !data.test.empty();
    const auto& encoded = have_test ? data.test : data.dev;
    const auto& raw = have_test ? data.splits.test : data.splits.dev;
    auto report = f1_report(predict_all(best, encoded), golds_of(raw));
    csv << value << "," << report.micro_f1 << "," << report.f1[0] << ","
        << report.f1[1] << "," << report.f1[2] << "\n";
    std::cerr << "[saecon] sweep " << param << "=" << value << " micro-F1 "
              << report.micro_f1 << "\n";
  }
  RunConfig cfg = effective_config(args);
  write_provenance(out, cfg);
  write_file(out / ("sweep_" + param + ".csv"), csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAECON: comparative preference classification toolkit"};
  app.require_subcommand(1);

  CommonArgs prepare_args, train_args, eval_args, predict_args, baseline_args,
      sweep_args;
  std::string eval_split = "test";
  std::string sweep_param, sweep_values;

  auto* prepare = app.add_subcommand("prepare", "validate, split, and cache corpora");
  add_common(prepare, prepare_args);
  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_common(train_cmd, train_args);
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd, eval_args, true);
  eval_cmd->add_option("--split", eval_split, "train|dev|test (default test)");
  auto* predict_cmd = app.add_subcommand("predict", "write predictions for the test set");
  add_common(predict_cmd, predict_args, true);
  auto* baseline_cmd = app.add_subcommand("baseline", "majority-class baseline report");
  add_common(baseline_cmd, baseline_args);
  auto* sweep_cmd = app.add_subcommand("sweep", "train across one hyperparameter axis");
  add_common(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--param", sweep_param, "lr|dims|lambda|sgcn_layers")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) return run_prepare(prepare_args);
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_eval(eval_args, eval_split);
    if (predict_cmd->parsed()) return run_predict(predict_args);
    if (baseline_cmd->parsed()) return run_baseline(baseline_args);
    if (sweep_cmd->parsed()) return run_sweep(sweep_args, sweep_param, sweep_values);
  } catch (const Error& e) {
    std::cerr << e.one_line() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "E_UNKNOWN: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
