#include "saecon/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace saecon {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw Error(ErrorCode::Config, key + ": expected a boolean, got \"" + v + "\"");
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw Error(ErrorCode::Config, key + ": expected an integer, got \"" + v + "\"");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw Error(ErrorCode::Config, key + ": expected a number, got \"" + v + "\"");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw Error(ErrorCode::Config,
                key + ": expected a non-negative integer, got \"" + v + "\"");
  }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  if (out.empty())
    throw Error(ErrorCode::Config, key + ": expected a comma-separated list");
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty())
    throw Error(ErrorCode::Config, key + ": expected a comma-separated list");
  return out;
}

void check_choice(const std::string& key, const std::string& v,
                  std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return;
  std::string opts;
  for (const char* a : allowed) {
    if (!opts.empty()) opts += "|";
    opts += a;
  }
  throw Error(ErrorCode::Config, key + ": expected one of " + opts + ", got \"" + v + "\"");
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) os << ",";
    os << xs[i];
  }
  return os.str();
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "data.cpc_train") cpc_train = v;
  else if (key == "data.cpc_test") cpc_test = v;
  else if (key == "data.cpc_format") { check_choice(key, v, {"jsonl", "csv"}); cpc_format = v; }
  else if (key == "data.absa_train") absa_train = v;
  else if (key == "data.parses_cpc") parses_cpc = v;
  else if (key == "data.parses_cpc_test") parses_cpc_test = v;
  else if (key == "data.parses_absa") parses_absa = v;
  else if (key == "data.parse_source") { check_choice(key, v, {"chain", "conllu"}); parse_source = v; }
  else if (key == "data.encoder") { check_choice(key, v, {"static", "contextual"}); encoder = v; }
  else if (key == "data.embeddings") embeddings = v;
  else if (key == "data.contextual_index") contextual_index = v;
  else if (key == "data.contextual_bin") contextual_bin = v;
  else if (key == "data.imbalance") {
    check_choice(key, v, {"weighted", "flip", "upsample", "none"});
    imbalance = v;
  }
  else if (key == "model.d_g") d_g = parse_int(key, v);
  else if (key == "model.sgcn_dims") sgcn_dims = parse_int_list(key, v);
  else if (key == "model.d_a") d_a = parse_int(key, v);
  else if (key == "model.d_s") d_s = parse_int(key, v);
  else if (key == "model.window_r") window_r = parse_int(key, v);
  else if (key == "model.proj_dim") proj_dim = parse_int(key, v);
  else if (key == "model.head_hidden") head_hidden = parse_int(key, v);
  else if (key == "model.alpha") alpha = parse_double(key, v);
  else if (key == "model.use_bilstm") use_bilstm = parse_bool(key, v);
  else if (key == "model.use_sgcn") use_sgcn = parse_bool(key, v);
  else if (key == "model.use_analyzer") use_analyzer = parse_bool(key, v);
  else if (key == "model.use_grl_dc") use_grl_dc = parse_bool(key, v);
  else if (key == "model.sgcn_directed") sgcn_directed = parse_bool(key, v);
  else if (key == "model.sgcn_gated") sgcn_gated = parse_bool(key, v);
  else if (key == "model.sgcn_agg") { check_choice(key, v, {"sum", "mean"}); sgcn_agg = v; }
  else if (key == "train.lr") lr = parse_double(key, v);
  else if (key == "train.epochs") epochs = parse_int(key, v);
  else if (key == "train.batch_size") batch_size = parse_int(key, v);
  else if (key == "train.ratio_cpc") ratio_cpc = parse_int(key, v);
  else if (key == "train.ratio_absa") ratio_absa = parse_int(key, v);
  else if (key == "train.lambda") lambda = parse_double(key, v);
  else if (key == "train.lambda_s") lambda_s = parse_double(key, v);
  else if (key == "train.lambda_d") lambda_d = parse_double(key, v);
  else if (key == "train.class_weight_mode") {
    check_choice(key, v, {"configured", "uniform", "inverse_freq"});
    class_weight_mode = v;
  }
  else if (key == "train.class_weights") {
    class_weight_values = parse_double_list(key, v);
    if (class_weight_values.size() != 3)
      throw Error(ErrorCode::Config, key + ": expected 3 values (B,W,N)");
  }
  else if (key == "train.beta1") beta1 = parse_double(key, v);
  else if (key == "train.beta2") beta2 = parse_double(key, v);
  else if (key == "train.lr_step") lr_step = parse_int(key, v);
  else if (key == "train.lr_gamma") lr_gamma = parse_double(key, v);
  else if (key == "train.seed") seed = parse_u64(key, v);
  else
    throw Error(ErrorCode::Config, "unknown configuration key \"" + key + "\"");
}

ModelConfig RunConfig::model_config(int d0, int num_labels) const {
  ModelConfig m;
  m.d0 = d0;
  m.d_g = d_g;
  m.sgcn_dims = sgcn_dims;
  m.d_a = d_a;
  m.d_s = d_s;
  m.window_r = window_r;
  m.proj_dim = proj_dim;
  m.head_hidden = head_hidden;
  m.num_labels = num_labels;
  m.alpha = alpha;
  m.use_bilstm = use_bilstm;
  m.use_sgcn = use_sgcn;
  m.use_analyzer = use_analyzer;
  m.use_grl_dc = use_grl_dc;
  m.sgcn_directed = sgcn_directed;
  m.sgcn_gated = sgcn_gated;
  m.sgcn_agg = sgcn_agg == "mean" ? SgcnAgg::Mean : SgcnAgg::Sum;
  return m;
}

TrainConfig RunConfig::train_config(const ClassCounts& train_counts) const {
  TrainConfig t;
  t.lr = lr;
  t.loss_weights = {lambda, lambda_s, lambda_d};
  t.epochs = epochs;
  t.seed = seed;
  t.adam = {beta1, beta2, 1e-8};
  t.lr_step_epochs = lr_step;
  t.lr_gamma = lr_gamma;
  t.schedule = {ratio_cpc, ratio_absa, batch_size};

  if (imbalance_mode() == ImbalanceMode::Weighted) {
    WeightMode mode = WeightMode::Configured;
    if (class_weight_mode == "uniform") mode = WeightMode::Uniform;
    else if (class_weight_mode == "inverse_freq") mode = WeightMode::InverseFreq;
    ClassWeights configured{{{CpcLabel::Better, class_weight_values[0]},
                             {CpcLabel::Worse, class_weight_values[1]},
                             {CpcLabel::None, class_weight_values[2]}}};
    t.class_weights = class_weights(mode, configured, train_counts);
  } else {
    t.class_weights = class_weights(WeightMode::Uniform, std::nullopt, train_counts);
  }
  return t;
}

ImbalanceMode RunConfig::imbalance_mode() const {
  if (imbalance == "weighted") return ImbalanceMode::Weighted;
  if (imbalance == "flip") return ImbalanceMode::Flip;
  if (imbalance == "upsample") return ImbalanceMode::Upsample;
  return ImbalanceMode::None;
}

EncoderMode RunConfig::encoder_mode() const {
  return encoder == "contextual" ? EncoderMode::Contextual : EncoderMode::Static;
}

ParseSource RunConfig::parse_source_mode() const {
  return parse_source == "conllu" ? ParseSource::Conllu : ParseSource::Chain;
}

CpcFormat RunConfig::cpc_format_mode() const {
  return cpc_format == "csv" ? CpcFormat::Csv : CpcFormat::Jsonl;
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["data.cpc_train"] = cpc_train;
  m["data.cpc_test"] = cpc_test;
  m["data.cpc_format"] = cpc_format;
  m["data.absa_train"] = absa_train;
  m["data.parses_cpc"] = parses_cpc;
  m["data.parses_cpc_test"] = parses_cpc_test;
  m["data.parses_absa"] = parses_absa;
  m["data.parse_source"] = parse_source;
  m["data.encoder"] = encoder;
  m["data.embeddings"] = embeddings;
  m["data.contextual_index"] = contextual_index;
  m["data.contextual_bin"] = contextual_bin;
  m["data.imbalance"] = imbalance;
  m["model.d_g"] = std::to_string(d_g);
  m["model.sgcn_dims"] = join(sgcn_dims);
  m["model.d_a"] = std::to_string(d_a);
  m["model.d_s"] = std::to_string(d_s);
  m["model.window_r"] = std::to_string(window_r);
  m["model.proj_dim"] = std::to_string(proj_dim);
  m["model.head_hidden"] = std::to_string(head_hidden);
  m["model.alpha"] = fmt(alpha);
  m["model.use_bilstm"] = use_bilstm ? "true" : "false";
  m["model.use_sgcn"] = use_sgcn ? "true" : "false";
  m["model.use_analyzer"] = use_analyzer ? "true" : "false";
  m["model.use_grl_dc"] = use_grl_dc ? "true" : "false";
  m["model.sgcn_directed"] = sgcn_directed ? "true" : "false";
  m["model.sgcn_gated"] = sgcn_gated ? "true" : "false";
  m["model.sgcn_agg"] = sgcn_agg;
  m["train.lr"] = fmt(lr);
  m["train.epochs"] = std::to_string(epochs);
  m["train.batch_size"] = std::to_string(batch_size);
  m["train.ratio_cpc"] = std::to_string(ratio_cpc);
  m["train.ratio_absa"] = std::to_string(ratio_absa);
  m["train.lambda"] = fmt(lambda);
  m["train.lambda_s"] = fmt(lambda_s);
  m["train.lambda_d"] = fmt(lambda_d);
  m["train.class_weight_mode"] = class_weight_mode;
  m["train.class_weights"] = join(class_weight_values);
  m["train.beta1"] = fmt(beta1);
  m["train.beta2"] = fmt(beta2);
  m["train.lr_step"] = std::to_string(lr_step);
  m["train.lr_gamma"] = fmt(lr_gamma);
  m["train.seed"] = std::to_string(seed);
  return m;
}

std::string RunConfig::echo() const {
  std::ostringstream os;
  for (const auto& [k, v] : to_map()) os << k << "=" << v << "\n";
  return os.str();
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open config " + path.string());
  RunConfig cfg;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::Config, path.string() + ":" + std::to_string(lineno) +
                                         ": expected key=value");
    try {
      cfg.set(trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::Config,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& key_values) {
  for (const auto& kv : key_values) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::Config, "--set expects KEY=VALUE, got \"" + kv + "\"");
    cfg.set(trim(kv.substr(0, eq)), kv.substr(eq + 1));
  }
}

}  // namespace saecon
