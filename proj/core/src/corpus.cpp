#include "saecon/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "saecon/utf8.hpp"

namespace saecon {

using json = nlohmann::json;

const char* to_string(CpcLabel l) {
  switch (l) {
    case CpcLabel::Better: return "BETTER";
    case CpcLabel::Worse: return "WORSE";
    case CpcLabel::None: return "NONE";
  }
  return "?";
}

const char* to_string(SentiLabel l) {
  switch (l) {
    case SentiLabel::Pos: return "POS";
    case SentiLabel::Neu: return "NEU";
    case SentiLabel::Neg: return "NEG";
  }
  return "?";
}

namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return s;
}

}  // namespace

CpcLabel cpc_label_from_string(const std::string& s) {
  const std::string u = upper(s);
  if (u == "BETTER") return CpcLabel::Better;
  if (u == "WORSE") return CpcLabel::Worse;
  if (u == "NONE") return CpcLabel::None;
  throw Error(ErrorCode::Parse, "unknown CPC label \"" + s + "\"");
}

SentiLabel senti_label_from_string(const std::string& s) {
  const std::string u = upper(s);
  if (u == "POS") return SentiLabel::Pos;
  if (u == "NEU") return SentiLabel::Neu;
  if (u == "NEG") return SentiLabel::Neg;
  throw Error(ErrorCode::Parse, "unknown sentiment \"" + s + "\"");
}

void validate_span(const EntitySpan& span, const std::string& sentence,
                   const std::string& where) {
  const Utf8Text text = Utf8Text::decode(sentence);
  if (!(span.start < span.end) || span.end > text.size())
    throw Error(ErrorCode::Validation,
                where + ": span [" + std::to_string(span.start) + "," +
                    std::to_string(span.end) + ") out of range for sentence of length " +
                    std::to_string(text.size()));
  const std::string actual = text.substr(span.start, span.end);
  if (actual != span.text)
    throw Error(ErrorCode::Validation,
                where + ": span text mismatch, expected \"" + span.text +
                    "\" but sentence[" + std::to_string(span.start) + ":" +
                    std::to_string(span.end) + "] is \"" + actual + "\"");
}

void validate_cpc(const CpcInstance& inst) {
  validate_span(inst.entity_a, inst.sentence, inst.id + "/entity_a");
  validate_span(inst.entity_b, inst.sentence, inst.id + "/entity_b");
  if (!(inst.entity_a.start < inst.entity_b.start))
    throw Error(ErrorCode::Validation,
                inst.id + ": entity_a must appear before entity_b");
  if (inst.entity_a.end > inst.entity_b.start)
    throw Error(ErrorCode::Validation, inst.id + ": entity spans overlap");
}

ClassCounts count_labels(const std::vector<CpcInstance>& data) {
  ClassCounts counts{{CpcLabel::Better, 0}, {CpcLabel::Worse, 0}, {CpcLabel::None, 0}};
  for (const auto& inst : data) counts[inst.label]++;
  return counts;
}

namespace {

EntitySpan span_from_json(const json& j, const std::string& where) {
  for (const char* key : {"text", "start", "end"})
    if (!j.contains(key))
      throw Error(ErrorCode::Parse, where + ": missing field \"" + key + "\"");
  EntitySpan s;
  s.text = j.at("text").get<std::string>();
  s.start = j.at("start").get<size_t>();
  s.end = j.at("end").get<size_t>();
  return s;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<CpcInstance> load_cpc_jsonl(const std::filesystem::path& path) {
  std::vector<CpcInstance> out;
  size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Parse,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    for (const char* key : {"id", "sentence", "entity_a", "entity_b", "label"})
      if (!j.contains(key))
        throw Error(ErrorCode::Parse, where + ": missing field \"" + key + "\"");
    CpcInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.sentence = j.at("sentence").get<std::string>();
    inst.entity_a = span_from_json(j.at("entity_a"), where + "/entity_a");
    inst.entity_b = span_from_json(j.at("entity_b"), where + "/entity_b");
    inst.label = cpc_label_from_string(j.at("label").get<std::string>());
    if (j.contains("swap_query")) inst.swap_query = j.at("swap_query").get<bool>();
    validate_cpc(inst);
    out.push_back(std::move(inst));
  }
  return out;
}

// Minimal RFC-4180 row reader: quoted fields, doubled quotes, embedded commas.
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

// Resolves an entity mention to its first occurrence at or after `from`,
// in code-point offsets.
std::optional<EntitySpan> find_mention(const Utf8Text& text, const std::string& mention,
                                       size_t from) {
  const Utf8Text m = Utf8Text::decode(mention);
  if (m.size() == 0 || m.size() > text.size()) return std::nullopt;
  for (size_t i = from; i + m.size() <= text.size(); ++i) {
    bool ok = true;
    for (size_t k = 0; k < m.size(); ++k)
      if (text.points[i + k] != m.points[k]) {
        ok = false;
        break;
      }
    if (ok) return EntitySpan{mention, i, i + m.size()};
  }
  return std::nullopt;
}

std::vector<CpcInstance> load_cpc_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) return {};

  // Published layout: sentence, object_a, object_b, label. A header row is
  // recognized by its column names ("most_frequent_label" is accepted as the
  // label column name used by the published files).
  int col_sentence = 0, col_a = 1, col_b = 2, col_label = 3;
  size_t first_row = 0;
  {
    auto head = split_csv_row(lines[0]);
    std::vector<std::string> lowered;
    for (auto& h : head) {
      std::string l = h;
      std::transform(l.begin(), l.end(), l.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      lowered.push_back(l);
    }
    auto find_col = [&](std::initializer_list<const char*> names) -> int {
      for (const char* n : names) {
        auto it = std::find(lowered.begin(), lowered.end(), n);
        if (it != lowered.end()) return static_cast<int>(it - lowered.begin());
      }
      return -1;
    };
    int s = find_col({"sentence"});
    if (s >= 0) {
      first_row = 1;
      col_sentence = s;
      col_a = find_col({"object_a"});
      col_b = find_col({"object_b"});
      col_label = find_col({"label", "most_frequent_label"});
      if (col_a < 0 || col_b < 0 || col_label < 0)
        throw Error(ErrorCode::Parse,
                    path.string() + ": header present but object_a/object_b/label columns missing");
    }
  }

  std::vector<CpcInstance> out;
  for (size_t lineno = first_row; lineno < lines.size(); ++lineno) {
    const auto& line = lines[lineno];
    if (line.empty()) continue;
    auto fields = split_csv_row(line);
    const std::string where = path.filename().string() + ":" + std::to_string(lineno + 1);
    const int needed = std::max({col_sentence, col_a, col_b, col_label});
    if (static_cast<int>(fields.size()) <= needed)
      throw Error(ErrorCode::Parse, where + ": expected at least " +
                                        std::to_string(needed + 1) + " columns, got " +
                                        std::to_string(fields.size()));
    CpcInstance inst;
    inst.id = "csv:" + std::to_string(lineno + 1);
    inst.sentence = fields[col_sentence];
    const std::string& obj_a = fields[col_a];
    const std::string& obj_b = fields[col_b];
    inst.label = cpc_label_from_string(fields[col_label]);

    const Utf8Text text = Utf8Text::decode(inst.sentence);
    auto a = find_mention(text, obj_a, 0);
    if (!a)
      throw Error(ErrorCode::Validation, where + ": object_a \"" + obj_a +
                                             "\" not found in sentence");
    auto b = find_mention(text, obj_b, 0);
    if (b && a->start <= b->start && a->end > b->start)
      b = find_mention(text, obj_b, a->end);  // same-prefix mentions: search past a
    if (!b)
      throw Error(ErrorCode::Validation, where + ": object_b \"" + obj_b +
                                             "\" not found in sentence");
    inst.entity_a = *a;
    inst.entity_b = *b;
    // The dataset defines labels against the earlier entity; if object_b
    // happens to appear first, store it as entity_a and flip the label.
    if (inst.entity_b.start < inst.entity_a.start) {
      std::swap(inst.entity_a, inst.entity_b);
      if (inst.label == CpcLabel::Better)
        inst.label = CpcLabel::Worse;
      else if (inst.label == CpcLabel::Worse)
        inst.label = CpcLabel::Better;
    }
    validate_cpc(inst);
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace

std::vector<CpcInstance> load_cpc(const std::filesystem::path& path, CpcFormat format) {
  return format == CpcFormat::Jsonl ? load_cpc_jsonl(path) : load_cpc_csv(path);
}

std::vector<AbsaInstance> load_absa(const std::filesystem::path& path) {
  std::vector<AbsaInstance> out;
  size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Parse,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    for (const char* key : {"id", "sentence", "aspect", "sentiment"})
      if (!j.contains(key))
        throw Error(ErrorCode::Parse, where + ": missing field \"" + key + "\"");
    AbsaInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.sentence = j.at("sentence").get<std::string>();
    inst.aspect = span_from_json(j.at("aspect"), where + "/aspect");
    inst.sentiment = senti_label_from_string(j.at("sentiment").get<std::string>());
    inst.domain = DomainLabel::AbsaDomain;
    validate_span(inst.aspect, inst.sentence, inst.id + "/aspect");
    out.push_back(std::move(inst));
  }
  return out;
}

namespace {

json span_to_json(const EntitySpan& s) {
  return json{{"text", s.text}, {"start", s.start}, {"end", s.end}};
}

}  // namespace

void save_cpc_jsonl(const std::vector<CpcInstance>& data,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  for (const auto& inst : data) {
    json j{{"id", inst.id},
           {"sentence", inst.sentence},
           {"entity_a", span_to_json(inst.entity_a)},
           {"entity_b", span_to_json(inst.entity_b)},
           {"label", to_string(inst.label)}};
    if (inst.swap_query) j["swap_query"] = true;
    out << j.dump() << "\n";
  }
}

void save_absa_jsonl(const std::vector<AbsaInstance>& data,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  for (const auto& inst : data) {
    json j{{"id", inst.id},
           {"sentence", inst.sentence},
           {"aspect", span_to_json(inst.aspect)},
           {"sentiment", to_string(inst.sentiment)}};
    out << j.dump() << "\n";
  }
}

namespace {

// Stratified draw: per label, shuffle that label's positions and take the
// first k. Selection depends only on (data order, seed).
std::vector<CpcInstance> draw_per_label(std::vector<CpcInstance>& pool,
                                        double fraction, std::mt19937_64& rng,
                                        size_t min_label_size) {
  std::map<CpcLabel, std::vector<size_t>> by_label;
  for (size_t i = 0; i < pool.size(); ++i) by_label[pool[i].label].push_back(i);

  std::vector<size_t> picked;
  for (auto& [label, idxs] : by_label) {
    if (idxs.size() < min_label_size) {
      std::cerr << "[saecon] warning: label " << to_string(label) << " has only "
                << idxs.size() << " instances; none held out\n";
      continue;
    }
    const size_t k = static_cast<size_t>(
        std::ceil(fraction * static_cast<double>(idxs.size())));
    std::shuffle(idxs.begin(), idxs.end(), rng);
    picked.insert(picked.end(), idxs.begin(), idxs.begin() + std::min(k, idxs.size()));
  }
  std::sort(picked.begin(), picked.end());

  std::vector<CpcInstance> held;
  std::vector<CpcInstance> rest;
  size_t p = 0;
  for (size_t i = 0; i < pool.size(); ++i) {
    if (p < picked.size() && picked[p] == i) {
      held.push_back(pool[i]);
      ++p;
    } else {
      rest.push_back(pool[i]);
    }
  }
  pool = std::move(rest);
  return held;
}

}  // namespace

SplitBundle make_splits(const std::vector<CpcInstance>& data, uint64_t seed) {
  if (data.empty())
    throw Error(ErrorCode::Validation, "make_splits: empty dataset");
  std::mt19937_64 rng(seed);
  std::vector<CpcInstance> train = data;
  std::vector<CpcInstance> test = draw_per_label(train, 0.2, rng, 1);
  SplitBundle bundle;
  bundle.test = std::move(test);
  std::vector<CpcInstance> dev = draw_per_label(train, 0.2, rng, 5);
  bundle.train = std::move(train);
  bundle.dev = std::move(dev);
  bundle.train_counts = count_labels(bundle.train);
  bundle.dev_counts = count_labels(bundle.dev);
  bundle.test_counts = count_labels(bundle.test);
  return bundle;
}

SplitBundle make_splits(const std::vector<CpcInstance>& train,
                        const std::vector<CpcInstance>& test, uint64_t seed) {
  if (train.empty())
    throw Error(ErrorCode::Validation, "make_splits: empty train set");
  std::mt19937_64 rng(seed);
  SplitBundle bundle;
  std::vector<CpcInstance> remaining = train;
  bundle.dev = draw_per_label(remaining, 0.2, rng, 5);
  bundle.train = std::move(remaining);
  bundle.test = test;
  bundle.train_counts = count_labels(bundle.train);
  bundle.dev_counts = count_labels(bundle.dev);
  bundle.test_counts = count_labels(bundle.test);
  return bundle;
}

std::vector<CpcInstance> flip_augment(const std::vector<CpcInstance>& train) {
  std::vector<CpcInstance> out = train;
  for (const auto& inst : train) {
    if (inst.label == CpcLabel::None) continue;
    CpcInstance flipped = inst;
    flipped.id = inst.id + "#flip";
    flipped.swap_query = !inst.swap_query;
    flipped.label =
        inst.label == CpcLabel::Better ? CpcLabel::Worse : CpcLabel::Better;
    out.push_back(std::move(flipped));
  }
  return out;
}

std::vector<CpcInstance> upsample(const std::vector<CpcInstance>& train) {
  ClassCounts counts = count_labels(train);
  const size_t target = counts[CpcLabel::None];
  std::vector<CpcInstance> out = train;
  for (CpcLabel label : {CpcLabel::Better, CpcLabel::Worse}) {
    const size_t have = counts[label];
    if (have >= target) continue;
    if (have == 0)
      throw Error(ErrorCode::Validation,
                  std::string("upsample: no ") + to_string(label) +
                      " instances to duplicate");
    std::vector<const CpcInstance*> pool;
    for (const auto& inst : train)
      if (inst.label == label) pool.push_back(&inst);
    // Deterministic cycling through the class in file order.
    for (size_t k = 0; k < target - have; ++k) {
      CpcInstance copy = *pool[k % pool.size()];
      copy.id += "#up" + std::to_string(k / pool.size() + 1);
      out.push_back(std::move(copy));
    }
  }
  return out;
}

ClassWeights class_weights(WeightMode mode, const std::optional<ClassWeights>& config,
                           const ClassCounts& counts) {
  switch (mode) {
    case WeightMode::Configured:
      if (!config)
        throw Error(ErrorCode::Config, "class_weights: CONFIGURED requires weights");
      for (const auto& [label, w] : config->weights)
        if (w <= 0)
          throw Error(ErrorCode::Config, "class_weights: non-positive weight");
      return *config;
    case WeightMode::Uniform:
      return ClassWeights{{{CpcLabel::Better, 1.0}, {CpcLabel::Worse, 1.0},
                           {CpcLabel::None, 1.0}}};
    case WeightMode::InverseFreq: {
      double inv_sum = 0;
      for (CpcLabel l : {CpcLabel::Better, CpcLabel::Worse, CpcLabel::None}) {
        auto it = counts.find(l);
        const size_t c = it == counts.end() ? 0 : it->second;
        if (c == 0)
          throw Error(ErrorCode::Validation,
                      std::string("class_weights: zero count for ") + to_string(l));
        inv_sum += 1.0 / static_cast<double>(c);
      }
      ClassWeights w;
      for (CpcLabel l : {CpcLabel::Better, CpcLabel::Worse, CpcLabel::None})
        w.weights[l] =
            (1.0 / static_cast<double>(counts.at(l))) * 3.0 / inv_sum;
      return w;
    }
  }
  throw Error(ErrorCode::Config, "class_weights: bad mode");
}

std::pair<AbsaQuery, AbsaQuery> split_to_two(const CpcInstance& inst) {
  AbsaQuery first{inst.id, inst.sentence, inst.query_first(), DomainLabel::CpcDomain};
  AbsaQuery second{inst.id, inst.sentence, inst.query_second(), DomainLabel::CpcDomain};
  return {first, second};
}

void AltBatchIterator::Stream::reshuffle() {
  std::shuffle(order.begin(), order.end(), rng);
  cursor = 0;
}

AltBatchIterator::AltBatchIterator(size_t cpc_size, size_t absa_size,
                                   const BatchSchedule& sched, uint64_t seed)
    : sched_(sched) {
  if (sched.batch_size <= 0 || sched.ratio_cpc <= 0 || sched.ratio_absa <= 0)
    throw Error(ErrorCode::Config, "alt_batch_iterator: schedule values must be positive");
  if (cpc_size == 0)
    throw Error(ErrorCode::Validation, "alt_batch_iterator: empty CPC dataset");
  absa_enabled_ = absa_size > 0;
  if (static_cast<size_t>(sched.batch_size) > cpc_size ||
      (absa_enabled_ && static_cast<size_t>(sched.batch_size) > absa_size))
    throw Error(ErrorCode::Validation,
                "alt_batch_iterator: batch_size exceeds a dataset size");

  cpc_.order.resize(cpc_size);
  for (size_t i = 0; i < cpc_size; ++i) cpc_.order[i] = i;
  cpc_.rng.seed(seed);
  cpc_.reshuffle();

  absa_.order.resize(absa_size);
  for (size_t i = 0; i < absa_size; ++i) absa_.order[i] = i;
  absa_.rng.seed(seed + 0x9E3779B97F4A7C15ULL);
  if (absa_enabled_) absa_.reshuffle();
}

std::vector<size_t> AltBatchIterator::draw(Stream& s, bool* wrapped) {
  const size_t take = std::min(static_cast<size_t>(sched_.batch_size),
                               s.order.size() - s.cursor);
  std::vector<size_t> batch(s.order.begin() + s.cursor,
                            s.order.begin() + s.cursor + take);
  s.cursor += take;
  *wrapped = s.cursor == s.order.size();
  if (*wrapped) s.reshuffle();
  return batch;
}

TaskBatch AltBatchIterator::next() {
  epoch_boundary_ = false;
  const int cycle = sched_.ratio_cpc + sched_.ratio_absa;
  Task task;
  if (!absa_enabled_) {
    task = Task::Cpc;
  } else {
    task = pattern_pos_ < sched_.ratio_cpc ? Task::Cpc : Task::Absa;
    pattern_pos_ = (pattern_pos_ + 1) % cycle;
  }
  TaskBatch out;
  out.task = task;
  bool wrapped = false;
  out.indices = draw(task == Task::Cpc ? cpc_ : absa_, &wrapped);
  if (task == Task::Cpc && wrapped) epoch_boundary_ = true;
  return out;
}

size_t AltBatchIterator::cpc_batches_per_epoch() const {
  const size_t n = cpc_.order.size();
  const size_t b = static_cast<size_t>(sched_.batch_size);
  return (n + b - 1) / b;
}

}  // namespace saecon
