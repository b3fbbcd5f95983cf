#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "saecon/error.hpp"

namespace saecon {

enum class CpcLabel : int { Better = 0, Worse = 1, None = 2 };
enum class SentiLabel : int { Pos = 0, Neu = 1, Neg = 2 };
enum class DomainLabel : int { CpcDomain = 0, AbsaDomain = 1 };

constexpr int kNumCpcLabels = 3;
constexpr int kNumSentiLabels = 3;

const char* to_string(CpcLabel l);
const char* to_string(SentiLabel l);
CpcLabel cpc_label_from_string(const std::string& s);
SentiLabel senti_label_from_string(const std::string& s);

// POS -> +1, NEU -> 0, NEG -> -1
inline int polarity(SentiLabel l) {
  switch (l) {
    case SentiLabel::Pos: return 1;
    case SentiLabel::Neu: return 0;
    case SentiLabel::Neg: return -1;
  }
  return 0;
}

// Character-offset span, 0-based, end exclusive. Offsets count code points
// of the UTF-8-decoded sentence.
struct EntitySpan {
  std::string text;
  size_t start = 0;
  size_t end = 0;
};

struct CpcInstance {
  std::string id;
  std::string sentence;
  EntitySpan entity_a;  // earlier-appearing entity (e1)
  EntitySpan entity_b;
  CpcLabel label = CpcLabel::None;
  // Flip augmentation swaps the query order instead of the stored spans so
  // "entity_a appears earlier" stays true. When set, queries run as (b, a).
  bool swap_query = false;

  const EntitySpan& query_first() const { return swap_query ? entity_b : entity_a; }
  const EntitySpan& query_second() const { return swap_query ? entity_a : entity_b; }
};

struct AbsaInstance {
  std::string id;
  std::string sentence;
  EntitySpan aspect;
  SentiLabel sentiment = SentiLabel::Neu;
  DomainLabel domain = DomainLabel::AbsaDomain;
};

// One aspect query produced by splitting a CPC instance; no gold sentiment.
struct AbsaQuery {
  std::string source_id;
  std::string sentence;
  EntitySpan aspect;
  DomainLabel domain = DomainLabel::CpcDomain;
};

using ClassCounts = std::map<CpcLabel, size_t>;

struct SplitBundle {
  std::vector<CpcInstance> train;
  std::vector<CpcInstance> dev;
  std::vector<CpcInstance> test;
  ClassCounts train_counts;
  ClassCounts dev_counts;
  ClassCounts test_counts;
};

struct ClassWeights {
  std::map<CpcLabel, double> weights;

  double at(CpcLabel l) const { return weights.at(l); }
};

enum class WeightMode { Configured, Uniform, InverseFreq };

struct BatchSchedule {
  int ratio_cpc = 1;
  int ratio_absa = 1;
  int batch_size = 16;
};

enum class Task { Cpc, Absa };

enum class CpcFormat { Jsonl, Csv };

// Throws Error(Validation) when span invariants fail; `where` names the
// offending instance in the message.
void validate_span(const EntitySpan& span, const std::string& sentence,
                   const std::string& where);
void validate_cpc(const CpcInstance& inst);

ClassCounts count_labels(const std::vector<CpcInstance>& data);

std::vector<CpcInstance> load_cpc(const std::filesystem::path& path, CpcFormat format);
std::vector<AbsaInstance> load_absa(const std::filesystem::path& path);

// Canonical JSONL writers. A true swap_query flag (flip augmentation) is
// written as an extra field and restored by load_cpc.
void save_cpc_jsonl(const std::vector<CpcInstance>& data,
                    const std::filesystem::path& path);
void save_absa_jsonl(const std::vector<AbsaInstance>& data,
                     const std::filesystem::path& path);

// Stratified split. When `test` already exists (pre-split distribution) pass
// it in and only the dev carve applies; otherwise 20% per label is held out
// as test first. Dev = ceil(20%) of the remaining train, per label; a label
// with fewer than 5 train instances contributes nothing to dev (warned).
SplitBundle make_splits(const std::vector<CpcInstance>& data, uint64_t seed);
SplitBundle make_splits(const std::vector<CpcInstance>& train,
                        const std::vector<CpcInstance>& test, uint64_t seed);

std::vector<CpcInstance> flip_augment(const std::vector<CpcInstance>& train);
std::vector<CpcInstance> upsample(const std::vector<CpcInstance>& train);

ClassWeights class_weights(WeightMode mode, const std::optional<ClassWeights>& config,
                           const ClassCounts& counts);

std::pair<AbsaQuery, AbsaQuery> split_to_two(const CpcInstance& inst);

struct TaskBatch {
  Task task = Task::Cpc;
  std::vector<size_t> indices;  // indices into the task's dataset
};

// Emits batches following the cycle [CPC x ratio_cpc, ABSA x ratio_absa].
// Each task draws from its own seeded shuffled pass and reshuffles when
// exhausted. One epoch = one full pass over the CPC data; the pattern
// continues across epoch boundaries. Single consumer.
class AltBatchIterator {
 public:
  AltBatchIterator(size_t cpc_size, size_t absa_size, const BatchSchedule& sched,
                   uint64_t seed);

  TaskBatch next();
  // True exactly once after the batch completing a CPC pass is returned.
  bool epoch_boundary() const { return epoch_boundary_; }
  size_t cpc_batches_per_epoch() const;

 private:
  struct Stream {
    std::vector<size_t> order;
    size_t cursor = 0;
    std::mt19937_64 rng;
    void reshuffle();
  };

  std::vector<size_t> draw(Stream& s, bool* wrapped);

  Stream cpc_;
  Stream absa_;
  BatchSchedule sched_;
  int pattern_pos_ = 0;  // 0..ratio_cpc+ratio_absa-1
  bool epoch_boundary_ = false;
  bool absa_enabled_ = true;
};

}  // namespace saecon
