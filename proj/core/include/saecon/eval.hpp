#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "saecon/corpus.hpp"

namespace saecon {

struct EvalReport {
  std::array<double, kNumCpcLabels> f1 = {0, 0, 0};
  std::array<double, kNumCpcLabels> precision = {0, 0, 0};
  std::array<double, kNumCpcLabels> recall = {0, 0, 0};
  std::array<size_t, kNumCpcLabels> support = {0, 0, 0};
  double micro_f1 = 0;
  // confusion[gold][pred]
  std::array<std::array<size_t, kNumCpcLabels>, kNumCpcLabels> confusion = {};
  size_t total = 0;

  double f1_of(CpcLabel l) const { return f1[static_cast<int>(l)]; }
};

// Per-class F1 with the 0 convention when P+R = 0; micro-F1 from pooled
// counts (equals accuracy for exhaustive single-label prediction).
EvalReport f1_report(const std::vector<CpcLabel>& preds,
                     const std::vector<CpcLabel>& golds);

// Predicts the modal train label everywhere; ties break toward the lowest
// ordinal (BETTER < WORSE < NONE).
EvalReport majority_baseline(const std::vector<CpcLabel>& train_golds,
                             const std::vector<CpcLabel>& test_golds);
CpcLabel majority_label(const std::vector<CpcLabel>& train_golds);

// polarity(p1) - polarity(p2) under POS -> +1, NEU -> 0, NEG -> -1.
int sentiment_distance(SentiLabel p1, SentiLabel p2);

struct CaseStudyRow {
  std::string id;
  std::string sentence;
  SentiLabel senti_first = SentiLabel::Neu;   // query-first entity
  SentiLabel senti_second = SentiLabel::Neu;
  int delta = 0;
  CpcLabel predicted = CpcLabel::None;
  CpcLabel gold = CpcLabel::None;
};

std::string report_to_csv(const EvalReport& r);
std::string report_to_text(const EvalReport& r);
std::string case_study_to_csv(const std::vector<CaseStudyRow>& rows);
std::string case_study_to_text(const std::vector<CaseStudyRow>& rows);

void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace saecon
