#include "saecon/eval.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "saecon/error.hpp"

namespace saecon {

EvalReport f1_report(const std::vector<CpcLabel>& preds,
                     const std::vector<CpcLabel>& golds) {
  if (preds.size() != golds.size())
    throw Error(ErrorCode::Validation,
                "f1_report: " + std::to_string(preds.size()) + " predictions vs " +
                    std::to_string(golds.size()) + " golds");
  if (preds.empty())
    throw Error(ErrorCode::Validation, "f1_report: empty input");

  EvalReport r;
  r.total = preds.size();
  for (size_t i = 0; i < preds.size(); ++i) {
    r.confusion[static_cast<int>(golds[i])][static_cast<int>(preds[i])]++;
    r.support[static_cast<int>(golds[i])]++;
  }
  size_t correct = 0;
  for (int c = 0; c < kNumCpcLabels; ++c) {
    const size_t tp = r.confusion[c][c];
    correct += tp;
    size_t fp = 0, fn = 0;
    for (int o = 0; o < kNumCpcLabels; ++o) {
      if (o == c) continue;
      fp += r.confusion[o][c];
      fn += r.confusion[c][o];
    }
    const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    const double rec = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    r.precision[c] = p;
    r.recall[c] = rec;
    r.f1[c] = p + rec == 0.0 ? 0.0 : 2.0 * p * rec / (p + rec);
  }
  r.micro_f1 = static_cast<double>(correct) / static_cast<double>(r.total);
  return r;
}

CpcLabel majority_label(const std::vector<CpcLabel>& train_golds) {
  if (train_golds.empty())
    throw Error(ErrorCode::Validation, "majority_baseline: empty train set");
  size_t counts[kNumCpcLabels] = {0, 0, 0};
  for (CpcLabel l : train_golds) counts[static_cast<int>(l)]++;
  int best = 0;
  for (int c = 1; c < kNumCpcLabels; ++c)
    if (counts[c] > counts[best]) best = c;  // ties keep the lower ordinal
  return static_cast<CpcLabel>(best);
}

EvalReport majority_baseline(const std::vector<CpcLabel>& train_golds,
                             const std::vector<CpcLabel>& test_golds) {
  const CpcLabel modal = majority_label(train_golds);
  std::vector<CpcLabel> preds(test_golds.size(), modal);
  return f1_report(preds, test_golds);
}

int sentiment_distance(SentiLabel p1, SentiLabel p2) {
  return polarity(p1) - polarity(p2);
}

std::string report_to_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "metric,value\n";
  os << std::setprecision(10);
  os << "micro_f1," << r.micro_f1 << "\n";
  const char* names[] = {"b", "w", "n"};
  for (int c = 0; c < kNumCpcLabels; ++c) {
    os << "f1_" << names[c] << "," << r.f1[c] << "\n";
    os << "precision_" << names[c] << "," << r.precision[c] << "\n";
    os << "recall_" << names[c] << "," << r.recall[c] << "\n";
    os << "support_" << names[c] << "," << r.support[c] << "\n";
  }
  return os.str();
}

std::string report_to_text(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "label     precision  recall     f1         support\n";
  const char* names[] = {"BETTER", "WORSE", "NONE"};
  for (int c = 0; c < kNumCpcLabels; ++c) {
    os << std::left << std::setw(10) << names[c] << std::setw(11) << r.precision[c]
       << std::setw(11) << r.recall[c] << std::setw(11) << r.f1[c] << r.support[c]
       << "\n";
  }
  os << "micro-F1  " << r.micro_f1 << "  (" << r.total << " instances)\n";
  os << "confusion (rows gold, cols pred):\n";
  for (int g = 0; g < kNumCpcLabels; ++g) {
    os << "  " << std::left << std::setw(8) << names[g];
    for (int p = 0; p < kNumCpcLabels; ++p)
      os << std::right << std::setw(8) << r.confusion[g][p];
    os << "\n";
  }
  return os.str();
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

std::string case_study_to_csv(const std::vector<CaseStudyRow>& rows) {
  std::ostringstream os;
  os << "id,sentence,senti_e1,senti_e2,delta,pred,gold\n";
  for (const auto& row : rows) {
    os << csv_escape(row.id) << "," << csv_escape(row.sentence) << ","
       << to_string(row.senti_first) << "," << to_string(row.senti_second) << ","
       << row.delta << "," << to_string(row.predicted) << "," << to_string(row.gold)
       << "\n";
  }
  return os.str();
}

std::string case_study_to_text(const std::vector<CaseStudyRow>& rows) {
  std::ostringstream os;
  for (const auto& row : rows) {
    os << row.id << ": " << row.sentence << "\n"
       << "  [e1:" << to_string(row.senti_first) << "] [e2:"
       << to_string(row.senti_second) << "]  delta=" << std::showpos << row.delta
       << std::noshowpos << "  pred=" << to_string(row.predicted)
       << "  gold=" << to_string(row.gold) << "\n";
  }
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << content;
}

}  // namespace saecon
