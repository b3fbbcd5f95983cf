#include <doctest.h>

#include <random>

#include "saecon/eval.hpp"
#include "support/oracles.hpp"

using namespace saecon;
using namespace saecon::testing;

namespace {

std::vector<CpcLabel> labels_of(std::initializer_list<int> xs) {
  std::vector<CpcLabel> out;
  for (int x : xs) out.push_back(static_cast<CpcLabel>(x));
  return out;
}

}  // namespace

TEST_CASE("f1_report on perfect predictions") {
  auto golds = labels_of({0, 1, 2, 0, 1, 2});
  auto report = f1_report(golds, golds);
  for (int c = 0; c < 3; ++c) CHECK(report.f1[c] == 1.0);
  CHECK(report.micro_f1 == 1.0);
}

TEST_CASE("all-NONE predictor on the published test supports") {
  // supports (273, 119, 1048): F1(N) = 2*1048/(1440+1048)
  std::vector<CpcLabel> golds;
  for (int i = 0; i < 273; ++i) golds.push_back(CpcLabel::Better);
  for (int i = 0; i < 119; ++i) golds.push_back(CpcLabel::Worse);
  for (int i = 0; i < 1048; ++i) golds.push_back(CpcLabel::None);
  std::vector<CpcLabel> preds(golds.size(), CpcLabel::None);
  auto report = f1_report(preds, golds);
  CHECK(report.f1_of(CpcLabel::None) == doctest::Approx(0.8425).epsilon(2e-4));
  CHECK(report.f1_of(CpcLabel::None) ==
        doctest::Approx(2.0 * 1048 / (1440.0 + 1048.0)).epsilon(1e-12));
  CHECK(report.f1_of(CpcLabel::Better) == 0.0);
  CHECK(report.f1_of(CpcLabel::Worse) == 0.0);
  CHECK(report.micro_f1 == doctest::Approx(1048.0 / 1440.0).epsilon(1e-12));
}

TEST_CASE("hand confusion matrix matches the counting oracle") {
  // confusion[gold][pred] = [[2,1,0],[0,1,0],[1,0,5]]
  std::vector<CpcLabel> golds, preds;
  auto push = [&](int g, int p, int k) {
    for (int i = 0; i < k; ++i) {
      golds.push_back(static_cast<CpcLabel>(g));
      preds.push_back(static_cast<CpcLabel>(p));
    }
  };
  push(0, 0, 2);
  push(0, 1, 1);
  push(1, 1, 1);
  push(2, 0, 1);
  push(2, 2, 5);
  auto report = f1_report(preds, golds);
  auto oracle = f1_counting_oracle(preds, golds);
  for (int c = 0; c < 3; ++c)
    CHECK(report.f1[c] == doctest::Approx(oracle.f1[c]).epsilon(1e-15));
  CHECK(report.micro_f1 == doctest::Approx(oracle.micro).epsilon(1e-15));
  CHECK(report.confusion[0][0] == 2);
  CHECK(report.confusion[0][1] == 1);
  CHECK(report.confusion[2][0] == 1);
  CHECK(report.confusion[2][2] == 5);
}

TEST_CASE("f1_report equals the brute-force oracle on random vectors (property)") {
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + rng() % 1000;
    std::vector<CpcLabel> preds(n), golds(n);
    for (size_t i = 0; i < n; ++i) {
      preds[i] = static_cast<CpcLabel>(rng() % 3);
      golds[i] = static_cast<CpcLabel>(rng() % 3);
    }
    auto report = f1_report(preds, golds);
    auto oracle = f1_counting_oracle(preds, golds);
    for (int c = 0; c < 3; ++c) CHECK(report.f1[c] == oracle.f1[c]);
    CHECK(report.micro_f1 == oracle.micro);
  }
}

TEST_CASE("micro-F1 equals accuracy for exhaustive single-label predictions") {
  std::mt19937_64 rng(117);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 1 + rng() % 200;
    std::vector<CpcLabel> preds(n), golds(n);
    size_t correct = 0;
    for (size_t i = 0; i < n; ++i) {
      preds[i] = static_cast<CpcLabel>(rng() % 3);
      golds[i] = static_cast<CpcLabel>(rng() % 3);
      if (preds[i] == golds[i]) ++correct;
    }
    auto report = f1_report(preds, golds);
    CHECK(report.micro_f1 == static_cast<double>(correct) / n);
  }
}

TEST_CASE("f1_report errors") {
  CHECK_THROWS_AS(f1_report(labels_of({0}), labels_of({0, 1})), Error);
  CHECK_THROWS_AS(f1_report({}, {}), Error);
}

TEST_CASE("majority baseline") {
  SUBCASE("imbalanced corpus predicts the modal label everywhere") {
    std::vector<CpcLabel> train;
    for (int i = 0; i < 872; ++i) train.push_back(CpcLabel::Better);
    for (int i = 0; i < 379; ++i) train.push_back(CpcLabel::Worse);
    for (int i = 0; i < 3355; ++i) train.push_back(CpcLabel::None);
    CHECK(majority_label(train) == CpcLabel::None);
    auto report = majority_baseline(train, labels_of({0, 1, 2, 2}));
    CHECK(report.confusion[2][2] == 2);
    CHECK(report.f1_of(CpcLabel::Better) == 0.0);
  }
  SUBCASE("single-class corpus scores micro 1.0") {
    std::vector<CpcLabel> all_b(10, CpcLabel::Better);
    auto report = majority_baseline(all_b, all_b);
    CHECK(report.micro_f1 == 1.0);
  }
  SUBCASE("ties break toward the lowest ordinal") {
    CHECK(majority_label(labels_of({0, 0, 1, 1})) == CpcLabel::Better);
    CHECK(majority_label(labels_of({1, 1, 2, 2})) == CpcLabel::Worse);
  }
}

TEST_CASE("sentiment distance") {
  CHECK(sentiment_distance(SentiLabel::Pos, SentiLabel::Neg) == 2);
  CHECK(sentiment_distance(SentiLabel::Neg, SentiLabel::Neu) == -1);
  CHECK(sentiment_distance(SentiLabel::Pos, SentiLabel::Pos) == 0);
  CHECK(sentiment_distance(SentiLabel::Neu, SentiLabel::Neg) == 1);

  SUBCASE("range and antisymmetry (property)") {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int d = sentiment_distance(static_cast<SentiLabel>(a),
                                         static_cast<SentiLabel>(b));
        CHECK(d >= -2);
        CHECK(d <= 2);
        CHECK(d == -sentiment_distance(static_cast<SentiLabel>(b),
                                       static_cast<SentiLabel>(a)));
      }
  }
}

TEST_CASE("report serialization") {
  auto golds = labels_of({0, 1, 2, 2});
  auto preds = labels_of({0, 2, 2, 2});
  auto report = f1_report(preds, golds);
  const std::string csv = report_to_csv(report);
  CHECK(csv.find("micro_f1,") != std::string::npos);
  CHECK(csv.find("f1_b,") != std::string::npos);
  const std::string text = report_to_text(report);
  CHECK(text.find("BETTER") != std::string::npos);
  CHECK(text.find("micro-F1") != std::string::npos);
}

TEST_CASE("case study rows") {
  std::vector<CaseStudyRow> rows;
  CaseStudyRow r;
  r.id = "s1";
  r.sentence = "Ethernet is faster, USB is slower";
  r.senti_first = SentiLabel::Pos;
  r.senti_second = SentiLabel::Neg;
  r.delta = 2;
  r.predicted = CpcLabel::Better;
  r.gold = CpcLabel::Better;
  rows.push_back(r);
  const std::string csv = case_study_to_csv(rows);
  CHECK(csv.find("POS,NEG,2,BETTER,BETTER") != std::string::npos);
  // commas inside sentences stay quoted
  CHECK(csv.find("\"Ethernet is faster, USB is slower\"") != std::string::npos);
  const std::string text = case_study_to_text(rows);
  CHECK(text.find("delta=+2") != std::string::npos);
}
