#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "saecon/nn.hpp"

namespace saecon {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double epsilon = 1e-3;
  double tolerance = 1e-4;
  bool pass = false;
  std::string failure;  // first failing parameter, empty when pass

  double max_rel_err() const {
    double m = 0;
    for (const auto& e : entries) m = std::max(m, e.max_rel_err);
    return m;
  }
};

// Central finite differences against the tape's analytic gradients, in
// double precision. `build` must construct the scalar loss from the current
// parameter values on a fresh tape.
inline GradCheckReport grad_check(
    ParameterStore<double>& params,
    const std::function<Var<double>(Tape<double>&)>& build, double epsilon = 1e-3,
    double tolerance = 1e-4) {
  GradCheckReport report;
  report.epsilon = epsilon;
  report.tolerance = tolerance;

  params.zero_grads();
  std::vector<Matrix<double>> analytic;
  {
    Tape<double> tape;
    Var<double> loss = build(tape);
    tape.backward(loss);
  }
  for (const auto& p : params.all()) analytic.push_back(p->grad);

  auto eval = [&]() -> double {
    Tape<double> tape;
    return tape.scalar(build(tape));
  };

  report.pass = true;
  for (size_t pi = 0; pi < params.all().size(); ++pi) {
    const auto& p = params.all()[pi];
    if (!p->trainable) continue;
    GradCheckEntry entry;
    entry.name = p->name;
    for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
        const double a = analytic[pi](i, j);
        if (!std::isfinite(a)) {
          report.pass = false;
          if (report.failure.empty())
            report.failure = p->name + ": non-finite analytic gradient";
          entry.max_rel_err = std::numeric_limits<double>::infinity();
          continue;
        }
        const double saved = p->value(i, j);
        p->value(i, j) = saved + epsilon;
        const double up = eval();
        p->value(i, j) = saved - epsilon;
        const double down = eval();
        p->value(i, j) = saved;
        const double n = (up - down) / (2.0 * epsilon);
        const double rel =
            std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
        entry.max_rel_err = std::max(entry.max_rel_err, rel);
      }
    }
    if (entry.max_rel_err >= tolerance && report.failure.empty()) {
      report.failure = entry.name;
    }
    if (entry.max_rel_err >= tolerance) report.pass = false;
    report.entries.push_back(std::move(entry));
  }
  params.zero_grads();
  return report;
}

}  // namespace saecon
