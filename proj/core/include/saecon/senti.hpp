#pragma once

#include <vector>

#include "saecon/context.hpp"
#include "saecon/nn.hpp"

namespace saecon {

// Default sentiment analyzer: its own BiLSTM over S0; a global scale (mean
// over all positions) and a local scale (mean over positions within r tokens
// of the aspect) are concatenated and projected to d_s. The dependency graph
// is accepted but unused so graph-aware analyzers can slot in.
template <typename T>
struct SentimentAnalyzer {
  BiLstm<T> bilstm;
  Linear<T> proj;  // 2*d_a -> d_s, rectified
  int window_r = 3;

  SentimentAnalyzer() = default;
  SentimentAnalyzer(ParameterStore<T>& store, const std::string& name, int d_in,
                    int d_a, int d_s, int window_r, Rng& rng)
      : bilstm(store, name + ".bilstm", d_in, d_a, rng),
        proj(store, name + ".proj", 2 * d_a, d_s, Activation::ReLU, rng),
        window_r(window_r) {}

  int d_s() const { return proj.d_out(); }

  // One h_s per aspect span; |spans| is 2 for CPC-domain input (pre-split
  // queries) and 1 for ABSA-domain input.
  std::vector<Var<T>> operator()(Tape<T>& t, Var<T> S0, const ResolvedGraph& graph,
                                 const std::vector<std::pair<int, int>>& spans) const {
    (void)graph;
    if (spans.empty() || spans.size() > 2)
      throw Error(ErrorCode::Validation,
                  "analyze: expected 1 or 2 aspect queries, got " +
                      std::to_string(spans.size()));
    const int n = static_cast<int>(t.value(S0).cols());
    auto [fwd, back] = bilstm(t, S0);
    Var<T> states = scale(add(fwd, back), T(0.5));  // d_a x n

    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    Var<T> global = mean_cols(states, all);

    std::vector<Var<T>> out;
    out.reserve(spans.size());
    for (const auto& [first, last] : spans) {
      std::vector<int> window;
      const int lo = std::max(0, first - window_r);
      const int hi = std::min(n - 1, last + window_r);
      for (int i = lo; i <= hi; ++i) window.push_back(i);
      Var<T> local = mean_cols(states, window);
      out.push_back(proj(t, concat_rows<T>({global, local})));
    }
    return out;
  }
};

// Domain classifier head; the gradient reversal sits only on this path.
template <typename T>
struct DomainClassifier {
  Mlp<T> head;

  DomainClassifier() = default;
  DomainClassifier(ParameterStore<T>& store, const std::string& name, int d_s,
                   int hidden, Rng& rng)
      : head(store, name, d_s, {hidden}, 2, rng) {}

  Var<T> logits(Tape<T>& t, Var<T> h_s, T alpha) const {
    return head(t, grl(h_s, alpha));
  }

  Var<T> predict(Tape<T>& t, Var<T> h_s, T alpha) const {
    return softmax_col(logits(t, h_s, alpha));
  }
};

}  // namespace saecon
