#pragma once

#include <iostream>
#include <optional>
#include <vector>

#include "saecon/dataset.hpp"
#include "saecon/senti.hpp"

namespace saecon {

struct ModelConfig {
  int d0 = 100;
  int d_g = 240;                        // BiLSTM hidden per direction
  std::vector<int> sgcn_dims = {256, 240};  // widths after d0; last = d_l
  int d_a = 240;                        // analyzer BiLSTM hidden
  int d_s = 240;                        // analyzer output width
  int window_r = 3;                     // analyzer local-scale radius
  int proj_dim = 128;                   // shared entity projector F
  int head_hidden = 64;                 // hidden width of F_c, F_s, F_d
  int num_labels = 1;                   // dependency label vocab size (incl. UNK)
  double alpha = 1.0;                   // GRL coefficient
  bool use_bilstm = true;
  bool use_sgcn = true;
  bool use_analyzer = true;
  bool use_grl_dc = true;               // domain classifier + GRL branch
  bool sgcn_directed = true;
  bool sgcn_gated = true;
  SgcnAgg sgcn_agg = SgcnAgg::Sum;

  int d_l() const { return sgcn_dims.empty() ? 0 : sgcn_dims.back(); }
  // Per-entity concatenation width [h_g; h_l; h_s], active channels only.
  int concat_width() const {
    int w = 0;
    if (use_bilstm) w += d_g;
    if (use_sgcn) w += d_l();
    if (use_analyzer) w += d_s;
    return w;
  }
};

struct LossWeights {
  double lambda = 1e-4;  // L2
  double lambda_s = 1.0;
  double lambda_d = 1.0;
};

template <typename T>
struct LossBundle {
  Var<T> total;
  T loss_c = T(0);
  T loss_s = T(0);
  T loss_d = T(0);
  T reg = T(0);
  T total_value = T(0);
};

template <typename T>
struct CpcForward {
  Var<T> cpc_logits;                  // 3 x 1, query order (first, second)
  std::vector<Var<T>> domain_logits;  // per entity query (through GRL), may be empty
  std::vector<Var<T>> senti_logits;   // per entity query through F_s, query order
  std::vector<Var<T>> h_s;            // analyzer features, query order
};

template <typename T>
struct AbsaForward {
  Var<T> senti_logits;  // 3 x 1
  Var<T> domain_logits; // 2 x 1 (through GRL), invalid when GRL+DC disabled
  Var<T> h_s;
};

namespace detail {
inline uint64_t fnv1a(const char* s) {
  uint64_t h = 1469598103934665603ULL;
  for (; *s; ++s) h = (h ^ static_cast<uint64_t>(*s)) * 1099511628211ULL;
  return h;
}
}  // namespace detail

template <typename T>
class SaeconModel {
 public:
  // Each component draws its initialization from an independent stream so
  // disabling one channel leaves the others' init values unchanged.
  SaeconModel(ModelConfig cfg, uint64_t init_seed) : cfg_(cfg) {
    auto component_rng = [init_seed](const char* name) {
      return Rng(init_seed ^ detail::fnv1a(name));
    };
    if (cfg_.concat_width() == 0)
      throw Error(ErrorCode::Config, "model: all feature channels disabled");
    if (cfg_.use_bilstm) {
      Rng rng = component_rng("bilstm");
      global_ = GlobalExtractor<T>(params_, "bilstm", cfg_.d0, cfg_.d_g, rng);
    }
    if (cfg_.use_sgcn) {
      Rng rng = component_rng("sgcn");
      sgcn_ = SgcnStack<T>(params_, "sgcn", cfg_.d0, cfg_.sgcn_dims, cfg_.num_labels,
                           cfg_.sgcn_directed, cfg_.sgcn_gated, cfg_.sgcn_agg, rng);
    }
    if (cfg_.use_analyzer) {
      Rng rng = component_rng("analyzer");
      analyzer_ = SentimentAnalyzer<T>(params_, "analyzer", cfg_.d0, cfg_.d_a,
                                       cfg_.d_s, cfg_.window_r, rng);
      Rng rng_s = component_rng("F_s");
      senti_head_ = Mlp<T>(params_, "F_s", cfg_.d_s, {cfg_.head_hidden}, 3, rng_s);
      if (cfg_.use_grl_dc) {
        Rng rng_d = component_rng("F_d");
        dc_ = DomainClassifier<T>(params_, "F_d", cfg_.d_s, cfg_.head_hidden, rng_d);
      }
    }
    Rng rng_f = component_rng("F");
    projector_ = Linear<T>(params_, "F", cfg_.concat_width(), cfg_.proj_dim,
                           Activation::ReLU, rng_f);
    Rng rng_c = component_rng("F_c");
    cpc_head_ = Mlp<T>(params_, "F_c", 2 * cfg_.proj_dim, {cfg_.head_hidden}, 3, rng_c);
  }

  const ModelConfig& config() const { return cfg_; }
  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }

  CpcForward<T> cpc_forward(Tape<T>& t, const EncodedCpc& inst) const {
    CpcForward<T> out;
    Var<T> S0 = t.leaf(inst.s0.template cast<T>());
    const std::vector<std::pair<int, int>> spans = {inst.query_first(),
                                                    inst.query_second()};
    std::vector<Var<T>> h_g, h_l, h_s;
    if (cfg_.use_bilstm) h_g = (*global_)(t, S0, spans);
    if (cfg_.use_sgcn) h_l = sgcn_->local_context(t, S0, inst.graph, spans);
    if (cfg_.use_analyzer) h_s = (*analyzer_)(t, S0, inst.graph, spans);

    std::vector<Var<T>> projected;
    for (size_t e = 0; e < 2; ++e) {
      std::vector<Var<T>> parts;
      if (cfg_.use_bilstm) parts.push_back(h_g[e]);
      if (cfg_.use_sgcn) parts.push_back(h_l[e]);
      if (cfg_.use_analyzer) parts.push_back(h_s[e]);
      projected.push_back(projector_(t, concat_rows<T>(parts)));
    }
    out.cpc_logits = cpc_head_(t, concat_rows<T>(projected));
    if (cfg_.use_analyzer) {
      out.h_s = h_s;
      for (size_t e = 0; e < 2; ++e) {
        out.senti_logits.push_back(senti_head_(t, h_s[e]));
        if (cfg_.use_grl_dc)
          out.domain_logits.push_back(
              dc_->logits(t, h_s[e], static_cast<T>(cfg_.alpha)));
      }
    }
    return out;
  }

  AbsaForward<T> absa_forward(Tape<T>& t, const EncodedAbsa& inst) const {
    if (!cfg_.use_analyzer)
      throw Error(ErrorCode::Config, "absa_forward: analyzer disabled");
    AbsaForward<T> out;
    Var<T> S0 = t.leaf(inst.s0.template cast<T>());
    auto h = (*analyzer_)(t, S0, inst.graph, {inst.aspect_tokens});
    out.h_s = h[0];
    out.senti_logits = senti_head_(t, h[0]);
    if (cfg_.use_grl_dc)
      out.domain_logits = dc_->logits(t, h[0], static_cast<T>(cfg_.alpha));
    return out;
  }

  // Sum of squared entries of trainable transform weights; biases and frozen
  // tables are excluded.
  Var<T> l2_reg(Tape<T>& t) const {
    std::vector<Var<T>> terms;
    for (const auto& p : params_.all())
      if (p->trainable && p->weight_decay) terms.push_back(sq_norm(t.use(*p)));
    if (terms.empty()) return t.leaf(Matrix<T>::Zero(1, 1));
    return add_n(terms);
  }

  // Batch objective per task, Algorithm-style gating: CPC batches optimize
  // L_c + lambda_d L_d + lambda reg; ABSA batches optimize
  // lambda_s L_s + lambda_d L_d + lambda reg. Per-instance losses are
  // averaged over the batch; CPC domain losses average both entity queries.
  LossBundle<T> cpc_batch_loss(Tape<T>& t, const std::vector<CpcForward<T>>& outs,
                               const std::vector<const EncodedCpc*>& insts,
                               const ClassWeights& weights, const LossWeights& lw) const {
    if (outs.empty())
      throw Error(ErrorCode::Numeric, "cpc_batch_loss: empty batch");
    std::vector<Var<T>> c_terms;
    std::vector<Var<T>> d_terms;
    for (size_t i = 0; i < outs.size(); ++i) {
      const T w = static_cast<T>(weights.at(insts[i]->label));
      c_terms.push_back(cross_entropy(outs[i].cpc_logits,
                                      static_cast<int>(insts[i]->label), w));
      for (const auto& dl : outs[i].domain_logits)
        d_terms.push_back(cross_entropy(
            dl, static_cast<int>(DomainLabel::CpcDomain), T(1)));
    }
    const T inv_b = T(1) / static_cast<T>(outs.size());
    LossBundle<T> bundle;
    Var<T> lc = scale(add_n(c_terms), inv_b);
    bundle.loss_c = t.scalar(lc);
    Var<T> total = lc;
    if (!d_terms.empty() && lw.lambda_d != 0.0) {
      Var<T> ld = scale(add_n(d_terms), T(1) / static_cast<T>(d_terms.size()));
      bundle.loss_d = t.scalar(ld);
      total = add(total, scale(ld, static_cast<T>(lw.lambda_d)));
    }
    if (lw.lambda != 0.0) {
      Var<T> reg = l2_reg(t);
      bundle.reg = t.scalar(reg);
      total = add(total, scale(reg, static_cast<T>(lw.lambda)));
    }
    bundle.total = total;
    bundle.total_value = t.scalar(total);
    return bundle;
  }

  LossBundle<T> absa_batch_loss(Tape<T>& t, const std::vector<AbsaForward<T>>& outs,
                                const std::vector<const EncodedAbsa*>& insts,
                                const LossWeights& lw) const {
    if (outs.empty())
      throw Error(ErrorCode::Numeric, "absa_batch_loss: empty batch");
    std::vector<Var<T>> s_terms;
    std::vector<Var<T>> d_terms;
    for (size_t i = 0; i < outs.size(); ++i) {
      s_terms.push_back(cross_entropy(outs[i].senti_logits,
                                      static_cast<int>(insts[i]->sentiment), T(1)));
      if (outs[i].domain_logits.valid())
        d_terms.push_back(cross_entropy(
            outs[i].domain_logits, static_cast<int>(insts[i]->domain), T(1)));
    }
    const T inv_b = T(1) / static_cast<T>(outs.size());
    LossBundle<T> bundle;
    Var<T> ls = scale(add_n(s_terms), inv_b);
    bundle.loss_s = t.scalar(ls);
    bool have_term = false;
    Var<T> total;
    if (lw.lambda_s != 0.0) {
      total = scale(ls, static_cast<T>(lw.lambda_s));
      have_term = true;
    }
    if (!d_terms.empty() && lw.lambda_d != 0.0) {
      Var<T> ld = scale(add_n(d_terms), T(1) / static_cast<T>(d_terms.size()));
      bundle.loss_d = t.scalar(ld);
      Var<T> term = scale(ld, static_cast<T>(lw.lambda_d));
      total = have_term ? add(total, term) : term;
      have_term = true;
    }
    if (lw.lambda != 0.0) {
      Var<T> reg = l2_reg(t);
      bundle.reg = t.scalar(reg);
      Var<T> term = scale(reg, static_cast<T>(lw.lambda));
      total = have_term ? add(total, term) : term;
      have_term = true;
    }
    if (!have_term) {
      std::cerr << "[saecon] warning: ABSA batch with all loss weights zero; "
                   "objective is degenerate\n";
      total = t.leaf(Matrix<T>::Zero(1, 1));
    }
    bundle.total = total;
    bundle.total_value = t.scalar(total);
    return bundle;
  }

  // Prediction helpers on frozen parameters.
  CpcLabel predict_cpc(const EncodedCpc& inst, Eigen::Vector3f* probs = nullptr) const {
    Tape<T> t;
    CpcForward<T> out = cpc_forward(t, inst);
    Var<T> p = softmax_col(out.cpc_logits);
    const auto& v = t.value(p);
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (v(i, 0) > v(best, 0)) best = i;
    if (probs)
      for (int i = 0; i < 3; ++i) (*probs)(i) = static_cast<float>(v(i, 0));
    return static_cast<CpcLabel>(best);
  }

  // Analyzer-path sentiments for the two entities, in query order.
  std::pair<SentiLabel, SentiLabel> predict_entity_sentiments(
      const EncodedCpc& inst) const {
    if (!cfg_.use_analyzer)
      throw Error(ErrorCode::Config, "entity sentiments require the analyzer");
    Tape<T> t;
    CpcForward<T> out = cpc_forward(t, inst);
    SentiLabel labels[2];
    for (int e = 0; e < 2; ++e) {
      const auto& v = t.value(out.senti_logits[e]);
      int best = 0;
      for (int i = 1; i < 3; ++i)
        if (v(i, 0) > v(best, 0)) best = i;
      labels[e] = static_cast<SentiLabel>(best);
    }
    return {labels[0], labels[1]};
  }

 private:
  ModelConfig cfg_;
  ParameterStore<T> params_;
  std::optional<GlobalExtractor<T>> global_;
  std::optional<SgcnStack<T>> sgcn_;
  std::optional<SentimentAnalyzer<T>> analyzer_;
  std::optional<DomainClassifier<T>> dc_;
  Linear<T> projector_;
  Mlp<T> senti_head_;
  Mlp<T> cpc_head_;
};

}  // namespace saecon
