#pragma once

#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "saecon/tape.hpp"

namespace saecon {

using Rng = std::mt19937_64;

enum class Activation { None, ReLU };

// Uniform Glorot range for a d_out x d_in transform: fan_in = cols,
// fan_out = rows.
template <typename T>
Matrix<T> glorot_uniform(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / (static_cast<double>(rows) + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix<T> m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = static_cast<T>(dist(rng));
  return m;
}

// Registration order is the canonical (manifest) order for checkpoints and
// gradient reports.
template <typename T>
class ParameterStore {
 public:
  using Param = Parameter<T>;

  std::shared_ptr<Param> add_weight(const std::string& name, int rows, int cols,
                                    Rng& rng, bool decay = true) {
    return add(name, glorot_uniform<T>(rows, cols, rng), true, decay);
  }

  std::shared_ptr<Param> add_bias(const std::string& name, int rows) {
    return add(name, Matrix<T>::Zero(rows, 1), true, false);
  }

  std::shared_ptr<Param> add(const std::string& name, Matrix<T> value, bool trainable,
                             bool decay) {
    if (by_name_.count(name))
      throw Error(ErrorCode::Config, "duplicate parameter name " + name);
    auto p = std::make_shared<Param>();
    p->name = name;
    p->value = std::move(value);
    p->trainable = trainable;
    p->weight_decay = decay;
    p->zero_grad();
    by_name_[name] = params_.size();
    params_.push_back(p);
    return p;
  }

  const std::vector<std::shared_ptr<Param>>& all() const { return params_; }

  std::shared_ptr<Param> find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : params_[it->second];
  }

  void zero_grads() {
    for (auto& p : params_) p->zero_grad();
  }

  size_t total_size() const {
    size_t n = 0;
    for (const auto& p : params_) n += static_cast<size_t>(p->value.size());
    return n;
  }

 private:
  std::vector<std::shared_ptr<Param>> params_;
  std::unordered_map<std::string, size_t> by_name_;
};

// y = act(W x + b); the final classifier layers use Activation::None and
// leave softmax to the caller.
template <typename T>
struct Linear {
  std::shared_ptr<Parameter<T>> W;
  std::shared_ptr<Parameter<T>> b;
  Activation act = Activation::ReLU;

  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& name, int d_in, int d_out,
         Activation act, Rng& rng)
      : W(store.add_weight(name + ".W", d_out, d_in, rng)),
        b(store.add_bias(name + ".b", d_out)),
        act(act) {}

  Var<T> operator()(Tape<T>& t, Var<T> x) const {
    Var<T> y = add_bias(matmul(t.use(*W), x), t.use(*b));
    return act == Activation::ReLU ? relu(y) : y;
  }

  int d_in() const { return static_cast<int>(W->value.cols()); }
  int d_out() const { return static_cast<int>(W->value.rows()); }
};

// Hidden rectified layers followed by an affine output layer.
template <typename T>
struct Mlp {
  std::vector<Linear<T>> layers;

  Mlp() = default;
  Mlp(ParameterStore<T>& store, const std::string& name, int d_in,
      const std::vector<int>& hidden, int d_out, Rng& rng) {
    int cur = d_in;
    for (size_t i = 0; i < hidden.size(); ++i) {
      layers.emplace_back(store, name + ".l" + std::to_string(i), cur, hidden[i],
                          Activation::ReLU, rng);
      cur = hidden[i];
    }
    layers.emplace_back(store, name + ".out", cur, d_out, Activation::None, rng);
  }

  Var<T> operator()(Tape<T>& t, Var<T> x) const {
    Var<T> h = x;
    for (const auto& l : layers) h = l(t, h);
    return h;
  }
};

// Gate block order in the fused 4H x * transforms: input, forget, cell,
// output.
template <typename T>
struct LstmParams {
  std::shared_ptr<Parameter<T>> W_x;  // 4H x D
  std::shared_ptr<Parameter<T>> W_h;  // 4H x H
  std::shared_ptr<Parameter<T>> b;    // 4H x 1
  int hidden = 0;

  LstmParams() = default;
  LstmParams(ParameterStore<T>& store, const std::string& name, int d_in, int h,
             Rng& rng)
      : W_x(store.add_weight(name + ".W_x", 4 * h, d_in, rng)),
        W_h(store.add_weight(name + ".W_h", 4 * h, h, rng)),
        b(store.add_bias(name + ".b", 4 * h)),
        hidden(h) {}
};

// Runs one direction over X (D x n); returns hidden states H x n in
// sentence position order (column t = state at token t).
template <typename T>
Var<T> lstm_direction(Tape<T>& t, Var<T> X, const LstmParams<T>& p, bool reverse) {
  const int n = static_cast<int>(t.value(X).cols());
  const int H = p.hidden;
  Var<T> XW = matmul(t.use(*p.W_x), X);  // 4H x n
  Var<T> Wh = t.use(*p.W_h);
  Var<T> bias = t.use(*p.b);
  Var<T> h = t.leaf(Matrix<T>::Zero(H, 1));
  Var<T> c = t.leaf(Matrix<T>::Zero(H, 1));
  std::vector<Var<T>> states(n);
  for (int step = 0; step < n; ++step) {
    const int pos = reverse ? n - 1 - step : step;
    Var<T> pre = add(add(col(XW, pos), matmul(Wh, h)), bias);
    Var<T> i = sigmoid(slice_rows(pre, 0, H));
    Var<T> f = sigmoid(slice_rows(pre, H, H));
    Var<T> g = tanh_op(slice_rows(pre, 2 * H, H));
    Var<T> o = sigmoid(slice_rows(pre, 3 * H, H));
    c = add(cmul(f, c), cmul(i, g));
    h = cmul(o, tanh_op(c));
    states[pos] = h;
  }
  return concat_cols(states);
}

template <typename T>
struct BiLstm {
  LstmParams<T> fw;
  LstmParams<T> bw;

  BiLstm() = default;
  BiLstm(ParameterStore<T>& store, const std::string& name, int d_in, int hidden,
         Rng& rng)
      : fw(store, name + ".fw", d_in, hidden, rng),
        bw(store, name + ".bw", d_in, hidden, rng) {}

  // (forward states, backward states), each H x n.
  std::pair<Var<T>, Var<T>> operator()(Tape<T>& t, Var<T> X) const {
    return {lstm_direction(t, X, fw, false), lstm_direction(t, X, bw, true)};
  }

  int hidden() const { return fw.hidden; }
};

template <typename T>
Var<T> softmax_cross_entropy(Tape<T>& t, Var<T> logits, int gold, T class_weight = T(1)) {
  (void)t;
  return cross_entropy(logits, gold, class_weight);
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer; state keyed by parameter identity in store
// order. step() consumes and clears accumulated gradients.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParameterStore<T>& store, double lr) {
    ++t_;
    const T b1 = static_cast<T>(cfg_.beta1);
    const T b2 = static_cast<T>(cfg_.beta2);
    const T bc1 = T(1) - static_cast<T>(std::pow(cfg_.beta1, static_cast<double>(t_)));
    const T bc2 = T(1) - static_cast<T>(std::pow(cfg_.beta2, static_cast<double>(t_)));
    const T eps = static_cast<T>(cfg_.eps);
    for (const auto& p : store.all()) {
      if (!p->trainable) continue;
      auto& slot = state_[p.get()];
      if (slot.m.size() == 0) {
        slot.m.setZero(p->value.rows(), p->value.cols());
        slot.v.setZero(p->value.rows(), p->value.cols());
      }
      const Matrix<T>& g = p->grad;
      slot.m = b1 * slot.m + (T(1) - b1) * g;
      slot.v = (b2 * slot.v.array() + (T(1) - b2) * g.array().square()).matrix();
      p->value -=
          (static_cast<T>(lr) * (slot.m.array() / bc1) /
           ((slot.v.array() / bc2).sqrt() + eps))
              .matrix();
      p->zero_grad();
    }
  }

  int64_t steps() const { return t_; }

 private:
  struct Slot {
    Matrix<T> m;
    Matrix<T> v;
  };
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::unordered_map<const Parameter<T>*, Slot> state_;
};

}  // namespace saecon
