#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "saecon/error.hpp"

namespace saecon {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
  bool trainable = true;
  // Participates in the L2 regularizer (transform weights do, additive
  // biases and gate offsets do not).
  bool weight_decay = false;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename T>
class Tape;

template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  int idx = -1;

  bool valid() const { return tape != nullptr && idx >= 0; }
};

// Dynamic reverse-mode tape. Nodes are appended in forward order; backward
// replays them in reverse. One tape per optimization step; parameters live
// outside and accumulate gradients across instances of the batch.
template <typename T>
class Tape {
 public:
  using Mat = Matrix<T>;
  using BackwardFn = std::function<void(Tape<T>&, const Mat& upstream)>;

  void clear() {
    nodes_.clear();
    param_cache_.clear();
  }

  int size() const { return static_cast<int>(nodes_.size()); }

  // The reference is invalidated by the next op on this tape; copy it when
  // holding across further graph construction.
  const Mat& value(Var<T> v) const { return nodes_[v.idx].value; }
  T scalar(Var<T> v) const { return nodes_[v.idx].value(0, 0); }
  bool needs_grad(Var<T> v) const { return nodes_[v.idx].needs_grad; }

  // Gradient accumulated at a node after backward(); zero if none reached it.
  Mat grad_of(Var<T> v) const {
    const Node& n = nodes_[v.idx];
    if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  Var<T> leaf(Mat value, bool needs_grad = false) {
    return push(std::move(value), needs_grad, nullptr);
  }

  // Memoized per tape so each instance of a batch shares one node per
  // parameter; backward drains into Parameter::grad.
  Var<T> use(Parameter<T>& p) {
    auto it = param_cache_.find(&p);
    if (it != param_cache_.end()) return Var<T>{this, it->second};
    Parameter<T>* pp = &p;
    Var<T> v = push(p.value, p.trainable, [pp](Tape<T>&, const Mat& g) {
      if (!pp->trainable) return;
      if (pp->grad.size() == 0) pp->zero_grad();
      pp->grad += g;
    });
    param_cache_[&p] = v.idx;
    return v;
  }

  // Generic hook for fused operations with hand-derived backward passes.
  Var<T> custom(Mat out, const std::vector<Var<T>>& deps, BackwardFn backward) {
    bool ng = false;
    for (const auto& d : deps) ng = ng || nodes_[d.idx].needs_grad;
    return push(std::move(out), ng, ng ? std::move(backward) : nullptr);
  }

  // For ops whose backward reads their own output (sigmoid, softmax): the
  // closure can only be formed once the node's Var exists.
  void set_backward(Var<T> v, BackwardFn backward) {
    if (nodes_[v.idx].needs_grad) nodes_[v.idx].backward = std::move(backward);
  }

  void add_grad(Var<T> v, const Mat& g) {
    Node& n = nodes_[v.idx];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
    n.grad += g;
  }

  void backward(Var<T> loss) {
    Node& ln = nodes_[loss.idx];
    if (ln.value.rows() != 1 || ln.value.cols() != 1)
      throw Error(ErrorCode::Numeric, "backward: loss must be scalar");
    if (ln.grad.size() == 0) ln.grad.setZero(1, 1);
    ln.grad(0, 0) += T(1);
    for (int i = loss.idx; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.grad.size() == 0 || !n.backward) continue;
      n.backward(*this, n.grad);
    }
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    BackwardFn backward;
    bool needs_grad = false;
  };

  Var<T> push(Mat value, bool needs_grad, BackwardFn backward) {
    nodes_.push_back(Node{std::move(value), Mat(), std::move(backward), needs_grad});
    return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, int> param_cache_;
};

namespace detail {

template <typename T>
void check_same_shape(const Matrix<T>& a, const Matrix<T>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::Numeric,
                std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()) + ")");
}

}  // namespace detail

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.cols() != B.rows())
    throw Error(ErrorCode::Numeric,
                "matmul: shape mismatch (" + std::to_string(A.rows()) + "x" +
                    std::to_string(A.cols()) + " vs " + std::to_string(B.rows()) + "x" +
                    std::to_string(B.cols()) + ")");
  return t.custom(A * B, {a, b}, [a, b](Tape<T>& t, const Matrix<T>& g) {
    if (t.needs_grad(a)) t.add_grad(a, g * t.value(b).transpose());
    if (t.needs_grad(b)) t.add_grad(b, t.value(a).transpose() * g);
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  detail::check_same_shape(t.value(a), t.value(b), "add");
  return t.custom(t.value(a) + t.value(b), {a, b},
                  [a, b](Tape<T>& t, const Matrix<T>& g) {
                    t.add_grad(a, g);
                    t.add_grad(b, g);
                  });
}

// a (d x n) plus column vector b (d x 1) broadcast across columns.
template <typename T>
Var<T> add_bias(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (B.cols() != 1 || A.rows() != B.rows())
    throw Error(ErrorCode::Numeric,
                "add_bias: shape mismatch (" + std::to_string(A.rows()) + "x" +
                    std::to_string(A.cols()) + " vs " + std::to_string(B.rows()) + "x" +
                    std::to_string(B.cols()) + ")");
  Matrix<T> out = A;
  out.colwise() += B.col(0);
  return t.custom(std::move(out), {a, b}, [a, b](Tape<T>& t, const Matrix<T>& g) {
    t.add_grad(a, g);
    if (t.needs_grad(b)) t.add_grad(b, g.rowwise().sum());
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  detail::check_same_shape(t.value(a), t.value(b), "sub");
  return t.custom(t.value(a) - t.value(b), {a, b},
                  [a, b](Tape<T>& t, const Matrix<T>& g) {
                    t.add_grad(a, g);
                    t.add_grad(b, -g);
                  });
}

template <typename T>
Var<T> cmul(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  detail::check_same_shape(t.value(a), t.value(b), "cmul");
  return t.custom(t.value(a).cwiseProduct(t.value(b)), {a, b},
                  [a, b](Tape<T>& t, const Matrix<T>& g) {
                    if (t.needs_grad(a)) t.add_grad(a, g.cwiseProduct(t.value(b)));
                    if (t.needs_grad(b)) t.add_grad(b, g.cwiseProduct(t.value(a)));
                  });
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
  Tape<T>& t = *a.tape;
  return t.custom(t.value(a) * s, {a}, [a, s](Tape<T>& t, const Matrix<T>& g) {
    t.add_grad(a, g * s);
  });
}

template <typename T>
Var<T> add_n(const std::vector<Var<T>>& xs) {
  if (xs.empty())
    throw Error(ErrorCode::Numeric, "add_n: empty operand list");
  Tape<T>& t = *xs[0].tape;
  Matrix<T> out = t.value(xs[0]);
  for (size_t i = 1; i < xs.size(); ++i) {
    detail::check_same_shape(out, t.value(xs[i]), "add_n");
    out += t.value(xs[i]);
  }
  return t.custom(std::move(out), xs, [xs](Tape<T>& t, const Matrix<T>& g) {
    for (const auto& x : xs) t.add_grad(x, g);
  });
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  Tape<T>& t = *a.tape;
  Matrix<T> out = t.value(a).unaryExpr(
      [](T x) { return T(1) / (T(1) + std::exp(-x)); });
  Var<T> v = t.custom(std::move(out), {a}, nullptr);
  t.set_backward(v, [a, v](Tape<T>& t, const Matrix<T>& g) {
    const auto& s = t.value(v);
    t.add_grad(a, g.cwiseProduct(s.cwiseProduct(Matrix<T>::Ones(s.rows(), s.cols()) - s)));
  });
  return v;
}

template <typename T>
Var<T> tanh_op(Var<T> a) {
  Tape<T>& t = *a.tape;
  Matrix<T> out = t.value(a).unaryExpr([](T x) { return std::tanh(x); });
  Var<T> v = t.custom(std::move(out), {a}, nullptr);
  t.set_backward(v, [a, v](Tape<T>& t, const Matrix<T>& g) {
    const auto& y = t.value(v);
    t.add_grad(a, g.cwiseProduct(Matrix<T>::Ones(y.rows(), y.cols()) - y.cwiseProduct(y)));
  });
  return v;
}

template <typename T>
Var<T> relu(Var<T> a) {
  Tape<T>& t = *a.tape;
  Matrix<T> out = t.value(a).cwiseMax(T(0));
  return t.custom(std::move(out), {a}, [a](Tape<T>& t, const Matrix<T>& g) {
    const auto& x = t.value(a);
    Matrix<T> masked = g;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        if (x(i, j) <= T(0)) masked(i, j) = T(0);
    t.add_grad(a, masked);
  });
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& xs) {
  if (xs.empty())
    throw Error(ErrorCode::Numeric, "concat_rows: empty operand list");
  Tape<T>& t = *xs[0].tape;
  Eigen::Index rows = 0;
  const Eigen::Index cols = t.value(xs[0]).cols();
  for (const auto& x : xs) {
    if (t.value(x).cols() != cols)
      throw Error(ErrorCode::Numeric, "concat_rows: column mismatch");
    rows += t.value(x).rows();
  }
  Matrix<T> out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& x : xs) {
    out.middleRows(r, t.value(x).rows()) = t.value(x);
    r += t.value(x).rows();
  }
  return t.custom(std::move(out), xs, [xs](Tape<T>& t, const Matrix<T>& g) {
    Eigen::Index r = 0;
    for (const auto& x : xs) {
      const Eigen::Index h = t.value(x).rows();
      t.add_grad(x, g.middleRows(r, h));
      r += h;
    }
  });
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& xs) {
  if (xs.empty())
    throw Error(ErrorCode::Numeric, "concat_cols: empty operand list");
  Tape<T>& t = *xs[0].tape;
  Eigen::Index cols = 0;
  const Eigen::Index rows = t.value(xs[0]).rows();
  for (const auto& x : xs) {
    if (t.value(x).rows() != rows)
      throw Error(ErrorCode::Numeric, "concat_cols: row mismatch");
    cols += t.value(x).cols();
  }
  Matrix<T> out(rows, cols);
  Eigen::Index c = 0;
  for (const auto& x : xs) {
    out.middleCols(c, t.value(x).cols()) = t.value(x);
    c += t.value(x).cols();
  }
  return t.custom(std::move(out), xs, [xs](Tape<T>& t, const Matrix<T>& g) {
    Eigen::Index c = 0;
    for (const auto& x : xs) {
      const Eigen::Index w = t.value(x).cols();
      t.add_grad(x, g.middleCols(c, w));
      c += w;
    }
  });
}

template <typename T>
Var<T> slice_rows(Var<T> a, int r0, int nrows) {
  Tape<T>& t = *a.tape;
  return t.custom(t.value(a).middleRows(r0, nrows), {a},
                  [a, r0, nrows](Tape<T>& t, const Matrix<T>& g) {
                    const auto& x = t.value(a);
                    Matrix<T> full = Matrix<T>::Zero(x.rows(), x.cols());
                    full.middleRows(r0, nrows) = g;
                    t.add_grad(a, full);
                  });
}

template <typename T>
Var<T> col(Var<T> a, int j) {
  Tape<T>& t = *a.tape;
  return t.custom(t.value(a).col(j), {a}, [a, j](Tape<T>& t, const Matrix<T>& g) {
    const auto& x = t.value(a);
    Matrix<T> full = Matrix<T>::Zero(x.rows(), x.cols());
    full.col(j) = g;
    t.add_grad(a, full);
  });
}

template <typename T>
Var<T> element(Var<T> a, int i, int j) {
  Tape<T>& t = *a.tape;
  Matrix<T> out(1, 1);
  out(0, 0) = t.value(a)(i, j);
  return t.custom(std::move(out), {a}, [a, i, j](Tape<T>& t, const Matrix<T>& g) {
    const auto& x = t.value(a);
    Matrix<T> full = Matrix<T>::Zero(x.rows(), x.cols());
    full(i, j) = g(0, 0);
    t.add_grad(a, full);
  });
}

// Mean over a set of columns -> d x 1.
template <typename T>
Var<T> mean_cols(Var<T> a, std::vector<int> idxs) {
  if (idxs.empty())
    throw Error(ErrorCode::Numeric, "mean_cols: empty index set");
  Tape<T>& t = *a.tape;
  const auto& A = t.value(a);
  Matrix<T> out = Matrix<T>::Zero(A.rows(), 1);
  for (int j : idxs) out.col(0) += A.col(j);
  out /= static_cast<T>(idxs.size());
  return t.custom(std::move(out), {a},
                  [a, idxs = std::move(idxs)](Tape<T>& t, const Matrix<T>& g) {
                    const auto& x = t.value(a);
                    Matrix<T> full = Matrix<T>::Zero(x.rows(), x.cols());
                    const T inv = T(1) / static_cast<T>(idxs.size());
                    for (int j : idxs) full.col(j) += g.col(0) * inv;
                    t.add_grad(a, full);
                  });
}

template <typename T>
Var<T> dot(Var<T> a, Var<T> b) {
  Tape<T>& t = *a.tape;
  detail::check_same_shape(t.value(a), t.value(b), "dot");
  Matrix<T> out(1, 1);
  out(0, 0) = (t.value(a).array() * t.value(b).array()).sum();
  return t.custom(std::move(out), {a, b}, [a, b](Tape<T>& t, const Matrix<T>& g) {
    if (t.needs_grad(a)) t.add_grad(a, t.value(b) * g(0, 0));
    if (t.needs_grad(b)) t.add_grad(b, t.value(a) * g(0, 0));
  });
}

// Column-vector softmax, numerically shifted.
template <typename T>
Var<T> softmax_col(Var<T> a) {
  Tape<T>& t = *a.tape;
  const auto& x = t.value(a);
  if (x.cols() != 1)
    throw Error(ErrorCode::Numeric, "softmax_col: expected a column vector");
  const T m = x.maxCoeff();
  Matrix<T> e = (x.array() - m).exp().matrix();
  Matrix<T> s = e / e.sum();
  Var<T> v = t.custom(std::move(s), {a}, nullptr);
  t.set_backward(v, [a, v](Tape<T>& t, const Matrix<T>& g) {
    const auto& sm = t.value(v);
    const T inner = (sm.array() * g.array()).sum();
    t.add_grad(a, sm.cwiseProduct(g) - sm * inner);
  });
  return v;
}

// loss = -weight * log softmax(logits)[gold]
template <typename T>
Var<T> cross_entropy(Var<T> logits, int gold, T weight = T(1)) {
  Tape<T>& t = *logits.tape;
  const auto& x = t.value(logits);
  if (x.cols() != 1 || gold < 0 || gold >= x.rows())
    throw Error(ErrorCode::Numeric,
                "cross_entropy: gold class " + std::to_string(gold) +
                    " out of range for " + std::to_string(x.rows()) + " logits");
  const T m = x.maxCoeff();
  const T lse = m + std::log((x.array() - m).exp().sum());
  Matrix<T> out(1, 1);
  out(0, 0) = weight * (lse - x(gold, 0));
  return t.custom(std::move(out), {logits},
                  [logits, gold, weight](Tape<T>& t, const Matrix<T>& g) {
                    const auto& x = t.value(logits);
                    const T m = x.maxCoeff();
                    Matrix<T> e = (x.array() - m).exp().matrix();
                    Matrix<T> s = e / e.sum();
                    s(gold, 0) -= T(1);
                    t.add_grad(logits, s * (weight * g(0, 0)));
                  });
}

// Gradient reversal: identity forward, -alpha * upstream backward.
template <typename T>
Var<T> grl(Var<T> a, T alpha) {
  Tape<T>& t = *a.tape;
  return t.custom(t.value(a), {a}, [a, alpha](Tape<T>& t, const Matrix<T>& g) {
    t.add_grad(a, -alpha * g);
  });
}

// Sum of squared entries -> 1 x 1.
template <typename T>
Var<T> sq_norm(Var<T> a) {
  Tape<T>& t = *a.tape;
  Matrix<T> out(1, 1);
  out(0, 0) = t.value(a).squaredNorm();
  return t.custom(std::move(out), {a}, [a](Tape<T>& t, const Matrix<T>& g) {
    t.add_grad(a, t.value(a) * (T(2) * g(0, 0)));
  });
}

}  // namespace saecon
