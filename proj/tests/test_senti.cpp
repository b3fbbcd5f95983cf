#include <doctest.h>

#include "saecon/gradcheck.hpp"
#include "saecon/senti.hpp"
#include "support/oracles.hpp"

using namespace saecon;
using namespace saecon::testing;

namespace {

Matrix<double> random_matrix(int r, int c, Rng& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix<double> m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = dist(rng);
  return m;
}

}  // namespace

TEST_CASE("grl forward is the identity, bit-exact") {
  Tape<double> t;
  Matrix<double> x(2, 3);
  x << 1.5, -2.0, 0.0, 3.25, -0.125, 7.0;
  for (double alpha : {0.0, 0.5, 1.0, 3.7}) {
    Var<double> y = grl(t.leaf(x, true), alpha);
    CHECK((t.value(y).array() == x.array()).all());
    // idempotence of the forward map
    Var<double> yy = grl(y, alpha);
    CHECK((t.value(yy).array() == x.array()).all());
  }
}

TEST_CASE("grl backward is -alpha times upstream") {
  for (double alpha : {0.0, 0.5, 1.0}) {
    Tape<double> t;
    Matrix<double> x(2, 1);
    x << 2.0, -4.0;
    Var<double> leaf = t.leaf(x, true);
    Var<double> through = grl(leaf, alpha);
    // loss = sum(through .* c): upstream gradient on `through` equals c
    Matrix<double> c(2, 1);
    c << 1.0, 1.0;
    Var<double> loss = dot(through, t.leaf(c));
    t.backward(loss);
    // d loss / d leaf should be -alpha * c
    const Matrix<double> g = t.grad_of(leaf);
    CHECK(g(0, 0) == -alpha * 1.0);
    CHECK(g(1, 0) == -alpha * 1.0);
  }
}

TEST_CASE("grl composite gradient identity holds to 1e-10") {
  Rng rng(19);
  ParameterStore<double> store;
  Mlp<double> f(store, "f", 3, {4}, 2, rng);
  Matrix<double> x0 = random_matrix(3, 1, rng, 0.5);

  for (double alpha : {0.0, 0.5, 1.0}) {
    // gradient of sum(f(grl(x))) wrt x
    Tape<double> t1;
    Var<double> x1 = t1.leaf(x0, true);
    Var<double> y1 = f(t1, grl(x1, alpha));
    Var<double> loss1 = dot(y1, t1.leaf(Matrix<double>::Ones(2, 1)));
    t1.backward(loss1);
    const Matrix<double> g_through = t1.grad_of(x1);

    // gradient of sum(f(x)) wrt x, scaled by -alpha
    Tape<double> t2;
    Var<double> x2 = t2.leaf(x0, true);
    Var<double> y2 = f(t2, x2);
    Var<double> loss2 = dot(y2, t2.leaf(Matrix<double>::Ones(2, 1)));
    t2.backward(loss2);
    const Matrix<double> g_plain = t2.grad_of(x2);

    CHECK((g_through - (-alpha) * g_plain).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("analyze returns per-query features of constant width") {
  Rng rng(23);
  ParameterStore<double> store;
  SentimentAnalyzer<double> analyzer(store, "a", 4, 5, 6, 3, rng);
  LabelVocab vocab;
  ResolvedGraph g = random_resolved_graph(7, rng, vocab);
  Tape<double> t;
  Var<double> S0 = t.leaf(random_matrix(4, 7, rng, 0.5));

  SUBCASE("CPC input yields two vectors") {
    auto hs = analyzer(t, S0, g, {{0, 0}, {5, 6}});
    REQUIRE(hs.size() == 2);
    CHECK(t.value(hs[0]).rows() == 6);
    CHECK(t.value(hs[1]).rows() == 6);
    CHECK(t.value(hs[0]).cols() == 1);
  }
  SUBCASE("ABSA input yields one vector") {
    auto hs = analyzer(t, S0, g, {{2, 3}});
    REQUIRE(hs.size() == 1);
    CHECK(t.value(hs[0]).rows() == 6);
  }
  SUBCASE("duplicate identical queries give identical vectors") {
    auto hs = analyzer(t, S0, g, {{2, 3}, {2, 3}});
    REQUIRE(hs.size() == 2);
    CHECK((t.value(hs[0]) - t.value(hs[1])).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("zero or three queries are errors") {
    CHECK_THROWS_AS(analyzer(t, S0, g, {}), Error);
    CHECK_THROWS_AS(analyzer(t, S0, g, {{0, 0}, {1, 1}, {2, 2}}), Error);
  }
  SUBCASE("window radius clamps to the sentence") {
    auto hs = analyzer(t, S0, g, {{0, 0}});  // window would start below 0
    CHECK(t.value(hs[0]).rows() == 6);
  }
}

TEST_CASE("analyzer passes grad_check") {
  Rng rng(29);
  ParameterStore<double> store;
  SentimentAnalyzer<double> analyzer(store, "a", 3, 2, 3, 1, rng);
  LabelVocab vocab;
  ResolvedGraph g = random_resolved_graph(4, rng, vocab);
  Matrix<double> X = random_matrix(3, 4, rng, 0.5);
  auto report = grad_check(
      store,
      [&](Tape<double>& t) {
        auto hs = analyzer(t, t.leaf(X), g, {{0, 1}, {2, 3}});
        return add(sq_norm(hs[0]), sq_norm(hs[1]));
      },
      1e-3, 1e-4);
  CAPTURE(report.failure);
  CHECK(report.pass);
}

TEST_CASE("domain_predict") {
  Rng rng(31);
  ParameterStore<double> store;
  DomainClassifier<double> dc(store, "dc", 4, 3, rng);
  SUBCASE("zero parameters give the uniform binary simplex") {
    for (auto& p : store.all()) p->value.setZero();
    Tape<double> t;
    Var<double> probs = dc.predict(t, t.leaf(random_matrix(4, 1, rng)), 1.0);
    CHECK(t.value(probs)(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.value(probs)(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("probabilities sum to one") {
    Tape<double> t;
    for (int trial = 0; trial < 10; ++trial) {
      Var<double> probs = dc.predict(t, t.leaf(random_matrix(4, 1, rng, 3.0)), 0.5);
      CHECK(std::abs(t.value(probs).sum() - 1.0) < 1e-6);
    }
  }
  SUBCASE("the GRL sits on the domain path: input gradient is reversed") {
    Tape<double> t;
    Var<double> h = t.leaf(random_matrix(4, 1, rng, 0.5), true);
    Var<double> loss = cross_entropy(dc.logits(t, h, 1.0), 0, 1.0);
    t.backward(loss);
    const Matrix<double> g_rev = t.grad_of(h);

    Tape<double> t2;
    Var<double> h2 = t2.leaf(t.value(h), true);
    Var<double> loss2 = cross_entropy(dc.logits(t2, h2, -1.0), 0, 1.0);
    t2.backward(loss2);
    const Matrix<double> g_fwd = t2.grad_of(h2);
    CHECK((g_rev + g_fwd).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("domain classifier passes grad_check") {
    Matrix<double> h = random_matrix(4, 1, rng, 0.5);
    auto report = grad_check(
        store,
        [&](Tape<double>& t) {
          return cross_entropy(dc.logits(t, t.leaf(h), 1.0), 1, 1.0);
        },
        1e-3, 1e-4);
    CAPTURE(report.failure);
    CHECK(report.pass);
  }
}
