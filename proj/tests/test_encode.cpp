#include <doctest.h>

#include <random>

#include "saecon/encode.hpp"
#include "saecon/utf8.hpp"
#include "support/fixtures.hpp"

using namespace saecon;
using namespace saecon::testing;

TEST_CASE("tokenizer splits on whitespace and punctuation with spans") {
  auto toks = tokenize("Python, not MATLAB!");
  REQUIRE(toks.size() == 5);
  CHECK(toks.tokens[0] == "Python");
  CHECK(toks.tokens[1] == ",");
  CHECK(toks.tokens[2] == "not");
  CHECK(toks.tokens[3] == "MATLAB");
  CHECK(toks.tokens[4] == "!");
  CHECK(toks.char_spans[0] == std::pair<size_t, size_t>{0, 6});
  CHECK(toks.char_spans[1] == std::pair<size_t, size_t>{6, 7});
  CHECK(toks.char_spans[3] == std::pair<size_t, size_t>{12, 18});
}

TEST_CASE("tokenizer spans are monotone and non-overlapping (property)") {
  std::mt19937_64 rng(3);
  const std::string alphabet = "ab c.,!x yz";
  for (int trial = 0; trial < 50; ++trial) {
    std::string s;
    const size_t len = rng() % 40;
    for (size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    auto toks = tokenize(s);
    size_t prev_end = 0;
    for (size_t i = 0; i < toks.size(); ++i) {
      CHECK(toks.char_spans[i].first >= prev_end);
      CHECK(toks.char_spans[i].first < toks.char_spans[i].second);
      prev_end = toks.char_spans[i].second;
      // span recovers the token text
      CHECK(Utf8Text::decode(s).substr(toks.char_spans[i].first,
                                       toks.char_spans[i].second) == toks.tokens[i]);
    }
  }
}

TEST_CASE("static embedding loader") {
  TempDir dir;
  SUBCASE("two-line fixture gives vocabulary of 2") {
    auto path = write_file(dir.file("emb.txt"), "cat 1.0 2.0 3.0\ndog 4.0 5.0 6.0\n");
    auto table = load_static_embeddings(path);
    CHECK(table.size() == 2);
    CHECK(table.dim() == 3);
    bool oov = true;
    auto v = table.lookup("cat", &oov);
    CHECK_FALSE(oov);
    CHECK(v(0) == 1.0f);
    CHECK(v(2) == 3.0f);
  }
  SUBCASE("lookup is case-folded") {
    auto path = write_file(dir.file("emb.txt"), "cat 1 2\n");
    auto table = load_static_embeddings(path);
    bool oov = true;
    table.lookup("CAT", &oov);
    CHECK_FALSE(oov);
  }
  SUBCASE("OOV gives zero vector and flag") {
    auto path = write_file(dir.file("emb.txt"), "cat 1 2\n");
    auto table = load_static_embeddings(path);
    bool oov = false;
    auto v = table.lookup("bird", &oov);
    CHECK(oov);
    CHECK(v.norm() == 0.0f);
    CHECK(v.size() == 2);
  }
  SUBCASE("ragged rows name the line") {
    auto path = write_file(dir.file("emb.txt"), "cat 1 2 3\ndog 4 5\n");
    CHECK_THROWS_WITH_AS(load_static_embeddings(path), doctest::Contains(":2"), Error);
  }
}

TEST_CASE("embed_sentence rows are bit-identical to table rows") {
  TempDir dir;
  auto path = write_file(dir.file("emb.txt"),
                         "red 0.25 -1.5\ngreen 3.75 0.125\nblue -2.0 8.0\n");
  auto table = load_static_embeddings(path);
  auto toks = tokenize("red green blue");
  auto emb = embed_sentence(toks, table, {});
  REQUIRE(emb.n() == 3);
  REQUIRE(emb.d0() == 2);
  CHECK(emb.vectors(0, 0) == 0.25f);
  CHECK(emb.vectors(0, 1) == -1.5f);
  CHECK(emb.vectors(1, 0) == 3.75f);
  CHECK(emb.vectors(2, 1) == 8.0f);
  CHECK_FALSE(emb.oov[0]);

  SUBCASE("single OOV token gives a zero row") {
    auto toks2 = tokenize("purple");
    auto emb2 = embed_sentence(toks2, table, {});
    CHECK(emb2.vectors.row(0).norm() == 0.0f);
    CHECK(emb2.oov[0]);
  }
}

TEST_CASE("entity token span resolution") {
  auto toks = tokenize("ticks are worse in Mid Missouri than in South Georgia today");
  // tokens: ticks are worse in Mid Missouri than in South Georgia today
  //         0     1   2     3  4   5        6    7  8     9       10
  EntitySpan span;
  span.text = "South Georgia";
  const auto pos = std::string("ticks are worse in Mid Missouri than in ").size();
  span.start = pos;
  span.end = pos + span.text.size();
  auto [first, last] = resolve_entity_tokens(toks, span, "s2");
  CHECK(first == 8);
  CHECK(last == 9);

  SUBCASE("entity intersecting no token errors with the id") {
    EntitySpan bad;
    bad.text = "zz";
    bad.start = 200;
    bad.end = 202;
    CHECK_THROWS_AS(resolve_entity_tokens(toks, bad, "s2"), Error);
  }
}

TEST_CASE("pool_wordpieces") {
  SUBCASE("single-piece word is identity") {
    Eigen::MatrixXf pieces(1, 2);
    pieces << 1.5f, -2.0f;
    auto words = pool_wordpieces(pieces, {0}, 1);
    CHECK(words(0, 0) == 1.5f);
    CHECK(words(0, 1) == -2.0f);
  }
  SUBCASE("two pieces average") {
    Eigen::MatrixXf pieces(2, 2);
    pieces << 1, 2, 3, 4;
    auto words = pool_wordpieces(pieces, {0, 0}, 1);
    CHECK(words(0, 0) == 2.0f);
    CHECK(words(0, 1) == 3.0f);
  }
  SUBCASE("special tokens are dropped") {
    Eigen::MatrixXf pieces(4, 1);
    pieces << 100, 1, 3, 100;
    auto words = pool_wordpieces(pieces, {-1, 0, 0, -1}, 1);
    CHECK(words(0, 0) == 2.0f);
  }
  SUBCASE("word with no pieces is an error") {
    Eigen::MatrixXf pieces(1, 1);
    pieces << 1;
    CHECK_THROWS_AS(pool_wordpieces(pieces, {0}, 2), Error);
  }
  SUBCASE("mean is piece-order invariant (property)") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      const int p = 2 + rng() % 4;
      Eigen::MatrixXf pieces(p, 3);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < 3; ++j)
          pieces(i, j) = static_cast<float>(static_cast<int>(rng() % 17) - 8);
      auto w1 = pool_wordpieces(pieces, std::vector<int>(p, 0), 1);
      Eigen::MatrixXf shuffled = pieces.colwise().reverse();
      auto w2 = pool_wordpieces(shuffled, std::vector<int>(p, 0), 1);
      CHECK((w1 - w2).norm() < 1e-5f);
    }
  }
}

TEST_CASE("conllu loader") {
  TempDir dir;
  SUBCASE("two-token sentence with one nsubj row") {
    std::string content =
        "1\tdogs\tdog\tNOUN\t_\t_\t2\tnsubj\t_\t_\n"
        "2\tbark\tbark\tVERB\t_\t_\t0\troot\t_\t_\n";
    auto sents = load_conllu(write_file(dir.file("a.conllu"), content));
    REQUIRE(sents.size() == 1);
    CHECK(sents[0].tokens.size() == 2);
    REQUIRE(sents[0].edges.size() == 1);
    CHECK(sents[0].edges[0].head == 1);
    CHECK(sents[0].edges[0].dependent == 0);
    CHECK(sents[0].edges[0].dep_type == "nsubj");
  }
  SUBCASE("single-token root-only sentence has zero edges") {
    auto sents = load_conllu(
        write_file(dir.file("b.conllu"), "1\thi\t_\t_\t_\t_\t0\troot\t_\t_\n"));
    REQUIRE(sents.size() == 1);
    CHECK(sents[0].edges.empty());
  }
  SUBCASE("multi-sentence file splits on blank lines") {
    std::string content =
        "# sent_id = s1\n"
        "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
        "\n"
        "# sent_id = s2\n"
        "1\tb\t_\t_\t_\t_\t2\tdet\t_\t_\n"
        "2\tc\t_\t_\t_\t_\t0\troot\t_\t_\n"
        "\n";
    auto sents = load_conllu(write_file(dir.file("c.conllu"), content));
    REQUIRE(sents.size() == 2);
    CHECK(sents[0].sent_id == "s1");
    CHECK(sents[1].sent_id == "s2");
    CHECK(sents[1].edges.size() == 1);
  }
  SUBCASE("non-integer HEAD names the line") {
    auto path = write_file(dir.file("d.conllu"), "1\ta\t_\t_\t_\t_\tx\tdep\t_\t_\n");
    CHECK_THROWS_WITH_AS(load_conllu(path), doctest::Contains(":1"), Error);
  }
  SUBCASE("multiword ranges are skipped") {
    std::string content =
        "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "1\tdo\t_\t_\t_\t_\t0\troot\t_\t_\n"
        "2\tnot\t_\t_\t_\t_\t1\tadvmod\t_\t_\n";
    auto sents = load_conllu(write_file(dir.file("e.conllu"), content));
    REQUIRE(sents.size() == 1);
    CHECK(sents[0].tokens.size() == 2);
    CHECK(sents[0].edges.size() == 1);
  }
}

TEST_CASE("build_graph expands edges and adds self loops") {
  auto toks = tokenize("dogs bark");
  LabelVocab vocab;
  SUBCASE("2 tokens, 1 edge -> 4 edges total") {
    auto g = build_graph(toks, {{1, 0, "nsubj"}}, &vocab);
    CHECK(g.num_vertices == 2);
    CHECK(g.edges.size() == 4);  // out + inv + 2 self
    CHECK(vocab.lookup(EdgeDirection::Out, "nsubj") != vocab.unk_id());
    CHECK(vocab.lookup(EdgeDirection::Inv, "nsubj") != vocab.unk_id());
    CHECK(vocab.lookup(EdgeDirection::Out, "nsubj") !=
          vocab.lookup(EdgeDirection::Inv, "nsubj"));
  }
  SUBCASE("1 token, 0 edges -> self loop only") {
    auto toks1 = tokenize("hi");
    auto g = build_graph(toks1, {}, &vocab);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].direction == EdgeDirection::Self);
    CHECK(g.edges[0].source == 0);
    CHECK(g.edges[0].target == 0);
  }
  SUBCASE("dangling endpoint is an error") {
    CHECK_THROWS_AS(build_graph(toks, {{5, 0, "x"}}, &vocab), Error);
  }
  SUBCASE("graph symmetry property: OUT iff INV reversed") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 2 + static_cast<int>(rng() % 5);
      std::vector<RawEdge> raw;
      for (int i = 0; i < n - 1; ++i)
        raw.push_back({static_cast<int>(rng() % n), static_cast<int>(rng() % n), "dep"});
      TokenSequence ts;
      for (int i = 0; i < n; ++i) {
        ts.tokens.push_back("t");
        ts.char_spans.emplace_back(2 * i, 2 * i + 1);
      }
      auto g = build_graph(ts, raw, nullptr);
      CHECK(g.edges.size() == 2 * raw.size() + n);
      for (const auto& e : g.edges) {
        if (e.direction == EdgeDirection::Self) continue;
        const EdgeDirection want = e.direction == EdgeDirection::Out
                                       ? EdgeDirection::Inv
                                       : EdgeDirection::Out;
        bool found = false;
        for (const auto& o : g.edges)
          if (o.direction == want && o.source == e.target && o.target == e.source &&
              o.dep_type == e.dep_type)
            found = true;
        CHECK(found);
      }
    }
  }
}

TEST_CASE("label vocab UNK fallback and round trip") {
  LabelVocab vocab;
  const int id = vocab.add(EdgeDirection::Out, "nsubj");
  CHECK(vocab.lookup(EdgeDirection::Out, "nsubj") == id);
  CHECK(vocab.lookup(EdgeDirection::Out, "obj") == vocab.unk_id());
  CHECK(vocab.lookup(EdgeDirection::Inv, "nsubj") == vocab.unk_id());

  auto entries = vocab.entries();
  auto restored = LabelVocab::from_entries(entries);
  CHECK(restored.lookup(EdgeDirection::Out, "nsubj") == id);
  CHECK(restored.size() == vocab.size());
}

TEST_CASE("contextual sidecar store round trip") {
  TempDir dir;
  Eigen::MatrixXf a(2, 3);
  a << 1, 2, 3, 4, 5, 6;
  Eigen::MatrixXf b(1, 3);
  b << -1.5f, 0.25f, 9.0f;
  ContextualStore::write(dir.file("index.json"), dir.file("tensors.bin"),
                         {{"id_a", a}, {"id_b", b}});
  auto store = ContextualStore::open(dir.file("index.json"), dir.file("tensors.bin"));
  CHECK(store.d0() == 3);
  CHECK(store.contains("id_a"));
  CHECK_FALSE(store.contains("missing"));
  auto ra = store.load("id_a");
  CHECK(ra.rows() == 2);
  CHECK((ra - a).norm() == 0.0f);
  auto rb = store.load("id_b");
  CHECK(rb(0, 0) == -1.5f);
  CHECK_THROWS_AS(store.load("missing"), Error);
}
