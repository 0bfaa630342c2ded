#include <doctest.h>

#include <cmath>
#include <sstream>

#include "forumtag/encoders.hpp"
#include "forumtag/error.hpp"
#include "forumtag/numerics/gradcheck.hpp"
#include "forumtag/tagger.hpp"

using namespace forumtag;
using namespace forumtag::enc;
using forumtag::num::Shape;
using forumtag::num::Tensor;

namespace {

Sentence sentence_of(std::initializer_list<const char*> words) {
  Sentence s;
  for (const char* w : words) s.tokens.push_back({w, 0, 0});
  return s;
}

TaggedCorpus small_corpus() {
  TaggedCorpus c;
  c.push_back({"t", sentence_of({"Watch", "the", "video", "the"}), {Tag::O, Tag::O, Tag::O, Tag::O}, {}});
  c.push_back({"t", sentence_of({"video", "quiz"}), {Tag::O, Tag::O}, {sentence_of({"the", "Quiz"})}});
  return c;
}

}  // namespace

TEST_CASE("vocabulary reserves UNK and PAD") {
  Vocabulary v;
  CHECK(v.size() == 2);
  CHECK(v.id("<unk>") == Vocabulary::kUnk);
  CHECK(v.id("<pad>") == Vocabulary::kPad);
  CHECK(v.id("never-seen") == Vocabulary::kUnk);
  const std::size_t id = v.add("Video");
  CHECK(v.id("video") == id);
  CHECK(v.id("VIDEO") == id);
  CHECK(v.add("video") == id);
}

TEST_CASE("vocabulary build applies min_count over sentences and contexts") {
  const auto v = Vocabulary::build(small_corpus(), 2, nullptr);
  CHECK(v.contains("the"));
  CHECK(v.contains("video"));
  CHECK(v.contains("quiz"));
  CHECK_FALSE(v.contains("watch"));
  const std::vector<std::string> pre{"watch"};
  CHECK(Vocabulary::build(small_corpus(), 2, &pre).contains("watch"));
  const auto all = Vocabulary::build(small_corpus(), 1, nullptr);
  CHECK(all.size() == 2 + 4);
}

TEST_CASE("vocabulary roundtrips through its word list") {
  const auto v = Vocabulary::build(small_corpus(), 1, nullptr);
  const auto w = Vocabulary::from_words(v.words(), v.case_fold());
  CHECK(w.words() == v.words());
  CHECK(w.id("quiz") == v.id("quiz"));
  CHECK_THROWS_AS(Vocabulary::from_words({"a", "b"}, true), ValidationError);
}

TEST_CASE("char alphabet covers printable ASCII") {
  CharAlphabet a;
  CHECK(a.size() == 96);
  CHECK(a.id(' ') == 1);
  CHECK(a.id('~') == 95);
  CHECK(a.id('\n') == CharAlphabet::kUnkChar);
  CHECK(a.id(static_cast<char>(0xC3)) == CharAlphabet::kUnkChar);
  for (char c = 0x20; c < 0x7f; ++c) CHECK(a.symbol(a.id(c)) == c);
  CHECK(a.encode("Q1") == std::vector<std::size_t>{a.id('Q'), a.id('1')});
}

TEST_CASE("pretrained vectors parse and report errors with line numbers") {
  std::istringstream in("video 1 2 3\nquiz 4 5 6\n\nvideo 7 8 9\n");
  const auto pv = read_pretrained_vectors(in);
  CHECK(pv.dim == 3);
  CHECK(pv.words.size() == 2);
  CHECK(pv.vector(pv.find("quiz"))[2] == 6.0F);
  CHECK(pv.vector(pv.find("video"))[0] == 1.0F);
  CHECK(pv.find("Video") == pv.find("video"));
  CHECK_FALSE(pv.contains("lecture"));

  std::istringstream bad("a 1 2\nb 1 x\n");
  try {
    read_pretrained_vectors(bad, 0, "v.txt");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream wide("a 1 2\nb 1 2 3\n");
  CHECK_THROWS_AS(read_pretrained_vectors(wide), ParseError);
  std::istringstream dims("a 1 2\n");
  CHECK_THROWS_AS(read_pretrained_vectors(dims, 3), ParseError);
}

TEST_CASE("embedding coverage") {
  SUBCASE("reported ratio") {
    Coverage c{9761, 9761 - 3045, 3045};
    CHECK(std::abs(c.oov_ratio() - 0.3119) < 1e-4);
  }
  SUBCASE("covered rows are copied and PAD is zero") {
    std::istringstream in("video 1 2\nquiz 3 4\nlecture 5 6\n");
    const auto pv = read_pretrained_vectors(in);
    auto vocab = Vocabulary::build(small_corpus(), 1, nullptr);
    num::Rng rng(3);
    const auto emb = embed_pretrained<double>(pv, vocab, 2, rng);
    CHECK(emb.matrix.rows() == vocab.size());
    CHECK(emb.coverage.vocab_size == vocab.size() - 2);
    CHECK(emb.coverage.covered + emb.coverage.oov == emb.coverage.vocab_size);
    CHECK(emb.coverage.covered == 2);
    CHECK(emb.matrix(vocab.id("quiz"), 1) == 4.0);
    CHECK(emb.matrix(Vocabulary::kPad, 0) == 0.0);
    CHECK(emb.matrix(Vocabulary::kPad, 1) == 0.0);
    CHECK_THROWS_AS(embed_pretrained<double>(pv, vocab, 5, rng), ValidationError);
  }
  SUBCASE("empty vocabulary") {
    Vocabulary v;
    num::Rng rng(1);
    WordEmbeddings<double> e = embed_pretrained<double>(PretrainedVectors{}, v, 4, rng);
    CHECK(e.coverage.vocab_size == 0);
    CHECK(e.coverage.covered == 0);
    CHECK(e.coverage.oov == 0);
    CHECK(e.coverage.oov_ratio() == 0.0);
  }
}

TEST_CASE("char encoder output and gradients") {
  num::ParamSet<double> ps;
  num::Rng rng(5);
  CharAlphabet a;
  auto enc = CharEncoder<double>::create(ps, a.size(), 4, 3, rng);
  CHECK(enc.output_dim() == 6);
  {
    num::Tape<double> tape;
    CHECK(enc.encode(tape, a.encode("hw3")).size() == 6);
    CHECK_THROWS_AS(enc.encode(tape, a.encode("")), ValidationError);
  }
  const auto ids = a.encode("Q2");
  auto r = num::grad_check(ps, [&](num::Tape<double>& tape) { return num::sum_squares(enc.encode(tape, ids)); });
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("context encoder gives one vector per sentence") {
  num::ParamSet<double> ps;
  num::Rng rng(6);
  auto enc = ContextEncoder<double>::create(ps, num::init_params<double>(Shape{5, 3}, rng), 4, rng);
  num::Tape<double> tape;
  std::vector<std::vector<std::size_t>> none;
  CHECK(enc.encode(tape, none).empty());
  std::vector<std::vector<std::size_t>> two{{2, 3}, {4}};
  const auto out = enc.encode(tape, two);
  REQUIRE(out.size() == 2);
  CHECK(out[0].size() == 4);
  CHECK(out[1].size() == 4);
}

TEST_CASE("attention weights") {
  num::Rng rng(7);
  num::Tape<double> tape;
  auto leaf = [&](Shape s) {
    Tensor<double> t(s);
    for (double& v : t.storage()) v = rng.uniform(-1, 1);
    return tape.leaf(std::move(t));
  };
  auto w_a = leaf({3, 4});
  auto u_a = leaf({3, 2});
  auto v_a = leaf({3});
  auto h = leaf({4});

  SUBCASE("no context gives a zero vector") {
    std::vector<num::Var<double>> ctx;
    auto r = attend<double>(tape, h, ctx, w_a, u_a, v_a, 2);
    CHECK_FALSE(r.weights.valid());
    CHECK(r.context.size() == 2);
    for (double x : r.context.value()) CHECK(x == 0.0);
  }
  SUBCASE("single context sentence gets all the weight") {
    std::vector<num::Var<double>> ctx{leaf({2})};
    auto r = attend<double>(tape, h, ctx, w_a, u_a, v_a, 2);
    CHECK(r.weights.value()[0] == doctest::Approx(1.0));
    CHECK(r.context.value()[0] == doctest::Approx(ctx[0].value()[0]));
    CHECK(r.context.value()[1] == doctest::Approx(ctx[0].value()[1]));
  }
  SUBCASE("equal scores give uniform weights") {
    auto c = leaf({2});
    std::vector<num::Var<double>> ctx{c, c, c};
    auto r = attend<double>(tape, h, ctx, w_a, u_a, v_a, 2);
    for (double a : r.weights.value()) CHECK(a == doctest::Approx(1.0 / 3));
  }
  SUBCASE("random weights sum to one") {
    for (int k = 0; k < 20; ++k) {
      std::vector<num::Var<double>> ctx;
      for (std::size_t i = 0; i < 1 + rng.below(5); ++i) ctx.push_back(leaf({2}));
      auto r = attend<double>(tape, h, ctx, w_a, u_a, v_a, 2);
      double s = 0;
      for (double a : r.weights.value()) {
        CHECK(a >= 0.0);
        s += a;
      }
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
  }
}
