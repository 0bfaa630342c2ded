#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forumtag/error.hpp"
#include "forumtag/numerics/gradcheck.hpp"
#include "forumtag/tagger.hpp"

using namespace forumtag;
using forumtag::num::Shape;
using forumtag::num::Tensor;

namespace {

Sentence sentence_of(std::initializer_list<const char*> words) {
  Sentence s;
  for (const char* w : words) s.tokens.push_back({w, 0, 0});
  return s;
}

TaggerConfig tiny(Variant v) {
  TaggerConfig c = TaggerConfig::for_variant(v);
  c.word_dim = 4;
  c.char_dim = 3;
  c.char_hidden = 2;
  c.hidden = 3;
  c.context_hidden = 3;
  c.attention_dim = 3;
  return c;
}

enc::Vocabulary tiny_vocab() {
  return enc::Vocabulary::from_words({"<unk>", "<pad>", "watch", "the", "video", "quiz", "week"}, true);
}

TaggedSentence example() {
  TaggedSentence ex;
  ex.thread_id = "t";
  ex.sentence = sentence_of({"watch", "lec3.mp4", "video"});
  ex.tags = {Tag::O, Tag::Videos_B, Tag::Videos_I};
  ex.context = {sentence_of({"the", "quiz"}), sentence_of({"week", "video", "Q1"})};
  return ex;
}

std::size_t count_values(const num::ParamSet<double>& ps) {
  std::size_t n = 0;
  for (const auto& p : ps) n += p->value.size();
  return n;
}

}  // namespace

TEST_CASE("variant names and switches") {
  for (Variant v : kVariants) {
    CHECK(parse_variant(to_string(v)) == v);
    CHECK(TaggerConfig::for_variant(v).variant() == v);
    CHECK_NOTHROW(TaggerConfig::for_variant(v).validate());
  }
  CHECK_FALSE(parse_variant("lstm").has_value());
  TaggerConfig bad = TaggerConfig::for_variant(Variant::BlstmCrf);
  bad.use_context_attention = true;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("config JSON roundtrip and unknown keys") {
  TaggerConfig c = tiny(Variant::BlstmCrfCe);
  c.learning_rate = 0.005;
  const TaggerConfig d = config_from_json(to_json(c));
  CHECK(to_json(d) == to_json(c));
  CHECK(config_from_json({{"variant", "blstm"}}).variant() == Variant::Blstm);
  CHECK_THROWS_AS(config_from_json({{"hiden", 3}}), ValidationError);
  CHECK_THROWS_AS(config_from_json({{"variant", "nope"}}), ValidationError);
  CHECK_THROWS_AS(config_from_json({{"hidden", "wide"}}), ValidationError);
}

TEST_CASE("input vectors at full dimensions") {
  num::Rng rng(1);
  TaggerModel<float> model(TaggerConfig::for_variant(Variant::BlstmCrfCe), tiny_vocab(), nullptr, rng);
  num::Tape<float> tape(false);
  CHECK(model.input_vector(tape, {"video", 0, 0}).size() == 328);
  auto pad = model.input_vector(tape, {"<pad>", 0, 0});
  CHECK(pad.size() == 328);
  CHECK(std::all_of(pad.value().begin(), pad.value().end(), [](float x) { return x == 0.0F; }));
}

TEST_CASE("OOV words without the char encoder use the UNK row") {
  num::Rng rng(2);
  TaggerModel<double> model(tiny(Variant::BlstmCrf), tiny_vocab(), nullptr, rng);
  num::Tape<double> tape(false);
  auto v = model.input_vector(tape, {"zzz-unseen", 0, 0});
  const auto& table = model.params().get("word.embedding").value;
  auto unk = table.row(enc::Vocabulary::kUnk);
  REQUIRE(v.size() == unk.size());
  for (std::size_t i = 0; i < unk.size(); ++i) CHECK(v.value()[i] == unk[i]);
}

TEST_CASE("context encoding and emissions shapes") {
  num::Rng rng(3);
  TaggerModel<double> model(tiny(Variant::BlstmCrfCeCa), tiny_vocab(), nullptr, rng);
  const auto ex = example();
  num::Tape<double> tape(false);
  CHECK(model.encode_context(tape, {}).empty());
  const auto ctx = model.encode_context(tape, ex.context);
  REQUIRE(ctx.size() == 2);
  CHECK(ctx[0].size() == 3);
  auto e = model.emissions(tape, ex.sentence, ex.context);
  CHECK(e.shape() == Shape{3, kNumTags});
  CHECK_THROWS_AS(model.predict(Sentence{}, {}), ValidationError);
}

TEST_CASE("without attention the output ignores the context") {
  num::Rng rng(4);
  TaggerModel<double> model(tiny(Variant::BlstmCrfCe), tiny_vocab(), nullptr, rng);
  const auto ex = example();
  num::Tape<double> tape(false);
  const auto a = model.emissions(tape, ex.sentence, ex.context).tensor();
  const auto b = model.emissions(tape, ex.sentence, {}).tensor();
  CHECK(a == b);
}

TEST_CASE("attention is used and its rows sum to one") {
  num::Rng rng(5);
  TaggerModel<double> model(tiny(Variant::BlstmCrfCeCa), tiny_vocab(), nullptr, rng);
  const auto ex = example();
  num::Tape<double> tape(false);
  const auto a = model.emissions(tape, ex.sentence, ex.context).tensor();
  const auto b = model.emissions(tape, ex.sentence, {}).tensor();
  CHECK_FALSE(a == b);
  const auto p = model.predict(ex.sentence, ex.context);
  CHECK(p.tags.size() == 3);
  REQUIRE(p.attention_forward.size() == 3);
  for (const auto& rows : {p.attention_forward, p.attention_backward}) {
    for (const auto& row : rows) {
      REQUIRE(row.size() == 2);
      CHECK(std::abs(row[0] + row[1] - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("context beyond the cap is dropped") {
  num::Rng rng(6);
  TaggerConfig c = tiny(Variant::BlstmCrfCeCa);
  c.context_cap = 1;
  TaggerModel<double> model(c, tiny_vocab(), nullptr, rng);
  const auto ex = example();
  num::Tape<double> tape(false);
  const auto a = model.emissions(tape, ex.sentence, ex.context).tensor();
  const auto b = model.emissions(tape, ex.sentence, std::span(ex.context).subspan(1)).tensor();
  CHECK(a == b);
}

TEST_CASE("parameter count grows along the variant lattice") {
  num::Rng rng(7);
  std::vector<std::size_t> counts;
  for (Variant v : {Variant::BlstmCrf, Variant::BlstmCrfCe, Variant::BlstmCrfCeCa}) {
    TaggerModel<double> m(tiny(v), tiny_vocab(), nullptr, rng);
    counts.push_back(count_values(m.params()));
  }
  CHECK(counts[0] < counts[1]);
  CHECK(counts[1] < counts[2]);
}

TEST_CASE("full model loss passes finite differences") {
  const auto ex = example();
  for (Variant v : {Variant::Blstm, Variant::BlstmCrf, Variant::BlstmCrfCe, Variant::BlstmCrfCeCa}) {
    CAPTURE(to_string(v));
    num::Rng rng(8);
    TaggerModel<double> model(tiny(v), tiny_vocab(), nullptr, rng);
    auto r = num::grad_check(model.params(), [&](num::Tape<double>& tape) { return model.loss(tape, ex); });
    CHECK(r.checked > 0);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("BIO constraints keep predictions well formed") {
  num::Rng rng(9);
  TaggerConfig c = tiny(Variant::BlstmCrf);
  c.bio_constraints = true;
  TaggerModel<double> model(c, tiny_vocab(), nullptr, rng);
  for (auto& p : model.params()) {
    for (double& x : p->value.storage()) {
      if (std::isfinite(x)) x = rng.uniform(-3, 3);
    }
  }
  const auto p = model.predict(sentence_of({"watch", "the", "video", "now", "quiz"}), {});
  CHECK(bio_decode(p.tags).warnings.empty());
  num::GradCheckOptions opts;
  auto r = num::grad_check(
      model.params(), [&](num::Tape<double>& tape) { return model.loss(tape, example()); }, opts);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("baseline features") {
  const std::vector<std::string> words{"Video", "42"};
  const auto pos = default_pos_tagger().tag(words);
  CHECK(pos[1] == "CD");
  const auto f = extract_baseline_features(words, pos, 0);
  auto has = [&f](const std::string& s) { return std::find(f.begin(), f.end(), s) != f.end(); };
  CHECK(has("f0@0=bias"));
  CHECK(has("f1@0=video"));
  CHECK(has("f2@0=Vi"));
  CHECK(has("f3@0=Vid"));
  CHECK(has("f4@0=eo"));
  CHECK(has("f5@0=deo"));
  CHECK(has("f6@0=false"));
  CHECK(has("f7@0=true"));
  CHECK(has("f8@0=false"));
  CHECK(has("f1@-1=<BOS>"));
  CHECK(has("f1@-2=<BOS>"));
  CHECK(has("f1@2=<EOS>"));
  CHECK(has("f6@1=true"));
  CHECK(has("f7@1=false"));
  CHECK(has("f9@1=CD"));
  CHECK(has("f10@1=CD"));
  CHECK(std::none_of(f.begin(), f.end(), [](const std::string& s) { return s.rfind("f2@-1", 0) == 0; }));
  CHECK(std::is_sorted(f.begin(), f.end()));
}

TEST_CASE("POS lexicon") {
  const auto pos = LexiconPosTagger().tag({"The", "quiz", "is", "on", "Coursera", ",", "watching", "videos", "."});
  CHECK(pos == std::vector<std::string>{"DT", "NN", "VBZ", "IN", "NNP", ",", "VBG", "NNS", "."});
}

TEST_CASE("feature CRF") {
  TaggedCorpus corpus{example()};
  TaggerConfig c = TaggerConfig::for_variant(Variant::FeatureCrf);
  FeatureCrfModel<double> model(c, corpus);
  CHECK_FALSE(model.features().empty());
  const auto ids = model.feature_ids(corpus[0].sentence);
  CHECK(ids.size() == 3);
  for (auto& p : model.params()) {
    if (p->name == "feat.W") {
      num::Rng rng(2);
      for (double& x : p->value.storage()) x = rng.uniform(-1, 1);
    }
  }
  num::GradCheckOptions opts;
  auto r = num::grad_check(model.params(), [&](num::Tape<double>& tape) {
    auto l = model.loss(tape, corpus[0]);
    return num::add(l, *model.regularizer(tape));
  }, opts);
  CHECK(r.max_rel_error < 1e-4);
  CHECK(model.predict(corpus[0].sentence, {}).tags.size() == 3);
}

TEST_CASE("checkpoint roundtrip reproduces predictions") {
  TaggedCorpus corpus{example()};
  for (Variant v : kVariants) {
    CAPTURE(to_string(v));
    num::Rng rng(10);
    TaggerConfig c = tiny(v);
    c.min_word_count = 1;
    auto model = make_model<float>(c, corpus, nullptr, rng);
    for (auto& p : model->params()) {
      for (float& x : p->value.storage()) {
        if (std::isfinite(x)) x += static_cast<float>(rng.uniform(-0.5, 0.5));
      }
    }
    std::stringstream buf;
    num::write_checkpoint(buf, to_checkpoint(*model));
    auto back = model_from_checkpoint(num::read_checkpoint(buf));
    const auto a = model->predict(corpus[0].sentence, corpus[0].context);
    const auto b = back->predict(corpus[0].sentence, corpus[0].context);
    CHECK(a.tags == b.tags);
    CHECK(a.score == b.score);
  }
}

TEST_CASE("checkpoint shape mismatch is reported") {
  num::Rng rng(11);
  TaggedCorpus corpus{example()};
  auto model = make_model<float>(tiny(Variant::BlstmCrf), corpus, nullptr, rng);
  auto ck = to_checkpoint(*model);
  for (auto& t : ck.tensors) {
    if (t.name == "out.b") t.value = Tensor<float>(Shape{3});
  }
  CHECK_THROWS_AS(model_from_checkpoint(ck), ValidationError);
}
