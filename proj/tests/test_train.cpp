#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forumtag/agreement.hpp"
#include "forumtag/error.hpp"
#include "forumtag/synth.hpp"
#include "forumtag/train.hpp"

using namespace forumtag;

namespace {

struct Toy {
  synth::SynthCorpus source;
  TaggedCorpus corpus;
};

const Toy& toy() {
  static const Toy t = [] {
    Toy out;
    out.source = synth::generate(synth::toy_spec(7));
    out.corpus = agreement::build_single(out.source.threads, out.source.g1, 5).corpus;
    return out;
  }();
  return t;
}

TaggerConfig small(Variant v) {
  TaggerConfig c = TaggerConfig::for_variant(v);
  c.word_dim = 16;
  c.char_dim = 8;
  c.char_hidden = 8;
  c.hidden = 16;
  c.context_hidden = 16;
  c.attention_dim = 16;
  c.min_word_count = 1;
  c.validation_fraction = 0.0;
  c.batch_size = 8;
  c.patience = 0;
  return c;
}

std::vector<num::Tensor<float>> values(const num::ParamSet<float>& ps) {
  std::vector<num::Tensor<float>> out;
  for (const auto& p : ps) out.push_back(p->value);
  return out;
}

std::string dump_log(const TrainSummary& s) {
  std::string out;
  for (const auto& e : s.log) out += to_json(e).dump() + "\n";
  return out;
}

}  // namespace

TEST_CASE("toy corpus has 50 labeled sentences") { CHECK(toy().corpus.size() == 50); }

TEST_CASE("validation split") {
  const auto& c = toy().corpus;
  const auto all = split_validation(c, 0.0, 1);
  CHECK(all.train.size() == c.size());
  CHECK(all.validation.size() == c.size());

  const auto a = split_validation(c, 0.2, 3);
  const auto b = split_validation(c, 0.2, 3);
  CHECK(a.validation.size() == 10);
  CHECK(a.train.size() == 40);
  std::set<std::pair<std::string, std::size_t>> seen;
  for (const auto* part : {&a.train, &a.validation}) {
    for (const auto& ex : *part) seen.insert({ex.thread_id, ex.sentence.sentence_index});
  }
  CHECK(seen.size() == c.size());
  for (std::size_t i = 0; i < a.validation.size(); ++i) {
    CHECK(a.validation[i].sentence.sentence_index == b.validation[i].sentence.sentence_index);
  }
  CHECK_THROWS_AS(split_validation(c, 1.0, 1), ValidationError);
  CHECK_THROWS_AS(split_validation(c, -0.1, 1), ValidationError);
}

TEST_CASE("empty training data is rejected") {
  CHECK_THROWS_AS(train<float>(small(Variant::BlstmCrf), TaggedCorpus{}), ValidationError);
  TaggedCorpus bad(1);
  bad[0].thread_id = "t";
  CHECK_THROWS_AS(train<float>(small(Variant::BlstmCrf), bad), ValidationError);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  TaggerConfig c = small(Variant::BlstmCrfCe);
  c.learning_rate = 0.0;
  c.max_epochs = 2;
  num::Rng rng(c.seed);
  auto model = make_model<float>(c, toy().corpus, nullptr, rng);
  const auto before = values(model->params());
  const auto summary = fit(*model, toy().corpus, toy().corpus);
  REQUIRE(summary.log.size() == 2);
  CHECK(summary.log[0].loss == doctest::Approx(summary.log[1].loss).epsilon(1e-5));
  const auto after = values(model->params());
  for (std::size_t i = 0; i < before.size(); ++i) {
    for (std::size_t j = 0; j < before[i].size(); ++j) CHECK(before[i][j] == after[i][j]);
  }
}

TEST_CASE("same seed reproduces the training log") {
  TaggerConfig c = small(Variant::BlstmCrfCeCa);
  c.max_epochs = 3;
  c.validation_fraction = 0.2;
  std::ostringstream j1, j2;
  const auto r1 = train<float>(c, toy().corpus, nullptr, &j1);
  const auto r2 = train<float>(c, toy().corpus, nullptr, &j2);
  CHECK(dump_log(r1.summary) == dump_log(r2.summary));
  CHECK(j1.str() == j2.str());
  CHECK(j1.str() == dump_log(r1.summary));
  c.seed = 2;
  const auto r3 = train<float>(c, toy().corpus);
  CHECK(dump_log(r3.summary) != dump_log(r1.summary));
}

TEST_CASE("best epoch parameters are restored") {
  TaggerConfig c = small(Variant::BlstmCrf);
  c.max_epochs = 6;
  c.learning_rate = 0.05;
  c.validation_fraction = 0.3;
  const auto split = split_validation(toy().corpus, c.validation_fraction, c.seed);
  num::Rng rng(c.seed);
  auto model = make_model<float>(c, split.train, nullptr, rng);
  const auto summary = fit(*model, split.train, split.validation);
  REQUIRE(summary.best_epoch >= 1);
  CHECK(summary.log[summary.best_epoch - 1].improved);
  CHECK(score(*model, split.validation).f1 == doctest::Approx(summary.best_f1));
}

TEST_CASE("patience stops training once F1 is positive") {
  TaggerConfig c = small(Variant::BlstmCrf);
  c.learning_rate = 0.0;
  c.max_epochs = 50;
  c.patience = 2;
  const auto r = train<float>(c, toy().corpus);
  REQUIRE(r.summary.best_f1 > 0.0);
  CHECK(r.summary.log.size() == 3);

  // All-O predictions from zero feature weights never start the count.
  c = small(Variant::FeatureCrf);
  c.learning_rate = 0.0;
  c.max_epochs = 6;
  c.patience = 2;
  const auto flat = train<float>(c, toy().corpus);
  CHECK(flat.summary.best_f1 == 0.0);
  CHECK(flat.summary.log.size() == 6);
}

TEST_CASE("feature CRF weights shrink under a large L2 penalty") {
  auto weight_norm = [](double l2) {
    TaggerConfig c = small(Variant::FeatureCrf);
    c.l2 = l2;
    c.max_epochs = 15;
    c.learning_rate = 0.05;
    const auto r = train<float>(c, toy().corpus);
    double s = 0.0;
    for (const auto& p : r.model->params()) {
      if (p->name == "feat.W") {
        for (std::size_t i = 0; i < p->value.size(); ++i) s += static_cast<double>(p->value[i]) * p->value[i];
      }
    }
    return std::sqrt(s);
  };
  const double loose = weight_norm(1e-6);
  const double tight = weight_norm(100.0);
  CHECK(loose > 1.0);
  CHECK(tight < 0.1 * loose);
}

TEST_CASE("every variant fits the toy corpus") {
  for (Variant v : kVariants) {
    CAPTURE(to_string(v));
    TaggerConfig c = small(v);
    c.target_f1 = 0.99;
    c.max_epochs = 200;
    const auto r = train<float>(c, toy().corpus);
    CHECK(r.summary.best_f1 >= 0.99);
    CHECK(score(*r.model, toy().corpus).f1 >= 0.99);
  }
}

TEST_CASE("cross-validation keeps threads whole") {
  TaggerConfig c = small(Variant::FeatureCrf);
  c.max_epochs = 2;
  const auto cv = cross_validate(c, toy().corpus, 3);
  CHECK(cv.folds.size() == 3);
  for (const auto& f : cv.folds) CHECK(f.f1 >= 0.0);
  CHECK_THROWS_AS(cross_validate(c, toy().corpus, 1), ValidationError);
  CHECK_THROWS_AS(cross_validate(c, toy().corpus, 1000), ValidationError);
}

TEST_CASE("config hash tracks the config") {
  TaggerConfig a = small(Variant::BlstmCrf);
  TaggerConfig b = a;
  CHECK(config_hash(a) == config_hash(b));
  b.hidden = 17;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("vocabulary predicate") {
  TaggerConfig c = small(Variant::BlstmCrf);
  c.max_epochs = 1;
  const auto neural = train<float>(c, toy().corpus);
  const auto pred = vocabulary_predicate(*neural.model);
  REQUIRE(pred);
  CHECK(pred(toy().corpus[0].sentence.tokens[0].text));
  CHECK_FALSE(pred("zzqx-not-a-word"));
  c = small(Variant::FeatureCrf);
  c.max_epochs = 1;
  const auto feature = train<float>(c, toy().corpus);
  CHECK_FALSE(vocabulary_predicate(*feature.model));
}

TEST_CASE("model gradient check helper") {
  const auto ex = gradcheck_example();
  CHECK(ex.sentence.size() == 3);
  CHECK(ex.context.size() == 2);
  for (Variant v : kVariants) {
    CAPTURE(to_string(v));
    const auto r = check_model_gradients(gradcheck_config(v), ex);
    CHECK(r.checked > 0);
    CHECK(r.max_rel_error < 1e-4);
  }
}
