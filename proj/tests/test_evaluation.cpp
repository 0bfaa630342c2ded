#include <doctest.h>

#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "forumtag/error.hpp"
#include "forumtag/evaluation.hpp"
#include "forumtag/numerics/rng.hpp"

using namespace forumtag;
using namespace forumtag::eval;

namespace {

constexpr Tag O = Tag::O;
constexpr Tag AB = Tag::Assessments_B, AI = Tag::Assessments_I;
constexpr Tag VB = Tag::Videos_B, VI = Tag::Videos_I;
constexpr Tag EB = Tag::Exams_B;

AnnotatedMention mention(std::size_t start, std::size_t end, ResourceType t, std::size_t sentence = 0) {
  return {"t", Span{sentence, start, end}, t, 0, false};
}

Sentence sentence_of(std::initializer_list<const char*> words) {
  Sentence s;
  for (const char* w : words) s.tokens.push_back({w, 0, 0});
  return s;
}

std::vector<Tag> random_tags(num::Rng& rng, std::size_t len) {
  std::vector<Tag> tags;
  for (std::size_t i = 0; i < len; ++i) tags.push_back(tag_from_index(rng.below(kNumTags)));
  return tags;
}

}  // namespace

TEST_CASE("micro_prf on a hand-computed confusion") {
  // TP = 3, FP = 1, FN = 2.
  TagSequences gold{{AB, AI, O, VB, VI}, {EB, O}};
  TagSequences pred{{AB, AI, O, VB, O}, {O, AB}};
  const PRF p = micro_prf(gold, pred);
  CHECK(p.precision == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(p.recall == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(p.f1 == doctest::Approx(2 * 0.75 * 0.6 / 1.35).epsilon(1e-12));
  CHECK(std::abs(p.f1 - 0.667) < 5e-4);
}

TEST_CASE("type confusion counts as both FP and FN") {
  TagSequences gold{{AB}}, pred{{VB}};
  const PRF p = micro_prf(gold, pred);
  CHECK(p.precision == 0.0);
  CHECK(p.recall == 0.0);
  CHECK(p.f1 == 0.0);
}

TEST_CASE("F1 from reported precision and recall") {
  const PRF p = PRF::from_pr(72.91, 79.20);
  CHECK(std::abs(p.f1 - 75.92) <= 0.05);
  CHECK(PRF::from_pr(0, 0).f1 == 0.0);
}

TEST_CASE("no predictions gives zero precision without dividing by zero") {
  const PRF p = micro_prf({{AB, O}}, {{O, O}});
  CHECK(p.precision == 0.0);
  CHECK(p.recall == 0.0);
  CHECK(micro_prf({{O}}, {{O}}).f1 == 0.0);
}

TEST_CASE("misaligned corpora are rejected") {
  CHECK_THROWS_AS(micro_prf({{AB}}, {}), ValidationError);
  CHECK_THROWS_AS(micro_prf({{AB}}, {{AB, O}}), ValidationError);
}

TEST_CASE("micro_prf agrees with the confusion table and satisfies the F1 identity") {
  num::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    TagSequences gold, pred;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t len = 1 + rng.below(10);
      gold.push_back(random_tags(rng, len));
      pred.push_back(random_tags(rng, len));
    }
    const PRF a = micro_prf(gold, pred);
    const PRF b = confusion(gold, pred).micro();
    CHECK(std::abs(a.precision - b.precision) < 1e-9);
    CHECK(std::abs(a.recall - b.recall) < 1e-9);
    CHECK(std::abs(a.f1 - b.f1) < 1e-9);
    CHECK(std::abs(a.f1 * (a.precision + a.recall) - 2 * a.precision * a.recall) < 1e-12);
    CHECK(a.f1 <= std::max(a.precision, a.recall) + 1e-12);
    CHECK(a.f1 >= std::min(a.precision, a.recall) - 1e-12);
  }
}

TEST_CASE("per_tag_f1 flags tags without support") {
  const auto rows = per_tag_f1({{AB, AI}}, {{AB, O}});
  REQUIRE(rows.size() == kNumTags - 1);
  CHECK(rows[0].tag == AB);
  CHECK(rows[0].prf.f1 == 1.0);
  CHECK(rows[0].support == 1);
  CHECK(rows[1].tag == AI);
  CHECK(rows[1].prf.recall == 0.0);
  CHECK_FALSE(rows[1].no_support);
  CHECK(rows[2].no_support);
}

TEST_CASE("categorize_prediction on the worked examples") {
  SUBCASE("scope wrong, type right") {
    // "the quiz for week 2" vs "the quiz"
    auto gold = std::vector{mention(0, 5, ResourceType::Assessments)};
    auto pred = std::vector{mention(0, 2, ResourceType::Assessments)};
    auto pairs = categorize_prediction(gold, pred);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].category == ErrorCategory::ScopeWrongTypeRight);
  }
  SUBCASE("scope right, type wrong") {
    // "the simulation lecture": Videos vs Assessments
    auto gold = std::vector{mention(2, 5, ResourceType::Videos)};
    auto pred = std::vector{mention(2, 5, ResourceType::Assessments)};
    auto pairs = categorize_prediction(gold, pred);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].category == ErrorCategory::ScopeRightTypeWrong);
  }
  SUBCASE("missing") {
    // "house_data_g1" with no prediction
    auto gold = std::vector{mention(3, 4, ResourceType::Coursewares)};
    auto pairs = categorize_prediction(gold, {});
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].category == ErrorCategory::Missing);
    CHECK_FALSE(pairs[0].pred.has_value());
  }
  SUBCASE("exact, wrongly extracted, both wrong") {
    auto gold = std::vector{mention(0, 2, ResourceType::Exams), mention(5, 8, ResourceType::Videos)};
    auto pred = std::vector{mention(0, 2, ResourceType::Exams), mention(6, 8, ResourceType::Exams),
                            mention(10, 11, ResourceType::Videos)};
    auto pairs = categorize_prediction(gold, pred);
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0].category == ErrorCategory::ExactlyCorrect);
    CHECK(pairs[1].category == ErrorCategory::ScopeWrongTypeWrong);
    CHECK(pairs[2].category == ErrorCategory::WronglyExtracted);
  }
}

TEST_CASE("categorize_prediction prefers the larger overlap") {
  auto gold = std::vector{mention(0, 4, ResourceType::Videos)};
  auto pred = std::vector{mention(0, 1, ResourceType::Videos), mention(1, 4, ResourceType::Videos)};
  auto pairs = categorize_prediction(gold, pred);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].category == ErrorCategory::ScopeWrongTypeRight);
  CHECK(pairs[0].pred->span.start == 1);
  CHECK(pairs[1].category == ErrorCategory::WronglyExtracted);
  CHECK(pairs[1].pred->span.start == 0);
}

TEST_CASE("OOV table ratio") {
  OovRow row{93, 163};
  CHECK(std::abs(row.ratio() - 0.5706) < 5e-5);
  CHECK(OovRow{}.ratio() == 0.0);
  std::vector<MentionOutcome> outcomes{{true, true}, {true, false}, {false, true}};
  const auto r = oov_report(outcomes);
  CHECK(r.all.total == 3);
  CHECK(r.all.correct == 2);
  CHECK(r.oov.total == 2);
  CHECK(r.non_oov.correct == 1);
}

TEST_CASE("is_oov_mention checks every token in the span") {
  const Sentence s = sentence_of({"watch", "lec3.mp4", "now"});
  auto in_vocab = [](std::string_view w) { return w != "lec3.mp4"; };
  CHECK(is_oov_mention(s, Span{0, 1, 2}, in_vocab));
  CHECK_FALSE(is_oov_mention(s, Span{0, 0, 1}, in_vocab));
  CHECK(is_oov_mention(s, Span{0, 0, 3}, in_vocab));
}

TEST_CASE("evaluate ties the tables together") {
  TaggedCorpus gold;
  gold.push_back({"t1", sentence_of({"see", "the", "quiz", "lec3.mp4"}), {O, AB, AI, VB}, {}});
  gold.push_back({"t1", sentence_of({"watch", "video", "now"}), {O, VB, O}, {}});
  TagSequences pred{{O, AB, AI, O}, {O, VB, VI}};
  auto in_vocab = [](std::string_view w) { return w != "lec3.mp4"; };
  const auto r = evaluate(gold, pred, in_vocab, "abc");
  CHECK(r.sentences == 2);
  CHECK(r.tokens == 7);
  CHECK(r.gold_mentions == 3);
  CHECK(r.predicted_mentions == 2);
  REQUIRE(r.oov.has_value());
  const std::size_t exact = r.errors.total[static_cast<std::size_t>(ErrorCategory::ExactlyCorrect)];
  CHECK(exact == 1);
  CHECK(exact == r.oov->all.correct);
  CHECK(r.oov->oov.total == 1);
  CHECK(r.oov->oov.correct == 0);
  CHECK(r.errors.total[static_cast<std::size_t>(ErrorCategory::Missing)] == 1);
  CHECK(r.errors.total[static_cast<std::size_t>(ErrorCategory::ScopeWrongTypeRight)] == 1);
  CHECK(r.mention_level.recall == doctest::Approx(1.0 / 3));

  const auto j = to_json(r);
  CHECK(j["config_hash"] == "abc");
  CHECK(j["errors"]["Total"]["Missing"] == 1);
  CHECK(to_text(r) == to_text(evaluate(gold, pred, in_vocab, "abc")));
  CHECK(to_text(r).find("OOV") != std::string::npos);
}

TEST_CASE("hash_hex is FNV-1a") {
  CHECK(hash_hex("") == "cbf29ce484222325");
  CHECK(hash_hex("a") == "af63dc4c8601ec8c");
}
