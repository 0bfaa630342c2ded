#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forumtag/agreement.hpp"
#include "forumtag/corpus_io.hpp"
#include "forumtag/error.hpp"
#include "forumtag/synth.hpp"

using namespace forumtag;
using namespace forumtag::synth;

namespace {

std::string serialize(const SynthCorpus& c) {
  std::ostringstream out;
  write_threads(out, c.threads);
  write_standoff(out, c.g1);
  write_standoff(out, c.g2);
  write_gold(out, c.gold);
  write_vectors(out, c.vectors);
  out << c.stats().dump();
  return out.str();
}

SynthSpec small_spec(std::uint64_t seed) {
  SynthSpec s;
  s.seed = seed;
  s.threads = 40;
  return s;
}

}  // namespace

TEST_CASE("same seed gives identical output") {
  CHECK(serialize(generate(small_spec(3))) == serialize(generate(small_spec(3))));
  CHECK(serialize(generate(small_spec(3))) != serialize(generate(small_spec(4))));
}

TEST_CASE("spans index real tokens") {
  const auto c = generate(small_spec(5));
  std::map<std::string, std::vector<Sentence>> sentences;
  for (const auto& t : c.threads) sentences.emplace(t.thread_id, unfold_thread(t));
  REQUIRE_FALSE(c.gold.empty());
  for (const auto* set : {&c.g1, &c.g2}) {
    for (const auto& m : *set) {
      const auto& ss = sentences.at(m.thread_id);
      REQUIRE(m.span.sentence_index < ss.size());
      CHECK(m.span.start < m.span.end);
      CHECK(m.span.end <= ss[m.span.sentence_index].size());
    }
  }
  for (const auto& g : c.gold) {
    if (g.kind == MentionKind::Oov) CHECK(g.mention.span.length() == 1);
  }
}

TEST_CASE("anaphors are valid exactly when an antecedent lies within the window") {
  SynthSpec spec = small_spec(6);
  const auto c = generate(spec);
  REQUIRE(c.anaphors.size() > 20);
  std::size_t valid = 0;
  for (const auto& a : c.anaphors) {
    const bool near = a.antecedent && a.span.sentence_index - *a.antecedent <= spec.window;
    CHECK(a.valid == near);
    valid += a.valid ? 1 : 0;
  }
  CHECK(valid > 0);
  CHECK(valid < c.anaphors.size());
}

TEST_CASE("invalid anaphors are tagged O and valid ones are tagged") {
  const auto c = generate(small_spec(7));
  const auto ds = agreement::build_single(c.threads, c.g1, 5, true);
  std::map<std::pair<std::string, std::size_t>, const TaggedSentence*> index;
  for (const auto& ex : ds.corpus) index[{ex.thread_id, ex.sentence.sentence_index}] = &ex;
  for (const auto& a : c.anaphors) {
    const auto* ex = index.at({a.thread_id, a.span.sentence_index});
    for (std::size_t i = a.span.start; i < a.span.end; ++i) {
      if (a.valid) {
        CHECK(tag_type(ex->tags[i]) == a.type);
      } else {
        CHECK(ex->tags[i] == Tag::O);
      }
    }
  }
}

TEST_CASE("zero perturbation gives perfect agreement") {
  SynthSpec spec = small_spec(8);
  spec.drop_rate = spec.type_flip_rate = spec.span_shift_rate = 0.0;
  const auto c = generate(spec);
  CHECK(c.g1.size() == c.g2.size());
  const auto report = agreement::tally(agreement::compare_groups(c.g1, c.g2));
  for (ResourceType t : kResourceTypes) {
    REQUIRE(report.of(t).g1_total() > 0);
    CHECK(agreement::positive_specific_agreement(report.of(t)) == 1.0);
  }
}

TEST_CASE("perturbation lowers agreement") {
  const auto c = generate(small_spec(9));
  const auto report = agreement::tally(agreement::compare_groups(c.g1, c.g2));
  CHECK(agreement::positive_specific_agreement(report.total) < 1.0);
  CHECK(agreement::positive_specific_agreement(report.total) > 0.5);
}

TEST_CASE("target sentence count and slot fractions") {
  SynthSpec spec;
  spec.seed = 10;
  spec.target_sentences = 300;
  const auto c = generate(spec);
  const auto ds = agreement::build_single(c.threads, c.g1, spec.window);
  CHECK(ds.corpus.size() == 300);
  const auto s = c.stats();
  CHECK(std::abs(s["oov_fraction"].get<double>() - 0.3) < 0.05);
  CHECK(std::abs(s["anaphoric_fraction"].get<double>() - 0.3) < 0.05);
}

TEST_CASE("OOV tokens are absent from the vectors") {
  const auto c = generate(small_spec(11));
  std::map<std::string, std::vector<Sentence>> sentences;
  for (const auto& t : c.threads) sentences.emplace(t.thread_id, unfold_thread(t));
  for (const auto& g : c.gold) {
    const auto& tok = sentences.at(g.mention.thread_id)[g.mention.span.sentence_index].tokens[g.mention.span.start];
    if (g.kind == MentionKind::Oov) CHECK_FALSE(c.vectors.contains(tok.text));
    if (g.kind == MentionKind::Plain) CHECK(c.vectors.contains(tok.text));
  }
}

TEST_CASE("gold key roundtrip") {
  const auto c = generate(small_spec(12));
  std::stringstream buf;
  write_gold(buf, c.gold);
  const auto back = read_gold(buf);
  REQUIRE(back.size() == c.gold.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].mention.span == c.gold[i].mention.span);
    CHECK(back[i].kind == c.gold[i].kind);
  }
  std::istringstream bad("t0\t0\t0\t1\tVideos\tweird\n");
  CHECK_THROWS_AS(read_gold(bad), ParseError);
}

TEST_CASE("spec validation and JSON") {
  SynthSpec s;
  s.oov_fraction = 0.8;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  CHECK_THROWS_AS(spec_from_json({{"sed", 1}}), ValidationError);
  const SynthSpec t = spec_from_json({{"seed", 9}, {"window", 3}});
  CHECK(t.seed == 9);
  CHECK(t.window == 3);
  CHECK(to_json(spec_from_json(to_json(t))) == to_json(t));
}
