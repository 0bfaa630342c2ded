#pragma once

#include <cstdint>
#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forumtag/corpus.hpp"
#include "forumtag/encoders.hpp"
#include "forumtag/evaluation.hpp"

namespace forumtag::synth {

// Planted mention kinds. Anaphoric mentions are gold only when valid.
enum class MentionKind { Plain, Oov, Anaphoric };

std::string_view to_string(MentionKind k);

struct SynthSpec {
  std::uint64_t seed = 1;
  // Number of threads; ignored when target_sentences > 0.
  std::size_t threads = 100;
  // Stop once this many sentences carry a gold mention (the last thread is
  // truncated so the count is exact).
  std::size_t target_sentences = 0;
  std::size_t min_sentences = 6;   // per thread, before inserted antecedents/fillers
  std::size_t max_sentences = 14;
  std::size_t max_post_sentences = 3;

  // Probability that a generated sentence carries a primary mention slot.
  double mention_rate = 0.7;
  // Probability that a plain or OOV primary clause gets a second clause.
  double second_clause_rate = 0.4;
  // Shares of mention slot fillings; the rest are plain templates.
  double oov_fraction = 0.3;
  double anaphoric_fraction = 0.3;
  // Share of anaphoric slots planted with an antecedent in the window.
  double valid_anaphor_rate = 0.5;
  // OOV look-alike distractors per OOV mention.
  double distractor_ratio = 0.5;
  // Antecedent window M, in sentences.
  std::size_t window = 5;

  // Second annotator group perturbations, per mention.
  double drop_rate = 0.1;
  double type_flip_rate = 0.1;
  double span_shift_rate = 0.1;

  std::size_t vector_dim = 50;

  // Throws ValidationError on rates outside [0, 1] or empty ranges.
  void validate() const;
};

nlohmann::json to_json(const SynthSpec& s);
// Unknown keys are rejected.
SynthSpec spec_from_json(const nlohmann::json& j, SynthSpec base = {});

struct GoldMention {
  AnnotatedMention mention;
  MentionKind kind = MentionKind::Plain;
};

// Every anaphoric slot, valid or not, with the sentence that licenses it.
struct AnaphorRecord {
  std::string thread_id;
  Span span;
  ResourceType type = ResourceType::Videos;
  bool valid = false;
  // Sentence index of the nearest same-type plain mention, if any precedes.
  std::optional<std::size_t> antecedent;
};

struct SlotCounts {
  std::size_t plain = 0;
  std::size_t oov = 0;
  std::size_t anaphoric = 0;  // valid and invalid
  std::size_t distractors = 0;
  std::size_t fillers = 0;
  std::size_t inserted_antecedents = 0;
};

struct SynthCorpus {
  std::vector<Thread> threads;
  std::vector<AnnotatedMention> g1;
  std::vector<AnnotatedMention> g2;
  std::vector<GoldMention> gold;
  std::vector<AnaphorRecord> anaphors;
  enc::PretrainedVectors vectors;
  SlotCounts counts;

  nlohmann::json stats() const;
};

SynthCorpus generate(const SynthSpec& spec);

// Standoff lines with a sixth column holding the mention kind.
void write_gold(std::ostream& out, const std::vector<GoldMention>& gold);
std::vector<GoldMention> read_gold(std::istream& in, const std::string& source = "<stream>");
void write_vectors(std::ostream& out, const enc::PretrainedVectors& v);

// Writes threads.jsonl, g1.tsv, g2.tsv, gold.tsv, vectors.txt and
// stats.json into `dir` (created if missing).
void write_corpus(const std::string& dir, const SynthCorpus& corpus);

struct KindScore {
  std::size_t mentions = 0;
  std::size_t exact = 0;  // every tag matches and the span is not extended
  std::size_t tokens = 0;
  std::size_t correct_tokens = 0;
  double token_recall() const noexcept {
    return tokens == 0 ? 0.0 : static_cast<double>(correct_tokens) / static_cast<double>(tokens);
  }
  double exact_ratio() const noexcept {
    return mentions == 0 ? 0.0 : static_cast<double>(exact) / static_cast<double>(mentions);
  }
};

// Recall per planted kind, indexed by MentionKind. Gold mentions whose
// sentence is absent from `corpus` are skipped.
std::array<KindScore, 3> kind_breakdown(const TaggedCorpus& corpus, const eval::TagSequences& pred,
                                        std::span<const GoldMention> gold);
nlohmann::json to_json(const std::array<KindScore, 3>& scores);

// 50-sentence corpus of plain and OOV mentions for overfit checks.
SynthSpec toy_spec(std::uint64_t seed = 7);

}  // namespace forumtag::synth
