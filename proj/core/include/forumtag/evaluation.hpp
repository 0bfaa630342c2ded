#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forumtag/corpus.hpp"

namespace forumtag::eval {

using TagSequences = std::vector<std::vector<Tag>>;

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static PRF from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
  // Harmonic mean of given precision and recall (any common scale).
  static PRF from_pr(double precision, double recall);
};

// Per-tag TP/FP/FN over the non-O tags; index 0 (O) stays zero.
struct TagConfusion {
  std::array<std::size_t, kNumTags> tp{};
  std::array<std::size_t, kNumTags> fp{};
  std::array<std::size_t, kNumTags> fn{};

  void add(std::span<const Tag> gold, std::span<const Tag> pred);
  PRF micro() const;
  PRF of(Tag t) const;
};

// Token-level micro P/R/F1 over non-O tags. Throws ValidationError when the
// corpora are not aligned.
PRF micro_prf(const TagSequences& gold, const TagSequences& pred);
TagConfusion confusion(const TagSequences& gold, const TagSequences& pred);

struct TagF1 {
  Tag tag = Tag::O;
  PRF prf;
  std::size_t support = 0;  // gold count
  bool no_support = false;  // absent from both gold and prediction
};

// One row per non-O tag, in tag order.
std::vector<TagF1> per_tag_f1(const TagSequences& gold, const TagSequences& pred);

enum class ErrorCategory {
  ExactlyCorrect,
  Missing,
  WronglyExtracted,
  ScopeWrongTypeRight,
  ScopeRightTypeWrong,
  ScopeWrongTypeWrong,
};
inline constexpr std::size_t kNumCategories = 6;

std::string_view to_string(ErrorCategory c);

struct CategorizedPair {
  std::optional<AnnotatedMention> gold;
  std::optional<AnnotatedMention> pred;
  ErrorCategory category = ErrorCategory::ExactlyCorrect;
};

// Greedy one-to-one matching by descending token overlap (ties: earlier gold
// start, earlier predicted start), then the six-way classification. Every
// gold and predicted mention appears in exactly one pair.
std::vector<CategorizedPair> categorize_prediction(std::span<const AnnotatedMention> gold,
                                                   std::span<const AnnotatedMention> pred);

struct OovRow {
  std::size_t correct = 0;
  std::size_t total = 0;
  double ratio() const noexcept {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
};

struct OovReport {
  OovRow all;
  OovRow non_oov;
  OovRow oov;
};

struct MentionOutcome {
  bool oov = false;
  bool correct = false;
};

OovReport oov_report(std::span<const MentionOutcome> outcomes);

using VocabPredicate = std::function<bool(std::string_view)>;

// A mention is OOV when any of its tokens fails `in_vocab`.
bool is_oov_mention(const Sentence& s, const Span& span, const VocabPredicate& in_vocab);

struct ErrorCounts {
  // [ResourceType][ErrorCategory]; a pair is counted under its gold type,
  // or its predicted type when there is no gold mention.
  std::array<std::array<std::size_t, kNumCategories>, 4> by_type{};
  std::array<std::size_t, kNumCategories> total{};

  std::size_t cases() const;
};

struct EvaluationReport {
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::size_t gold_mentions = 0;
  std::size_t predicted_mentions = 0;
  std::size_t repaired_tags = 0;
  PRF micro;
  std::vector<TagF1> per_tag;
  PRF mention_level;
  ErrorCounts errors;
  std::optional<OovReport> oov;
  std::string config_hash;
  std::string corpus_fingerprint;
};

// `in_vocab` enables the OOV table.
EvaluationReport evaluate(const TaggedCorpus& gold, const TagSequences& pred,
                          const VocabPredicate& in_vocab = {}, std::string config_hash = {});

std::string to_text(const EvaluationReport& r);
nlohmann::json to_json(const EvaluationReport& r);

// FNV-1a 64, as 16 hex digits.
std::string hash_hex(std::string_view bytes);
// Hash of the corpus in the tagged column format.
std::string fingerprint(const TaggedCorpus& corpus);

}  // namespace forumtag::eval
