#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forumtag/corpus.hpp"

namespace forumtag::agreement {

enum class ComparisonCase { AG, TD, G1Only, G2Only };

std::string_view to_string(ComparisonCase c);

struct AgreementCounts {
  std::size_t ag = 0;
  std::size_t td = 0;
  std::size_t g1_only = 0;
  std::size_t g2_only = 0;

  std::size_t g1_total() const noexcept { return ag + td + g1_only; }
  std::size_t g2_total() const noexcept { return ag + td + g2_only; }
  // g1_total + g2_total - ag; counts every TD pair twice.
  std::size_t union_count() const noexcept { return g1_total() + g2_total() - ag; }

  // Rebuilds counts from published per-group totals and their intersection.
  // The TD share is not recoverable from totals and is folded into the
  // group-only counts.
  static AgreementCounts from_totals(std::size_t g1_total, std::size_t g2_total,
                                     std::size_t intersection);

  AgreementCounts& operator+=(const AgreementCounts& o);
  bool operator==(const AgreementCounts&) const = default;
};

enum class MergePolicy { IntersectionM, UnionL };

struct MatchEntry {
  ComparisonCase kind = ComparisonCase::AG;
  std::optional<AnnotatedMention> g1;
  std::optional<AnnotatedMention> g2;
};

// Greedy one-to-one matching of two groups' mentions for a single thread.
// Types are collapsed to the 4-way scheme first. Pairs are taken in order of
// descending token overlap, ties broken by earlier sentence, earlier group-1
// start, earlier group-2 start. Throws ValidationError if the inputs span
// more than one thread.
std::vector<MatchEntry> match_annotations(std::span<const AnnotatedMention> g1,
                                          std::span<const AnnotatedMention> g2);

// 2*AG / (G1 total + G2 total). Throws ValidationError when both totals are 0.
double positive_specific_agreement(const AgreementCounts& c);

// [min start, max end). Throws ValidationError unless the spans overlap.
Span merge_span_union(const Span& a, const Span& b);

struct AgreementReport {
  std::array<AgreementCounts, 4> per_type{};  // indexed by ResourceType
  AgreementCounts total;

  const AgreementCounts& of(ResourceType t) const {
    return per_type[static_cast<std::size_t>(t)];
  }
};

// Per-type rows fold each TD pair into the group-only counts of the two
// types involved; the total row keeps TD separate. Row totals add up to the
// total row's group totals.
AgreementReport tally(std::span<const MatchEntry> matches);

// Matches every thread present in either group.
std::vector<MatchEntry> compare_groups(std::span<const AnnotatedMention> g1,
                                       std::span<const AnnotatedMention> g2);

struct Dataset {
  TaggedCorpus corpus;
  AgreementReport counts;
  std::vector<AnnotatedMention> mentions;  // final gold mentions, coarse types
  std::vector<std::string> warnings;
};

Dataset build_dataset(std::span<const Thread> threads, std::span<const AnnotatedMention> g1,
                      std::span<const AnnotatedMention> g2, MergePolicy policy,
                      std::size_t context_cap);

// Gold tagging from a single annotation set (no reconciliation).
Dataset build_single(std::span<const Thread> threads, std::span<const AnnotatedMention> gold,
                     std::size_t context_cap, bool keep_unlabeled = false);

nlohmann::json to_json(const AgreementCounts& c);
nlohmann::json to_json(const AgreementReport& r);

}  // namespace forumtag::agreement
