#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forumtag/types.hpp"

namespace forumtag {

struct Token {
  std::string text;
  // Half-open byte offsets into the source sentence.
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::size_t post_index = 0;
  // Position in the unfolded thread.
  std::size_t sentence_index = 0;

  std::size_t size() const noexcept { return tokens.size(); }
  std::vector<std::string> words() const;
  bool operator==(const Sentence&) const = default;
};

// A discussion thread; posts[0] is the title. Each post is a list of raw
// sentence strings.
struct Thread {
  std::string thread_id;
  std::string course_id;
  std::vector<std::vector<std::string>> posts;

  bool operator==(const Thread&) const = default;
};

// Token span [start, end) within one sentence of a thread.
struct Span {
  std::size_t sentence_index = 0;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  bool operator==(const Span&) const = default;
};

// Number of shared token positions; 0 across sentences.
std::size_t overlap(const Span& a, const Span& b);

struct AnnotatedMention {
  std::string thread_id;
  Span span;
  MentionType type = ResourceType::Assessments;
  int group = 0;
  // Set on union-policy mentions merged from a type disagreement.
  bool disputed = false;

  bool operator==(const AnnotatedMention&) const = default;
};

// One training/evaluation example: a sentence, its gold tags, and the
// preceding thread sentences that serve as its context.
struct TaggedSentence {
  std::string thread_id;
  Sentence sentence;
  std::vector<Tag> tags;
  std::vector<Sentence> context;

  bool operator==(const TaggedSentence&) const = default;
};

using TaggedCorpus = std::vector<TaggedSentence>;

std::vector<Token> tokenize(std::string_view text);
std::vector<std::string> split_sentences(std::string_view post_text);
std::vector<Sentence> unfold_thread(const Thread& thread);

// Throws ValidationError on overlapping or out-of-range spans.
std::vector<Tag> bio_encode(const Sentence& sentence, std::span<const AnnotatedMention> mentions);

struct BioDecodeResult {
  std::vector<AnnotatedMention> mentions;
  std::vector<std::string> warnings;
};

// Maximal B I* runs become mentions (coarse types). An I that does not
// continue a same-type run opens a new mention and records a warning.
BioDecodeResult bio_decode(std::span<const Tag> tags, std::size_t sentence_index = 0);

// The min(i, cap) sentences immediately before sentences[i], in order.
std::vector<Sentence> context_window(std::span<const Sentence> sentences, std::size_t i,
                                     std::size_t cap);

}  // namespace forumtag
