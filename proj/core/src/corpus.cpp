#include "forumtag/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "forumtag/error.hpp"

namespace forumtag {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Bytes >= 0x80 belong to UTF-8 sequences and stay inside words.
bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '_' || u >= 0x80;
}

// Joiners kept inside a token when flanked by word characters
// ("sgd.py", "week-2", "a/b", "don't", "x@y").
bool is_joiner(char c) { return c == '.' || c == '/' || c == '-' || c == '\'' || c == '@'; }

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

bool is_trailing_punct(char c) {
  static constexpr std::string_view kTrailing = ".,;:!?)]}\"'";
  return kTrailing.find(c) != std::string_view::npos;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// "e.g", "i.e", "U.S": every dot-separated piece is one or two letters.
bool is_dotted_abbreviation(std::string_view w) {
  if (w.find('.') == std::string_view::npos) return false;
  std::size_t piece = 0;
  for (char c : w) {
    if (c == '.') {
      if (piece == 0) return false;
      piece = 0;
    } else if (std::isalpha(static_cast<unsigned char>(c)) != 0) {
      if (++piece > 2) return false;
    } else {
      return false;
    }
  }
  return piece > 0 && piece <= 2;
}

bool is_title_abbreviation(std::string_view w) {
  static constexpr std::array<std::string_view, 8> kTitles = {"mr",   "mrs", "ms", "dr",
                                                              "prof", "vs",  "fig", "approx"};
  std::string lower(w);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return std::find(kTitles.begin(), kTitles.end(), lower) != kTitles.end();
}

}  // namespace

std::vector<std::string> Sentence::words() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::size_t overlap(const Span& a, const Span& b) {
  if (a.sentence_index != b.sentence_index) return 0;
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  auto emit = [&](std::size_t b, std::size_t e) {
    tokens.push_back(Token{std::string(text.substr(b, e - b)), b, e});
  };
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    const bool chunk_start = i == 0 || is_space(text[i - 1]);
    const std::string_view rest = text.substr(i);
    if (chunk_start && (starts_with_ci(rest, "http://") || starts_with_ci(rest, "https://") ||
                        starts_with_ci(rest, "www."))) {
      std::size_t j = i;
      while (j < n && !is_space(text[j])) ++j;
      std::size_t body_end = j;
      while (body_end > i + 1 && is_trailing_punct(text[body_end - 1])) --body_end;
      emit(i, body_end);
      for (std::size_t k = body_end; k < j;) {
        std::size_t m = k + 1;
        while (m < j && text[m] == text[k]) ++m;
        emit(k, m);
        k = m;
      }
      i = j;
      continue;
    }
    std::size_t j = i + 1;
    if (is_word_char(text[i])) {
      while (j < n) {
        if (is_word_char(text[j])) {
          ++j;
        } else if (is_joiner(text[j]) && j + 1 < n && is_word_char(text[j + 1])) {
          j += 2;
        } else {
          break;
        }
      }
    } else {
      while (j < n && text[j] == text[i]) ++j;
    }
    emit(i, j);
    i = j;
  }
  return tokens;
}

std::vector<std::string> split_sentences(std::string_view post_text) {
  static constexpr std::string_view kTerminal = ".!?";
  static constexpr std::string_view kClosers = "\"')]";
  std::vector<std::string> out;
  const std::size_t n = post_text.size();
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < n) {
    if (kTerminal.find(post_text[i]) == std::string_view::npos) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && kTerminal.find(post_text[j]) != std::string_view::npos) ++j;
    while (j < n && kClosers.find(post_text[j]) != std::string_view::npos) ++j;
    if (j < n && !is_space(post_text[j])) {
      i = j;
      continue;
    }
    bool split = true;
    if (post_text[i] == '.' && j == i + 1) {
      std::size_t w = i;
      while (w > start && !is_space(post_text[w - 1])) --w;
      const std::string_view word = post_text.substr(w, i - w);
      if (is_dotted_abbreviation(word) || is_title_abbreviation(word)) split = false;
    }
    if (split) {
      const std::string_view sentence = trim(post_text.substr(start, j - start));
      if (!sentence.empty()) out.emplace_back(sentence);
      start = j;
    }
    i = j;
  }
  const std::string_view tail = trim(post_text.substr(std::min(start, n)));
  if (!tail.empty()) out.emplace_back(tail);
  return out;
}

std::vector<Sentence> unfold_thread(const Thread& thread) {
  std::vector<Sentence> out;
  for (std::size_t p = 0; p < thread.posts.size(); ++p) {
    for (const auto& raw : thread.posts[p]) {
      auto tokens = tokenize(raw);
      if (tokens.empty()) continue;
      out.push_back(Sentence{std::move(tokens), p, out.size()});
    }
  }
  return out;
}

std::vector<Tag> bio_encode(const Sentence& sentence, std::span<const AnnotatedMention> mentions) {
  std::vector<const AnnotatedMention*> sorted;
  for (const auto& m : mentions) {
    if (m.span.sentence_index != sentence.sentence_index || m.span.start >= m.span.end ||
        m.span.end > sentence.size()) {
      throw ValidationError("mention span [" + std::to_string(m.span.start) + "," +
                            std::to_string(m.span.end) + ") in sentence " +
                            std::to_string(m.span.sentence_index) +
                            " is out of range for sentence " +
                            std::to_string(sentence.sentence_index) + " of length " +
                            std::to_string(sentence.size()));
    }
    sorted.push_back(&m);
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return a->span.start < b->span.start;
  });
  std::vector<Tag> tags(sentence.size(), Tag::O);
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (k > 0 && sorted[k]->span.start < sorted[k - 1]->span.end) {
      throw ValidationError("overlapping mention spans at token " +
                            std::to_string(sorted[k]->span.start) + " in sentence " +
                            std::to_string(sentence.sentence_index));
    }
    const ResourceType type = coarse_type(sorted[k]->type);
    for (std::size_t t = sorted[k]->span.start; t < sorted[k]->span.end; ++t) {
      tags[t] = make_tag(type, t == sorted[k]->span.start);
    }
  }
  return tags;
}

BioDecodeResult bio_decode(std::span<const Tag> tags, std::size_t sentence_index) {
  BioDecodeResult result;
  bool open = false;
  AnnotatedMention current;
  auto close = [&](std::size_t end) {
    if (!open) return;
    current.span.end = end;
    result.mentions.push_back(current);
    open = false;
  };
  for (std::size_t t = 0; t < tags.size(); ++t) {
    const Tag tag = tags[t];
    if (tag == Tag::O) {
      close(t);
      continue;
    }
    const ResourceType type = tag_type(tag);
    if (is_inside(tag) && open && coarse_type(current.type) == type) continue;
    close(t);
    if (is_inside(tag)) {
      result.warnings.push_back("orphan " + std::string(to_string(tag)) + " at token " +
                                std::to_string(t) + " starts a new mention");
    }
    current = AnnotatedMention{};
    current.span = Span{sentence_index, t, t + 1};
    current.type = type;
    open = true;
  }
  close(tags.size());
  return result;
}

std::vector<Sentence> context_window(std::span<const Sentence> sentences, std::size_t i,
                                     std::size_t cap) {
  if (i >= sentences.size()) {
    throw ValidationError("context_window: index " + std::to_string(i) + " outside " +
                          std::to_string(sentences.size()) + " sentences");
  }
  const std::size_t first = i > cap ? i - cap : 0;
  return {sentences.begin() + static_cast<std::ptrdiff_t>(first),
          sentences.begin() + static_cast<std::ptrdiff_t>(i)};
}

}  // namespace forumtag
