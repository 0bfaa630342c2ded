#include "forumtag/encoders.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forumtag/error.hpp"

namespace forumtag::enc {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool parse_float(std::string_view text, float& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Vocabulary::Vocabulary(bool case_fold) : case_fold_(case_fold) {
  add(kUnkToken);
  add(kPadToken);
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words, bool case_fold) {
  if (words.size() < 2 || words[kUnk] != kUnkToken || words[kPad] != kPadToken) {
    throw ValidationError("vocabulary must start with " + std::string(kUnkToken) + " and " +
                          std::string(kPadToken));
  }
  Vocabulary v(case_fold);
  for (std::size_t i = 2; i < words.size(); ++i) {
    if (v.index_.count(words[i]) != 0) throw ValidationError("duplicate vocabulary word " + words[i]);
    v.index_.emplace(words[i], v.words_.size());
    v.words_.push_back(std::move(words[i]));
  }
  return v;
}

Vocabulary Vocabulary::build(const TaggedCorpus& corpus, std::size_t min_count,
                             const std::vector<std::string>* pretrained, bool case_fold) {
  Vocabulary v(case_fold);
  std::map<std::string, std::size_t> counts;
  auto count = [&](const Sentence& s) {
    for (const auto& t : s.tokens) ++counts[v.normalize(t.text)];
  };
  for (const auto& ex : corpus) {
    count(ex.sentence);
    for (const auto& c : ex.context) count(c);
  }
  for (const auto& [w, n] : counts) {
    if (n >= min_count) v.add(w);
  }
  if (pretrained != nullptr) {
    for (const auto& w : *pretrained) v.add(w);
  }
  return v;
}

std::string Vocabulary::normalize(std::string_view word) const {
  return case_fold_ ? lower(word) : std::string(word);
}

std::size_t Vocabulary::add(std::string_view word) {
  std::string key = (word == kUnkToken || word == kPadToken) ? std::string(word) : normalize(word);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const std::size_t id = words_.size();
  index_.emplace(key, id);
  words_.push_back(std::move(key));
  return id;
}

std::size_t Vocabulary::id(std::string_view word) const {
  auto it = index_.find(normalize(word));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return index_.count(normalize(word)) != 0;
}

std::vector<std::size_t> Vocabulary::encode(const Sentence& s) const {
  std::vector<std::size_t> ids;
  ids.reserve(s.size());
  for (const auto& t : s.tokens) ids.push_back(id(t.text));
  return ids;
}

std::size_t CharAlphabet::id(char c) const noexcept {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 0x20 && u <= 0x7e) ? u - 0x20 + 1 : kUnkChar;
}

char CharAlphabet::symbol(std::size_t id) const noexcept {
  return (id == kUnkChar || id >= size()) ? '?' : static_cast<char>(id - 1 + 0x20);
}

std::vector<std::size_t> CharAlphabet::encode(std::string_view word) const {
  std::vector<std::size_t> ids;
  ids.reserve(word.size());
  for (char c : word) ids.push_back(id(c));
  return ids;
}

std::size_t PretrainedVectors::find(std::string_view word) const {
  if (auto it = index.find(std::string(word)); it != index.end()) return it->second;
  if (auto it = index.find(lower(word)); it != index.end()) return it->second;
  return words.size();
}

PretrainedVectors read_pretrained_vectors(std::istream& in, std::size_t expected_dim,
                                          const std::string& source) {
  PretrainedVectors pv;
  pv.dim = expected_dim;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<float> row;
    std::string num;
    while (fields >> num) {
      float v = 0.0F;
      if (!parse_float(num, v)) {
        throw ParseError(source, lineno, "malformed number '" + num + "' for word '" + word + "'");
      }
      row.push_back(v);
    }
    if (row.empty()) throw ParseError(source, lineno, "word '" + word + "' has no components");
    if (pv.dim == 0) pv.dim = row.size();
    if (row.size() != pv.dim) {
      throw ParseError(source, lineno,
                       "dimension mismatch: expected " + std::to_string(pv.dim) + " components, got " +
                           std::to_string(row.size()));
    }
    if (pv.index.count(word) != 0) continue;
    pv.index.emplace(word, pv.words.size());
    pv.words.push_back(word);
    pv.values.insert(pv.values.end(), row.begin(), row.end());
  }
  return pv;
}

PretrainedVectors read_pretrained_vectors(const std::string& path, std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vectors file " + path);
  return read_pretrained_vectors(in, expected_dim, path);
}

nlohmann::json to_json(const Coverage& c) {
  return {{"vocab_size", c.vocab_size},
          {"covered", c.covered},
          {"oov", c.oov},
          {"oov_ratio", c.oov_ratio()}};
}

WordEmbeddings<float> load_pretrained_vectors(const std::string& path, const Vocabulary& vocab,
                                              std::size_t dim, num::Rng& rng) {
  return embed_pretrained<float>(read_pretrained_vectors(path, dim), vocab, dim, rng);
}

}  // namespace forumtag::enc
