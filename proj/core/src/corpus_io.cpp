#include "forumtag/corpus_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forumtag/error.hpp"

namespace forumtag {
namespace {

using json = nlohmann::json;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

bool parse_size(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool has_space(std::string_view s) {
  return s.find_first_of(" \t\r\n") != std::string_view::npos;
}

struct Block {
  std::size_t line = 0;
  std::string thread_id;
  std::size_t post = 0;
  std::size_t sent = 0;
  bool example = true;
  bool has_offsets = false;
  std::vector<std::size_t> ctx;
  std::vector<std::pair<std::size_t, std::size_t>> offsets;
  std::vector<Token> tokens;
  std::vector<Tag> tags;
};

std::string block_name(const Block& b) {
  return "sentence thread=" + b.thread_id + " sent=" + std::to_string(b.sent);
}

Block parse_header(std::string_view line, std::size_t lineno, const std::string& source) {
  Block b;
  b.line = lineno;
  bool have_thread = false, have_post = false, have_sent = false;
  for (std::string_view field : split(line.substr(1), ' ')) {
    if (field.empty()) continue;
    const std::size_t eq = field.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, lineno, "malformed header field '" + std::string(field) + "'");
    const std::string_view key = field.substr(0, eq);
    const std::string_view value = field.substr(eq + 1);
    if (key == "thread") {
      b.thread_id = std::string(value);
      have_thread = true;
    } else if (key == "post") {
      have_post = parse_size(value, b.post);
      if (!have_post) throw ParseError(source, lineno, "bad post index '" + std::string(value) + "'");
    } else if (key == "sent") {
      have_sent = parse_size(value, b.sent);
      if (!have_sent) throw ParseError(source, lineno, "bad sentence index '" + std::string(value) + "'");
    } else if (key == "ctx") {
      for (std::string_view v : split(value, ',')) {
        std::size_t idx = 0;
        if (!parse_size(v, idx)) throw ParseError(source, lineno, "bad context index '" + std::string(v) + "'");
        b.ctx.push_back(idx);
      }
    } else if (key == "offsets") {
      b.has_offsets = true;
      for (std::string_view v : split(value, ',')) {
        const std::size_t colon = v.find(':');
        std::size_t s = 0, e = 0;
        if (colon == std::string_view::npos || !parse_size(v.substr(0, colon), s) ||
            !parse_size(v.substr(colon + 1), e)) {
          throw ParseError(source, lineno, "bad offset pair '" + std::string(v) + "'");
        }
        b.offsets.emplace_back(s, e);
      }
    } else if (key == "example") {
      b.example = value != "0";
    }
  }
  if (!have_thread || !have_post || !have_sent) {
    throw ParseError(source, lineno, "sentence header needs thread=, post= and sent=");
  }
  return b;
}

void write_block(std::ostream& out, const std::string& thread_id, const Sentence& s,
                 const std::vector<Tag>& tags, const std::vector<Sentence>* context) {
  out << "# thread=" << thread_id << " post=" << s.post_index << " sent=" << s.sentence_index;
  if (context != nullptr && !context->empty()) {
    out << " ctx=";
    for (std::size_t i = 0; i < context->size(); ++i) {
      out << (i ? "," : "") << (*context)[i].sentence_index;
    }
  }
  out << " offsets=";
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    out << (i ? "," : "") << s.tokens[i].char_start << ':' << s.tokens[i].char_end;
  }
  if (context == nullptr) out << " example=0";
  out << '\n';
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    out << s.tokens[i].text << '\t' << (context ? to_string(tags[i]) : "O") << '\n';
  }
  out << '\n';
}

}  // namespace

std::vector<Thread> read_threads(std::istream& in, const std::string& source) {
  std::vector<Thread> threads;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("thread_id") || !j.contains("posts") ||
        !j["posts"].is_array()) {
      throw ParseError(source, lineno, "thread record needs thread_id and posts[]");
    }
    Thread t;
    try {
      t.thread_id = j["thread_id"].is_string() ? j["thread_id"].get<std::string>()
                                               : j["thread_id"].dump();
      if (j.contains("course_id") && !j["course_id"].is_null()) {
        t.course_id = j["course_id"].is_string() ? j["course_id"].get<std::string>()
                                                 : j["course_id"].dump();
      }
      for (const auto& post : j["posts"]) {
        if (post.is_string()) {
          t.posts.push_back(split_sentences(post.get<std::string>()));
        } else {
          t.posts.push_back(post.get<std::vector<std::string>>());
        }
      }
    } catch (const json::exception& e) {
      throw ParseError(source, lineno, std::string("bad thread record: ") + e.what());
    }
    if (t.posts.empty()) throw ParseError(source, lineno, "thread " + t.thread_id + " has no posts");
    threads.push_back(std::move(t));
  }
  return threads;
}

std::vector<Thread> read_threads(const std::string& path) {
  auto in = open_in(path);
  return read_threads(in, path);
}

void write_threads(std::ostream& out, const std::vector<Thread>& threads) {
  for (const auto& t : threads) {
    json j;
    j["thread_id"] = t.thread_id;
    j["course_id"] = t.course_id;
    j["posts"] = t.posts;
    out << j.dump() << '\n';
  }
}

void write_threads(const std::string& path, const std::vector<Thread>& threads) {
  auto out = open_out(path);
  write_threads(out, threads);
}

void write_tagged_corpus(std::ostream& out, const TaggedCorpus& corpus) {
  std::set<std::pair<std::string, std::size_t>> example_keys;
  for (const auto& ex : corpus) {
    if (ex.thread_id.empty() || has_space(ex.thread_id)) {
      throw ValidationError("thread id '" + ex.thread_id + "' cannot be written to a column file");
    }
    if (ex.tags.size() != ex.sentence.size()) {
      throw ValidationError("sentence thread=" + ex.thread_id + " sent=" +
                            std::to_string(ex.sentence.sentence_index) + " has " +
                            std::to_string(ex.tags.size()) + " tags for " +
                            std::to_string(ex.sentence.size()) + " tokens");
    }
    example_keys.emplace(ex.thread_id, ex.sentence.sentence_index);
  }
  std::set<std::pair<std::string, std::size_t>> written;
  for (const auto& ex : corpus) {
    for (const auto& c : ex.context) {
      const auto key = std::make_pair(ex.thread_id, c.sentence_index);
      if (example_keys.contains(key) || written.contains(key)) continue;
      write_block(out, ex.thread_id, c, {}, nullptr);
      written.insert(key);
    }
    write_block(out, ex.thread_id, ex.sentence, ex.tags, &ex.context);
  }
}

void write_tagged_corpus(const std::string& path, const TaggedCorpus& corpus) {
  auto out = open_out(path);
  write_tagged_corpus(out, corpus);
}

TaggedCorpus read_tagged_corpus(std::istream& in, const std::string& source) {
  std::vector<Block> blocks;
  std::string line;
  std::size_t lineno = 0;
  Block* current = nullptr;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      current = nullptr;
      continue;
    }
    if (line[0] == '#' && (current == nullptr || line.rfind("# thread=", 0) == 0)) {
      blocks.push_back(parse_header(line, lineno, source));
      current = &blocks.back();
      continue;
    }
    if (current == nullptr) {
      throw ParseError(source, lineno, "token line outside a sentence block (missing header)");
    }
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError(source, lineno,
                       block_name(*current) + ": token line without a tag column; tags and tokens differ in count");
    }
    const std::string_view tag_name = std::string_view(line).substr(tab + 1);
    const auto tag = parse_tag(tag_name.substr(0, tag_name.find('\t')));
    if (!tag) {
      throw ParseError(source, lineno,
                       block_name(*current) + ": unknown tag '" + std::string(tag_name) + "'");
    }
    current->tokens.push_back(Token{line.substr(0, tab), 0, 0});
    current->tags.push_back(*tag);
  }

  std::map<std::pair<std::string, std::size_t>, Sentence> sentences;
  for (auto& b : blocks) {
    if (b.tokens.empty()) throw ParseError(source, b.line, block_name(b) + " has no tokens");
    if (b.has_offsets) {
      if (b.offsets.size() != b.tokens.size()) {
        throw ParseError(source, b.line,
                         block_name(b) + ": " + std::to_string(b.offsets.size()) +
                             " offsets for " + std::to_string(b.tokens.size()) + " tokens");
      }
      for (std::size_t i = 0; i < b.tokens.size(); ++i) {
        b.tokens[i].char_start = b.offsets[i].first;
        b.tokens[i].char_end = b.offsets[i].second;
      }
    } else {
      std::size_t pos = 0;
      for (auto& t : b.tokens) {
        t.char_start = pos;
        t.char_end = pos + t.text.size();
        pos = t.char_end + 1;
      }
    }
    Sentence s{b.tokens, b.post, b.sent};
    sentences.emplace(std::make_pair(b.thread_id, b.sent), std::move(s));
  }

  TaggedCorpus corpus;
  for (const auto& b : blocks) {
    if (!b.example) continue;
    TaggedSentence ex;
    ex.thread_id = b.thread_id;
    ex.sentence = Sentence{b.tokens, b.post, b.sent};
    ex.tags = b.tags;
    for (std::size_t idx : b.ctx) {
      auto it = sentences.find({b.thread_id, idx});
      if (it == sentences.end()) {
        throw ParseError(source, b.line,
                         block_name(b) + ": context sentence " + std::to_string(idx) + " not in file");
      }
      if (idx >= b.sent) {
        throw ParseError(source, b.line,
                         block_name(b) + ": context sentence " + std::to_string(idx) + " does not precede it");
      }
      ex.context.push_back(it->second);
    }
    corpus.push_back(std::move(ex));
  }
  return corpus;
}

TaggedCorpus read_tagged_corpus(const std::string& path) {
  auto in = open_in(path);
  return read_tagged_corpus(in, path);
}

std::vector<AnnotatedMention> read_standoff(std::istream& in, int group, const std::string& source) {
  std::vector<AnnotatedMention> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() < 5) {
      throw ParseError(source, lineno, "expected 5 tab-separated columns, got " + std::to_string(cols.size()));
    }
    AnnotatedMention m;
    m.thread_id = std::string(cols[0]);
    m.group = group;
    if (!parse_size(cols[1], m.span.sentence_index) || !parse_size(cols[2], m.span.start) ||
        !parse_size(cols[3], m.span.end)) {
      throw ParseError(source, lineno, "sentence/start/end must be non-negative integers");
    }
    if (m.span.start >= m.span.end) {
      throw ParseError(source, lineno, "empty or inverted span [" + std::string(cols[2]) + "," +
                                           std::string(cols[3]) + ")");
    }
    if (auto fine = parse_fine_type(cols[4])) {
      m.type = *fine;
    } else if (auto coarse = parse_resource_type(cols[4])) {
      m.type = *coarse;
    } else {
      throw ParseError(source, lineno, "unknown resource type '" + std::string(cols[4]) + "'");
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<AnnotatedMention> read_standoff(const std::string& path, int group) {
  auto in = open_in(path);
  return read_standoff(in, group, path);
}

void write_standoff(std::ostream& out, const std::vector<AnnotatedMention>& mentions) {
  for (const auto& m : mentions) {
    out << m.thread_id << '\t' << m.span.sentence_index << '\t' << m.span.start << '\t'
        << m.span.end << '\t' << to_string(m.type) << '\n';
  }
}

void write_standoff(const std::string& path, const std::vector<AnnotatedMention>& mentions) {
  auto out = open_out(path);
  write_standoff(out, mentions);
}

}  // namespace forumtag
