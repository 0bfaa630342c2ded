#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "forumtag/corpus.hpp"

namespace forumtag {

// Thread file: one JSON object per line,
//   {"thread_id": ..., "course_id": ..., "posts": [[sentence, ...], ...]}.
// A post given as a single string is split with split_sentences().
std::vector<Thread> read_threads(std::istream& in, const std::string& source = "<stream>");
std::vector<Thread> read_threads(const std::string& path);
void write_threads(std::ostream& out, const std::vector<Thread>& threads);
void write_threads(const std::string& path, const std::vector<Thread>& threads);

// Tagged-corpus column file. Every sentence block is
//   # thread=<id> post=<k> sent=<n> [ctx=<i,j,...>] [offsets=<b:e,...>] [example=0]
//   token<TAB>tag
//   ...
// followed by a blank line. Context-only sentences (example=0) are written
// once, before the first example that refers to them.
void write_tagged_corpus(std::ostream& out, const TaggedCorpus& corpus);
void write_tagged_corpus(const std::string& path, const TaggedCorpus& corpus);
TaggedCorpus read_tagged_corpus(std::istream& in, const std::string& source = "<stream>");
TaggedCorpus read_tagged_corpus(const std::string& path);

// Standoff annotations: "thread_id<TAB>sent<TAB>start<TAB>end<TAB>type"; the
// type is a fine type name or "Coursewares". Blank and '#' lines are skipped;
// extra columns are ignored.
std::vector<AnnotatedMention> read_standoff(std::istream& in, int group,
                                            const std::string& source = "<stream>");
std::vector<AnnotatedMention> read_standoff(const std::string& path, int group);
void write_standoff(std::ostream& out, const std::vector<AnnotatedMention>& mentions);
void write_standoff(const std::string& path, const std::vector<AnnotatedMention>& mentions);

}  // namespace forumtag
