#include "forumtag/agreement.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include <nlohmann/json.hpp>

#include "forumtag/error.hpp"

namespace forumtag::agreement {
namespace {

AnnotatedMention collapsed(const AnnotatedMention& m) {
  AnnotatedMention out = m;
  out.type = coarse_type(m.type);
  return out;
}

std::size_t position_key(const MatchEntry& e) {
  return e.g1 ? e.g1->span.start : e.g2->span.start;
}

const Span& entry_span(const MatchEntry& e) { return e.g1 ? e.g1->span : e.g2->span; }

using ThreadMentions = std::map<std::string, std::vector<AnnotatedMention>>;

ThreadMentions by_thread(std::span<const AnnotatedMention> ms) {
  ThreadMentions out;
  for (const auto& m : ms) out[m.thread_id].push_back(m);
  return out;
}

// Resolves overlaps inside each sentence by dropping the later mention.
std::vector<AnnotatedMention> drop_overlaps(std::vector<AnnotatedMention> ms,
                                            std::vector<std::string>& warnings) {
  std::sort(ms.begin(), ms.end(), [](const auto& a, const auto& b) {
    return std::tie(a.span.sentence_index, a.span.start, a.span.end) <
           std::tie(b.span.sentence_index, b.span.start, b.span.end);
  });
  std::vector<AnnotatedMention> kept;
  for (auto& m : ms) {
    if (!kept.empty() && overlap(kept.back().span, m.span) > 0) {
      warnings.push_back("thread " + m.thread_id + " sentence " +
                         std::to_string(m.span.sentence_index) + ": dropped mention [" +
                         std::to_string(m.span.start) + "," + std::to_string(m.span.end) +
                         ") overlapping [" + std::to_string(kept.back().span.start) + "," +
                         std::to_string(kept.back().span.end) + ")");
      continue;
    }
    kept.push_back(std::move(m));
  }
  return kept;
}

Dataset assemble(std::span<const Thread> threads, const ThreadMentions& mentions,
                 std::size_t context_cap, bool keep_unlabeled, Dataset ds) {
  for (const auto& [thread_id, _] : mentions) {
    const bool known = std::any_of(threads.begin(), threads.end(),
                                   [&](const Thread& t) { return t.thread_id == thread_id; });
    if (!known) throw ValidationError("annotations reference unknown thread " + thread_id);
  }
  for (const auto& thread : threads) {
    const auto sentences = unfold_thread(thread);
    std::vector<std::vector<AnnotatedMention>> per_sentence(sentences.size());
    if (auto it = mentions.find(thread.thread_id); it != mentions.end()) {
      for (const auto& m : drop_overlaps(it->second, ds.warnings)) {
        if (m.span.sentence_index >= sentences.size()) {
          throw ValidationError("thread " + thread.thread_id + " has no sentence " +
                                std::to_string(m.span.sentence_index));
        }
        per_sentence[m.span.sentence_index].push_back(m);
        ds.mentions.push_back(m);
      }
    }
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      if (per_sentence[i].empty() && !keep_unlabeled) continue;
      TaggedSentence ex;
      ex.thread_id = thread.thread_id;
      ex.sentence = sentences[i];
      ex.tags = bio_encode(sentences[i], per_sentence[i]);
      ex.context = context_window(sentences, i, context_cap);
      ds.corpus.push_back(std::move(ex));
    }
  }
  return ds;
}

}  // namespace

std::string_view to_string(ComparisonCase c) {
  switch (c) {
    case ComparisonCase::AG:
      return "AG";
    case ComparisonCase::TD:
      return "TD";
    case ComparisonCase::G1Only:
      return "G1";
    case ComparisonCase::G2Only:
      return "G2";
  }
  return "?";
}

AgreementCounts AgreementCounts::from_totals(std::size_t g1_total, std::size_t g2_total,
                                             std::size_t intersection) {
  if (intersection > g1_total || intersection > g2_total) {
    throw ValidationError("intersection exceeds a group total");
  }
  return AgreementCounts{intersection, 0, g1_total - intersection, g2_total - intersection};
}

AgreementCounts& AgreementCounts::operator+=(const AgreementCounts& o) {
  ag += o.ag;
  td += o.td;
  g1_only += o.g1_only;
  g2_only += o.g2_only;
  return *this;
}

double positive_specific_agreement(const AgreementCounts& c) {
  const std::size_t denom = c.g1_total() + c.g2_total();
  if (denom == 0) {
    throw ValidationError("positive specific agreement is undefined when both groups are empty");
  }
  return 2.0 * static_cast<double>(c.ag) / static_cast<double>(denom);
}

Span merge_span_union(const Span& a, const Span& b) {
  if (overlap(a, b) == 0) {
    throw ValidationError("cannot merge non-overlapping spans [" + std::to_string(a.start) +
                          "," + std::to_string(a.end) + ") and [" + std::to_string(b.start) +
                          "," + std::to_string(b.end) + ")");
  }
  return Span{a.sentence_index, std::min(a.start, b.start), std::max(a.end, b.end)};
}

std::vector<MatchEntry> match_annotations(std::span<const AnnotatedMention> g1,
                                          std::span<const AnnotatedMention> g2) {
  const std::string* thread = nullptr;
  for (const auto* group : {&g1, &g2}) {
    for (const auto& m : *group) {
      if (thread == nullptr) {
        thread = &m.thread_id;
      } else if (*thread != m.thread_id) {
        throw ValidationError("match_annotations: mentions from threads " + *thread + " and " +
                              m.thread_id + " cannot be compared");
      }
    }
  }

  struct Candidate {
    std::size_t overlap, sentence, start1, start2, i, j;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < g1.size(); ++i) {
    for (std::size_t j = 0; j < g2.size(); ++j) {
      const std::size_t ov = overlap(g1[i].span, g2[j].span);
      if (ov > 0) {
        candidates.push_back({ov, g1[i].span.sentence_index, g1[i].span.start, g2[j].span.start, i, j});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    return std::tie(a.sentence, a.start1, a.start2, a.i, a.j) <
           std::tie(b.sentence, b.start1, b.start2, b.i, b.j);
  });

  std::vector<bool> used1(g1.size(), false), used2(g2.size(), false);
  std::vector<MatchEntry> out;
  for (const auto& c : candidates) {
    if (used1[c.i] || used2[c.j]) continue;
    used1[c.i] = used2[c.j] = true;
    MatchEntry e;
    e.g1 = collapsed(g1[c.i]);
    e.g2 = collapsed(g2[c.j]);
    e.kind = coarse_type(e.g1->type) == coarse_type(e.g2->type) ? ComparisonCase::AG
                                                                : ComparisonCase::TD;
    out.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < g1.size(); ++i) {
    if (!used1[i]) out.push_back(MatchEntry{ComparisonCase::G1Only, collapsed(g1[i]), std::nullopt});
  }
  for (std::size_t j = 0; j < g2.size(); ++j) {
    if (!used2[j]) out.push_back(MatchEntry{ComparisonCase::G2Only, std::nullopt, collapsed(g2[j])});
  }
  std::stable_sort(out.begin(), out.end(), [](const MatchEntry& a, const MatchEntry& b) {
    return std::make_pair(entry_span(a).sentence_index, position_key(a)) <
           std::make_pair(entry_span(b).sentence_index, position_key(b));
  });
  return out;
}

AgreementReport tally(std::span<const MatchEntry> matches) {
  AgreementReport r;
  auto row = [&r](const AnnotatedMention& m) -> AgreementCounts& {
    return r.per_type[static_cast<std::size_t>(coarse_type(m.type))];
  };
  for (const auto& e : matches) {
    switch (e.kind) {
      case ComparisonCase::AG:
        ++row(*e.g1).ag;
        ++r.total.ag;
        break;
      case ComparisonCase::TD:
        ++row(*e.g1).g1_only;
        ++row(*e.g2).g2_only;
        ++r.total.td;
        break;
      case ComparisonCase::G1Only:
        ++row(*e.g1).g1_only;
        ++r.total.g1_only;
        break;
      case ComparisonCase::G2Only:
        ++row(*e.g2).g2_only;
        ++r.total.g2_only;
        break;
    }
  }
  return r;
}

std::vector<MatchEntry> compare_groups(std::span<const AnnotatedMention> g1,
                                       std::span<const AnnotatedMention> g2) {
  auto t1 = by_thread(g1);
  auto t2 = by_thread(g2);
  std::map<std::string, int> threads;
  for (const auto& [k, _] : t1) threads[k];
  for (const auto& [k, _] : t2) threads[k];
  std::vector<MatchEntry> out;
  for (const auto& [thread_id, _] : threads) {
    auto m = match_annotations(t1[thread_id], t2[thread_id]);
    out.insert(out.end(), std::make_move_iterator(m.begin()), std::make_move_iterator(m.end()));
  }
  return out;
}

Dataset build_dataset(std::span<const Thread> threads, std::span<const AnnotatedMention> g1,
                      std::span<const AnnotatedMention> g2, MergePolicy policy,
                      std::size_t context_cap) {
  const auto matches = compare_groups(g1, g2);
  Dataset ds;
  ds.counts = tally(matches);
  ThreadMentions gold;
  for (const auto& e : matches) {
    AnnotatedMention m;
    switch (e.kind) {
      case ComparisonCase::AG:
        m = *e.g1;
        m.span = merge_span_union(e.g1->span, e.g2->span);
        break;
      case ComparisonCase::TD:
        if (policy != MergePolicy::UnionL) continue;
        m = *e.g1;
        m.span = merge_span_union(e.g1->span, e.g2->span);
        m.disputed = true;
        break;
      case ComparisonCase::G1Only:
        if (policy != MergePolicy::UnionL) continue;
        m = *e.g1;
        break;
      case ComparisonCase::G2Only:
        if (policy != MergePolicy::UnionL) continue;
        m = *e.g2;
        break;
    }
    m.group = 0;
    gold[m.thread_id].push_back(std::move(m));
  }
  return assemble(threads, gold, context_cap, false, std::move(ds));
}

Dataset build_single(std::span<const Thread> threads, std::span<const AnnotatedMention> gold,
                     std::size_t context_cap, bool keep_unlabeled) {
  ThreadMentions mentions;
  for (const auto& m : gold) mentions[m.thread_id].push_back(collapsed(m));
  return assemble(threads, mentions, context_cap, keep_unlabeled, Dataset{});
}

nlohmann::json to_json(const AgreementCounts& c) {
  nlohmann::json j;
  j["ag"] = c.ag;
  j["td"] = c.td;
  j["g1_only"] = c.g1_only;
  j["g2_only"] = c.g2_only;
  j["g1_total"] = c.g1_total();
  j["g2_total"] = c.g2_total();
  j["union"] = c.union_count();
  if (c.g1_total() + c.g2_total() > 0) {
    j["p_pos"] = positive_specific_agreement(c);
  } else {
    j["p_pos"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const AgreementReport& r) {
  nlohmann::json j;
  for (ResourceType t : kResourceTypes) j["types"][std::string(to_string(t))] = to_json(r.of(t));
  j["total"] = to_json(r.total);
  return j;
}

}  // namespace forumtag::agreement
