#include "forumtag/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "forumtag/corpus_io.hpp"
#include "forumtag/error.hpp"

namespace forumtag::eval {
namespace {

void check_aligned(const TagSequences& gold, const TagSequences& pred) {
  if (gold.size() != pred.size()) {
    throw ValidationError("evaluation: " + std::to_string(gold.size()) + " gold sentences but " +
                          std::to_string(pred.size()) + " predicted");
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != pred[i].size()) {
      throw ValidationError("evaluation: sentence " + std::to_string(i) + " has " +
                            std::to_string(gold[i].size()) + " gold tags but " +
                            std::to_string(pred[i].size()) + " predicted");
    }
  }
}

ResourceType type_of(const AnnotatedMention& m) { return coarse_type(m.type); }

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

nlohmann::json prf_json(const PRF& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

}  // namespace

PRF PRF::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  PRF r;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

PRF PRF::from_pr(double precision, double recall) {
  PRF r{precision, recall, 0.0};
  if (precision + recall > 0) r.f1 = 2 * precision * recall / (precision + recall);
  return r;
}

void TagConfusion::add(std::span<const Tag> gold, std::span<const Tag> pred) {
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::size_t g = tag_index(gold[i]), p = tag_index(pred[i]);
    if (g == p) {
      if (g != 0) ++tp[g];
      continue;
    }
    if (p != 0) ++fp[p];
    if (g != 0) ++fn[g];
  }
}

PRF TagConfusion::micro() const {
  std::size_t t = 0, p = 0, n = 0;
  for (std::size_t i = 1; i < kNumTags; ++i) {
    t += tp[i];
    p += fp[i];
    n += fn[i];
  }
  return PRF::from_counts(t, p, n);
}

PRF TagConfusion::of(Tag tag) const {
  const std::size_t i = tag_index(tag);
  return PRF::from_counts(tp[i], fp[i], fn[i]);
}

PRF micro_prf(const TagSequences& gold, const TagSequences& pred) {
  check_aligned(gold, pred);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      const Tag g = gold[s][i], p = pred[s][i];
      if (p != Tag::O) (p == g ? tp : fp) += 1;
      if (g != Tag::O && p != g) ++fn;
    }
  }
  return PRF::from_counts(tp, fp, fn);
}

TagConfusion confusion(const TagSequences& gold, const TagSequences& pred) {
  check_aligned(gold, pred);
  TagConfusion c;
  for (std::size_t s = 0; s < gold.size(); ++s) c.add(gold[s], pred[s]);
  return c;
}

std::vector<TagF1> per_tag_f1(const TagSequences& gold, const TagSequences& pred) {
  const TagConfusion c = confusion(gold, pred);
  std::vector<TagF1> rows;
  for (std::size_t i = 1; i < kNumTags; ++i) {
    TagF1 row;
    row.tag = tag_from_index(i);
    row.prf = c.of(row.tag);
    row.support = c.tp[i] + c.fn[i];
    row.no_support = c.tp[i] + c.fn[i] + c.fp[i] == 0;
    rows.push_back(row);
  }
  return rows;
}

std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::ExactlyCorrect:
      return "ExactlyCorrect";
    case ErrorCategory::Missing:
      return "Missing";
    case ErrorCategory::WronglyExtracted:
      return "WronglyExtracted";
    case ErrorCategory::ScopeWrongTypeRight:
      return "ScopeWrongTypeRight";
    case ErrorCategory::ScopeRightTypeWrong:
      return "ScopeRightTypeWrong";
    case ErrorCategory::ScopeWrongTypeWrong:
      return "ScopeWrongTypeWrong";
  }
  return "?";
}

std::vector<CategorizedPair> categorize_prediction(std::span<const AnnotatedMention> gold,
                                                   std::span<const AnnotatedMention> pred) {
  struct Candidate {
    std::size_t overlap, sentence, gstart, pstart, i, j;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      const std::size_t ov = overlap(gold[i].span, pred[j].span);
      if (ov > 0) cands.push_back({ov, gold[i].span.sentence_index, gold[i].span.start, pred[j].span.start, i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    return std::tie(a.sentence, a.gstart, a.pstart, a.i, a.j) <
           std::tie(b.sentence, b.gstart, b.pstart, b.i, b.j);
  });
  std::vector<bool> gused(gold.size(), false), pused(pred.size(), false);
  std::vector<CategorizedPair> out;
  for (const auto& c : cands) {
    if (gused[c.i] || pused[c.j]) continue;
    gused[c.i] = pused[c.j] = true;
    const auto& g = gold[c.i];
    const auto& p = pred[c.j];
    const bool scope = g.span == p.span;
    const bool type = type_of(g) == type_of(p);
    ErrorCategory cat = scope ? (type ? ErrorCategory::ExactlyCorrect : ErrorCategory::ScopeRightTypeWrong)
                              : (type ? ErrorCategory::ScopeWrongTypeRight
                                      : ErrorCategory::ScopeWrongTypeWrong);
    out.push_back({g, p, cat});
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!gused[i]) out.push_back({gold[i], std::nullopt, ErrorCategory::Missing});
  }
  for (std::size_t j = 0; j < pred.size(); ++j) {
    if (!pused[j]) out.push_back({std::nullopt, pred[j], ErrorCategory::WronglyExtracted});
  }
  auto key = [](const CategorizedPair& p) {
    const Span& s = p.gold ? p.gold->span : p.pred->span;
    return std::make_pair(s.sentence_index, s.start);
  };
  std::stable_sort(out.begin(), out.end(),
                   [&](const CategorizedPair& a, const CategorizedPair& b) { return key(a) < key(b); });
  return out;
}

OovReport oov_report(std::span<const MentionOutcome> outcomes) {
  OovReport r;
  for (const auto& o : outcomes) {
    OovRow& row = o.oov ? r.oov : r.non_oov;
    ++row.total;
    ++r.all.total;
    if (o.correct) {
      ++row.correct;
      ++r.all.correct;
    }
  }
  return r;
}

bool is_oov_mention(const Sentence& s, const Span& span, const VocabPredicate& in_vocab) {
  for (std::size_t i = span.start; i < span.end && i < s.size(); ++i) {
    if (!in_vocab(s.tokens[i].text)) return true;
  }
  return false;
}

std::size_t ErrorCounts::cases() const {
  std::size_t n = 0;
  for (std::size_t c : total) n += c;
  return n;
}

EvaluationReport evaluate(const TaggedCorpus& gold, const TagSequences& pred,
                          const VocabPredicate& in_vocab, std::string config_hash) {
  TagSequences gold_tags;
  gold_tags.reserve(gold.size());
  for (const auto& ex : gold) gold_tags.push_back(ex.tags);
  check_aligned(gold_tags, pred);

  EvaluationReport r;
  r.sentences = gold.size();
  r.micro = micro_prf(gold_tags, pred);
  r.per_tag = per_tag_f1(gold_tags, pred);
  r.config_hash = std::move(config_hash);
  r.corpus_fingerprint = fingerprint(gold);

  std::vector<MentionOutcome> outcomes;
  std::size_t exact = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    r.tokens += gold[s].sentence.size();
    const auto g = bio_decode(gold_tags[s]);
    const auto p = bio_decode(pred[s]);
    r.repaired_tags += p.warnings.size();
    r.gold_mentions += g.mentions.size();
    r.predicted_mentions += p.mentions.size();
    for (const auto& pair : categorize_prediction(g.mentions, p.mentions)) {
      const auto cat = static_cast<std::size_t>(pair.category);
      const ResourceType t = type_of(pair.gold ? *pair.gold : *pair.pred);
      ++r.errors.by_type[static_cast<std::size_t>(t)][cat];
      ++r.errors.total[cat];
      if (pair.category == ErrorCategory::ExactlyCorrect) ++exact;
      if (pair.gold && in_vocab) {
        outcomes.push_back({is_oov_mention(gold[s].sentence, pair.gold->span, in_vocab),
                            pair.category == ErrorCategory::ExactlyCorrect});
      }
    }
  }
  r.mention_level.precision =
      r.predicted_mentions ? static_cast<double>(exact) / static_cast<double>(r.predicted_mentions) : 0.0;
  r.mention_level.recall =
      r.gold_mentions ? static_cast<double>(exact) / static_cast<double>(r.gold_mentions) : 0.0;
  const double ps = r.mention_level.precision + r.mention_level.recall;
  r.mention_level.f1 = ps > 0 ? 2 * r.mention_level.precision * r.mention_level.recall / ps : 0.0;
  if (in_vocab) r.oov = oov_report(outcomes);
  return r;
}

std::string to_text(const EvaluationReport& r) {
  std::ostringstream out;
  out << "sentences " << r.sentences << "  tokens " << r.tokens << "  gold mentions "
      << r.gold_mentions << "  predicted mentions " << r.predicted_mentions << "\n";
  out << "config " << r.config_hash << "  corpus " << r.corpus_fingerprint << "\n\n";
  out << "token micro  P " << fixed(100 * r.micro.precision, 2) << "  R "
      << fixed(100 * r.micro.recall, 2) << "  F1 " << fixed(100 * r.micro.f1, 2) << "\n";
  out << "mention      P " << fixed(100 * r.mention_level.precision, 2) << "  R "
      << fixed(100 * r.mention_level.recall, 2) << "  F1 " << fixed(100 * r.mention_level.f1, 2)
      << "\n\n";
  out << "tag                 P       R       F1      support\n";
  for (const auto& row : r.per_tag) {
    std::string name(to_string(row.tag));
    name.resize(16, ' ');
    out << name << "  " << fixed(row.prf.precision) << "  " << fixed(row.prf.recall) << "  "
        << fixed(row.prf.f1) << "  " << row.support << (row.no_support ? "  (no support)" : "")
        << "\n";
  }
  out << "\n" << std::left << std::setw(22) << "errors";
  for (ResourceType t : kResourceTypes) out << std::right << std::setw(13) << to_string(t);
  out << std::setw(8) << "Total" << "\n";
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    out << std::left << std::setw(22) << to_string(static_cast<ErrorCategory>(c)) << std::right;
    for (ResourceType t : kResourceTypes) out << std::setw(13) << r.errors.by_type[static_cast<std::size_t>(t)][c];
    out << std::setw(8) << r.errors.total[c] << "\n";
  }
  if (r.oov) {
    out << "\nmentions     correct / total / ratio\n";
    auto row = [&out](const char* name, const OovRow& o) {
      out << name << o.correct << " / " << o.total << " / " << fixed(100 * o.ratio(), 2) << "%\n";
    };
    row("all          ", r.oov->all);
    row("non-OOV      ", r.oov->non_oov);
    row("OOV          ", r.oov->oov);
  }
  return out.str();
}

nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["sentences"] = r.sentences;
  j["tokens"] = r.tokens;
  j["gold_mentions"] = r.gold_mentions;
  j["predicted_mentions"] = r.predicted_mentions;
  j["repaired_tags"] = r.repaired_tags;
  j["config_hash"] = r.config_hash;
  j["corpus_fingerprint"] = r.corpus_fingerprint;
  j["micro"] = prf_json(r.micro);
  j["mention_level"] = prf_json(r.mention_level);
  nlohmann::json tags = nlohmann::json::array();
  for (const auto& row : r.per_tag) {
    auto t = prf_json(row.prf);
    t["tag"] = to_string(row.tag);
    t["support"] = row.support;
    t["no_support"] = row.no_support;
    tags.push_back(std::move(t));
  }
  j["per_tag"] = std::move(tags);
  auto cats = [](const std::array<std::size_t, kNumCategories>& counts) {
    nlohmann::json c;
    for (std::size_t i = 0; i < kNumCategories; ++i) {
      c[std::string(to_string(static_cast<ErrorCategory>(i)))] = counts[i];
    }
    return c;
  };
  for (ResourceType t : kResourceTypes) {
    j["errors"][std::string(to_string(t))] = cats(r.errors.by_type[static_cast<std::size_t>(t)]);
  }
  j["errors"]["Total"] = cats(r.errors.total);
  if (r.oov) {
    auto row = [](const OovRow& o) {
      return nlohmann::json{{"correct", o.correct}, {"total", o.total}, {"ratio", o.ratio()}};
    };
    j["oov"] = {{"all", row(r.oov->all)}, {"non_oov", row(r.oov->non_oov)}, {"oov", row(r.oov->oov)}};
  }
  return j;
}

std::string hash_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fingerprint(const TaggedCorpus& corpus) {
  std::ostringstream out;
  write_tagged_corpus(out, corpus);
  return hash_hex(out.str());
}

}  // namespace forumtag::eval
