#include "forumtag/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forumtag/corpus_io.hpp"
#include "forumtag/error.hpp"
#include "forumtag/numerics/rng.hpp"

namespace forumtag::synth {
namespace {

using Words = std::vector<std::string>;

struct Carrier {
  const char* text;  // "{}" marks the slot
  const char* end;
};

constexpr std::array<Carrier, 12> kCarriers = {{
    {"i do not understand {}", "."},
    {"can someone explain {}", "?"},
    {"i have a question about {}", "."},
    {"i am stuck on {}", "."},
    {"is there a mistake in {}", "?"},
    {"where can i find {}", "?"},
    {"i could not open {}", "."},
    {"{} is not loading for me", "."},
    {"{} was really helpful", "."},
    {"has anyone finished {}", "?"},
    {"the deadline for {} is unclear", "."},
    {"i just finished {}", "."},
}};

constexpr std::array<const char*, 3> kConnectors = {"and", "and also", "but"};

constexpr std::array<const char*, 12> kFillers = {
    "thanks for the help .",
    "hello everyone .",
    "i am new to this course .",
    "good luck to everyone .",
    "i agree with the previous post .",
    "that makes sense now , thanks .",
    "can anyone help me ?",
    "i think my answer is right .",
    "this course is great so far .",
    "any ideas would be appreciated .",
    "i will try again tomorrow .",
    "the forum is very helpful .",
};

// {n}: small number, {k}: week number.
const std::map<ResourceTypeFine, std::vector<const char*>>& plain_templates() {
  static const std::map<ResourceTypeFine, std::vector<const char*>> t = {
      {ResourceTypeFine::Assessments,
       {"quiz {n}", "the week {k} quiz", "assignment {n}", "homework {n}", "programming assignment {n}",
        "problem set {n}", "quiz {n} of week {k}"}},
      {ResourceTypeFine::Exams,
       {"the final exam", "the midterm exam", "exam {n}", "the final test", "the week {k} exam",
        "the practice exam"}},
      {ResourceTypeFine::Videos,
       {"lecture video {n}", "the week {k} lecture", "video {n}", "the lecture on week {k}", "the intro video"}},
      {ResourceTypeFine::Readings, {"the week {k} reading", "chapter {n} of the textbook", "the required reading"}},
      {ResourceTypeFine::Slides, {"the lecture slides", "the slides for week {k}", "slide deck {n}"}},
      {ResourceTypeFine::Transcripts,
       {"the lecture transcript", "the transcript of video {n}", "the subtitles for lecture {n}"}},
      {ResourceTypeFine::AdditionalResources,
       {"the course wiki", "the data files", "the supplementary notes", "the tutorial page"}},
  };
  return t;
}

const std::map<ResourceType, std::vector<const char*>>& anaphor_templates() {
  static const std::map<ResourceType, std::vector<const char*>> t = {
      {ResourceType::Assessments, {"this quiz", "that assignment", "this homework", "that problem set"}},
      {ResourceType::Exams, {"this exam", "that test", "that midterm"}},
      {ResourceType::Videos, {"this video", "that lecture", "this lecture"}},
      {ResourceType::Coursewares, {"these slides", "that reading", "this transcript", "that chapter"}},
  };
  return t;
}

constexpr std::array<const char*, 14> kNameParts = {"house", "data", "notes", "stats", "intro", "review", "lab",
                                                     "sample", "final", "draft", "solutions", "summary", "model",
                                                     "grades"};
constexpr std::array<const char*, 12> kSyllables = {"ka", "lo", "mir", "ten", "zu", "bar",
                                                    "vel", "os", "rin", "dak", "pim", "tor"};

constexpr std::size_t kSmallNumbers = 12;
constexpr std::size_t kWeeks = 10;

Words split_words(std::string_view text) {
  Words out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

ResourceTypeFine representative(ResourceType t) {
  switch (t) {
    case ResourceType::Assessments:
      return ResourceTypeFine::Assessments;
    case ResourceType::Exams:
      return ResourceTypeFine::Exams;
    case ResourceType::Videos:
      return ResourceTypeFine::Videos;
    case ResourceType::Coursewares:
      return ResourceTypeFine::Readings;
  }
  return ResourceTypeFine::Readings;
}

constexpr std::array<ResourceTypeFine, 4> kCoursewareFine = {ResourceTypeFine::Readings, ResourceTypeFine::Slides,
                                                             ResourceTypeFine::Transcripts,
                                                             ResourceTypeFine::AdditionalResources};

struct Slot {
  Words words;
  std::optional<ResourceTypeFine> type;  // set for gold mentions
  MentionKind kind = MentionKind::Plain;
  bool anaphor = false;
  bool anaphor_valid = false;
  ResourceType anaphor_type = ResourceType::Videos;
};

struct Planned {
  Words tokens;
  struct Placed {
    std::size_t start = 0, end = 0;
    Slot slot;
  };
  std::vector<Placed> slots;

  bool has_gold() const {
    return std::any_of(slots.begin(), slots.end(), [](const Placed& p) { return p.slot.type.has_value(); });
  }
  // Coarse types of non-anaphoric gold mentions; plain_only restricts to plain.
  bool mentions(ResourceType t, bool plain_only) const {
    for (const auto& p : slots) {
      if (!p.slot.type || p.slot.kind == MentionKind::Anaphoric) continue;
      if (plain_only && p.slot.kind != MentionKind::Plain) continue;
      if (collapse_type(*p.slot.type) == t) return true;
    }
    return false;
  }
};

class Generator {
 public:
  explicit Generator(const SynthSpec& spec) : spec_(spec), rng_(spec.seed) {}

  SynthCorpus run();

 private:
  ResourceType random_type() { return kResourceTypes[rng_.below(kResourceTypes.size())]; }
  ResourceType random_type_except(ResourceType t) {
    for (;;) {
      const ResourceType r = random_type();
      if (r != t) return r;
    }
  }
  ResourceTypeFine fine_of(ResourceType t) {
    if (t == ResourceType::Coursewares) return kCoursewareFine[rng_.below(kCoursewareFine.size())];
    return representative(t);
  }
  std::string number(std::size_t n) { return std::to_string(1 + rng_.below(n)); }

  Words fill(std::string_view pattern) {
    Words out;
    for (auto& w : split_words(pattern)) {
      if (w == "{n}") {
        out.push_back(number(kSmallNumbers));
      } else if (w == "{k}") {
        out.push_back(number(kWeeks));
      } else {
        out.push_back(w);
      }
    }
    return out;
  }

  Slot plain(ResourceType t) {
    Slot s;
    s.type = fine_of(t);
    const auto& options = plain_templates().at(*s.type);
    s.words = fill(options[rng_.below(options.size())]);
    s.kind = MentionKind::Plain;
    return s;
  }

  std::string file_name() {
    std::string name = kNameParts[rng_.below(kNameParts.size())];
    name += "_";
    name += kNameParts[rng_.below(kNameParts.size())];
    if (rng_.bernoulli(0.5)) name += "_g" + number(9);
    else name += number(99);
    return name;
  }

  std::string oov_token(ResourceTypeFine t) {
    const std::string n = number(999);
    switch (t) {
      case ResourceTypeFine::Assessments: {
        static constexpr std::array<const char*, 3> p = {"hw", "pa", "ps"};
        return p[rng_.below(p.size())] + n;
      }
      case ResourceTypeFine::Exams: {
        static constexpr std::array<const char*, 3> p = {"Q", "mt", "fe"};
        return p[rng_.below(p.size())] + n;
      }
      case ResourceTypeFine::Videos: {
        static constexpr std::array<const char*, 3> p = {"lec", "v", "clip"};
        static constexpr std::array<const char*, 3> e = {".mp4", ".mp4", ".mov"};
        const std::size_t i = rng_.below(p.size());
        return p[i] + n + e[i];
      }
      case ResourceTypeFine::Readings:
        return file_name() + ".pdf";
      case ResourceTypeFine::Slides:
        return file_name() + ".pptx";
      case ResourceTypeFine::Transcripts:
        return file_name() + ".srt";
      case ResourceTypeFine::AdditionalResources:
        return file_name() + (rng_.bernoulli(0.5) ? ".zip" : ".csv");
    }
    return "x";
  }

  Slot oov(ResourceType t) {
    Slot s;
    s.type = fine_of(t);
    s.words = {oov_token(*s.type)};
    s.kind = MentionKind::Oov;
    return s;
  }

  Slot distractor() {
    std::string w;
    const std::size_t n = 2 + rng_.below(2);
    for (std::size_t i = 0; i < n; ++i) w += kSyllables[rng_.below(kSyllables.size())];
    Slot s;
    s.words = {w};
    return s;
  }

  Slot anaphor(ResourceType t, bool valid) {
    Slot s;
    const auto& options = anaphor_templates().at(t);
    s.words = split_words(options[rng_.below(options.size())]);
    s.kind = MentionKind::Anaphoric;
    s.anaphor = true;
    s.anaphor_valid = valid;
    s.anaphor_type = t;
    if (valid) s.type = representative(t);
    return s;
  }

  // The kind furthest behind its target share when one lags by more than a
  // slot, otherwise a draw by target share.
  MentionKind choose_kind(bool allow_anaphoric) {
    const double total = static_cast<double>(count_plain_ + count_oov_ + count_anaphoric_ + 1);
    const double oov_t = spec_.oov_fraction;
    const double plain_t = std::max(0.0, 1.0 - oov_t - spec_.anaphoric_fraction);
    const double ana_t = allow_anaphoric ? spec_.anaphoric_fraction : 0.0;
    const std::array<std::pair<MentionKind, double>, 3> kinds = {
        {{MentionKind::Plain, plain_t * total - static_cast<double>(count_plain_)},
         {MentionKind::Oov, oov_t * total - static_cast<double>(count_oov_)},
         {MentionKind::Anaphoric, allow_anaphoric ? ana_t * total - static_cast<double>(count_anaphoric_) : -1e300}}};
    const auto* best = &kinds[0];
    for (const auto& k : kinds) {
      if (k.second > best->second) best = &k;
    }
    if (best->second > 1.0) return best->first;
    const double u = rng_.uniform() * (plain_t + oov_t + ana_t);
    if (u < plain_t) return MentionKind::Plain;
    if (u < plain_t + oov_t) return MentionKind::Oov;
    return MentionKind::Anaphoric;
  }

  void count(MentionKind k) {
    switch (k) {
      case MentionKind::Plain:
        ++count_plain_;
        break;
      case MentionKind::Oov:
        ++count_oov_;
        break;
      case MentionKind::Anaphoric:
        ++count_anaphoric_;
        break;
    }
  }

  Slot mention_of(MentionKind k, ResourceType t) {
    count(k);
    return k == MentionKind::Oov ? oov(t) : plain(t);
  }

  Planned sentence(std::vector<Slot> slots) {
    Planned p;
    std::string end = ".";
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (i > 0) {
        for (auto& w : split_words(kConnectors[rng_.below(kConnectors.size())])) p.tokens.push_back(w);
      }
      const Carrier& c = kCarriers[rng_.below(kCarriers.size())];
      for (auto& w : split_words(c.text)) {
        if (w != "{}") {
          p.tokens.push_back(w);
          continue;
        }
        Planned::Placed placed;
        placed.start = p.tokens.size();
        for (auto& sw : slots[i].words) p.tokens.push_back(sw);
        placed.end = p.tokens.size();
        placed.slot = std::move(slots[i]);
        p.slots.push_back(std::move(placed));
      }
      end = c.end;
    }
    p.tokens.push_back(end);
    return p;
  }

  Planned filler() {
    Planned p;
    p.tokens = split_words(kFillers[rng_.below(kFillers.size())]);
    ++fillers_;
    return p;
  }

  // Distance-bounded look-back over the sentences planned so far.
  bool window_has(const std::vector<Planned>& seq, ResourceType t, bool plain_only) const {
    const std::size_t n = seq.size();
    for (std::size_t d = 1; d <= spec_.window && d <= n; ++d) {
      if (seq[n - d].mentions(t, plain_only)) return true;
    }
    return false;
  }

  // Appends a co-mention clause paired with `primary`, in random order.
  Planned with_comention(Slot primary, ResourceType avoid) {
    const MentionKind k = choose_kind(false);
    Slot co = mention_of(k, random_type_except(avoid));
    std::vector<Slot> slots;
    if (rng_.bernoulli(0.5)) {
      slots.push_back(std::move(primary));
      slots.push_back(std::move(co));
    } else {
      slots.push_back(std::move(co));
      slots.push_back(std::move(primary));
    }
    return sentence(std::move(slots));
  }

  void add_mention_sentence(std::vector<Planned>& seq);
  void add_anaphor(std::vector<Planned>& seq);

  const SynthSpec& spec_;
  num::Rng rng_;
  std::size_t count_plain_ = 0, count_oov_ = 0, count_anaphoric_ = 0;
  std::size_t distractors_ = 0, fillers_ = 0, inserted_antecedents_ = 0;
};

void Generator::add_anaphor(std::vector<Planned>& seq) {
  const bool valid = rng_.bernoulli(spec_.valid_anaphor_rate);
  ResourceType t = random_type();
  if (valid) {
    if (!window_has(seq, t, true)) {
      count(MentionKind::Plain);
      seq.push_back(sentence({plain(t)}));
      ++inserted_antecedents_;
      const std::size_t gap = rng_.below(std::min<std::size_t>(spec_.window, 3));
      for (std::size_t i = 0; i < gap; ++i) seq.push_back(filler());
    }
  } else {
    // Pick the type that needs the fewest fillers to leave the window.
    std::vector<ResourceType> absent;
    for (ResourceType r : kResourceTypes) {
      if (!window_has(seq, r, false)) absent.push_back(r);
    }
    if (absent.empty()) {
      std::size_t best = spec_.window + 1;
      for (ResourceType r : kResourceTypes) {
        std::size_t d = 1;
        while (d <= seq.size() && !seq[seq.size() - d].mentions(r, false)) ++d;
        const std::size_t need = spec_.window + 1 - d;
        if (need < best) {
          best = need;
          t = r;
        }
      }
      for (std::size_t i = 0; i < best; ++i) seq.push_back(filler());
    } else {
      t = absent[rng_.below(absent.size())];
    }
  }
  count(MentionKind::Anaphoric);
  seq.push_back(with_comention(anaphor(t, valid), t));
}

void Generator::add_mention_sentence(std::vector<Planned>& seq) {
  const ResourceType t = random_type();
  if (static_cast<double>(distractors_) + 1.0 <= spec_.distractor_ratio * static_cast<double>(count_oov_) &&
      rng_.bernoulli(0.5)) {
    ++distractors_;
    seq.push_back(with_comention(distractor(), t));
    return;
  }
  const MentionKind k = choose_kind(true);
  if (k == MentionKind::Anaphoric) {
    add_anaphor(seq);
    return;
  }
  Slot primary = mention_of(k, t);
  if (rng_.bernoulli(spec_.second_clause_rate)) {
    seq.push_back(with_comention(std::move(primary), t));
  } else {
    seq.push_back(sentence({std::move(primary)}));
  }
}

SynthCorpus Generator::run() {
  SynthCorpus out;
  std::size_t labeled = 0;
  const bool by_target = spec_.target_sentences > 0;
  for (std::size_t th = 0; by_target ? labeled < spec_.target_sentences : th < spec_.threads; ++th) {
    const std::size_t n =
        spec_.min_sentences + rng_.below(spec_.max_sentences - spec_.min_sentences + 1);
    std::vector<Planned> seq;
    while (seq.size() < n) {
      if (rng_.bernoulli(spec_.mention_rate)) {
        add_mention_sentence(seq);
      } else {
        seq.push_back(filler());
      }
    }
    if (by_target) {
      std::size_t keep = 0;
      for (; keep < seq.size() && labeled < spec_.target_sentences; ++keep) {
        if (seq[keep].has_gold()) ++labeled;
      }
      seq.resize(keep);
    } else {
      for (const auto& p : seq) labeled += p.has_gold() ? 1 : 0;
    }

    char id[32];
    std::snprintf(id, sizeof id, "t%05zu", th);
    Thread thread;
    thread.thread_id = id;
    thread.course_id = "synth-" + std::to_string(th % 7);
    for (std::size_t i = 0; i < seq.size();) {
      const std::size_t len = i == 0 ? 1 : 1 + rng_.below(spec_.max_post_sentences);
      std::vector<std::string> post;
      for (std::size_t j = i; j < std::min(seq.size(), i + len); ++j) {
        std::string text;
        for (const auto& w : seq[j].tokens) text += (text.empty() ? "" : " ") + w;
        post.push_back(std::move(text));
      }
      thread.posts.push_back(std::move(post));
      i += len;
    }

    for (std::size_t s = 0; s < seq.size(); ++s) {
      for (const auto& placed : seq[s].slots) {
        const Span span{s, placed.start, placed.end};
        if (placed.slot.anaphor) {
          AnaphorRecord rec{thread.thread_id, span, placed.slot.anaphor_type, placed.slot.anaphor_valid, {}};
          for (std::size_t d = 1; d <= s; ++d) {
            if (seq[s - d].mentions(rec.type, true)) {
              rec.antecedent = s - d;
              break;
            }
          }
          out.anaphors.push_back(rec);
        }
        if (!placed.slot.type) continue;
        AnnotatedMention m{thread.thread_id, span, *placed.slot.type, 1, false};
        out.gold.push_back({m, placed.slot.kind});
        out.g1.push_back(m);
      }
    }
    out.threads.push_back(std::move(thread));
  }

  // Second group: perturbed copy of the first.
  std::map<std::string, std::vector<Sentence>> sentences;
  for (const auto& t : out.threads) sentences.emplace(t.thread_id, unfold_thread(t));
  for (const auto& m : out.g1) {
    AnnotatedMention p = m;
    p.group = 2;
    if (rng_.bernoulli(spec_.drop_rate)) continue;
    if (rng_.bernoulli(spec_.type_flip_rate)) {
      p.type = fine_of(random_type_except(coarse_type(m.type)));
    } else if (rng_.bernoulli(spec_.span_shift_rate)) {
      const std::size_t len = sentences.at(m.thread_id)[m.span.sentence_index].size();
      if (m.span.length() > 1) {
        if (rng_.bernoulli(0.5)) ++p.span.start;
        else --p.span.end;
      } else if (m.span.end + 1 < len) {
        ++p.span.end;
      }
      // Keep the shifted span clear of neighbouring mentions.
      for (const auto& o : out.g1) {
        if (o.thread_id == m.thread_id && !(o.span == m.span) && overlap(o.span, p.span) > 0) {
          p.span = m.span;
          break;
        }
      }
    }
    out.g2.push_back(std::move(p));
  }

  // Lexicon vectors: one cluster per resource type plus a general cluster.
  std::set<std::string> lexicon;
  auto add_all = [&lexicon](std::string_view text) {
    for (auto& w : split_words(text)) {
      if (w != "{}" && w != "{n}" && w != "{k}") lexicon.insert(w);
    }
  };
  for (const auto& c : kCarriers) {
    add_all(c.text);
    add_all(c.end);
  }
  for (const char* c : kConnectors) add_all(c);
  for (const char* f : kFillers) add_all(f);
  for (const auto& [_, v] : plain_templates()) {
    for (const char* p : v) add_all(p);
  }
  for (const auto& [_, v] : anaphor_templates()) {
    for (const char* p : v) add_all(p);
  }
  for (std::size_t i = 1; i <= std::max(kSmallNumbers, kWeeks); ++i) lexicon.insert(std::to_string(i));

  std::map<std::string, std::size_t> cluster_of;
  for (const auto& [fine, v] : plain_templates()) {
    for (const char* p : v) {
      for (auto& w : split_words(p)) {
        if (w[0] != '{' && w != "the" && w != "of" && w != "on" && w != "for") {
          cluster_of.emplace(w, 1 + static_cast<std::size_t>(collapse_type(fine)));
        }
      }
    }
  }
  const std::size_t dim = spec_.vector_dim;
  num::Rng vrng(spec_.seed ^ 0x5eed5eedULL);
  std::vector<std::vector<double>> centers(5, std::vector<double>(dim));
  for (auto& c : centers) {
    for (double& x : c) x = vrng.normal() * 0.5;
  }
  out.vectors.dim = dim;
  for (const auto& w : lexicon) {
    auto it = cluster_of.find(w);
    const auto& c = centers[it == cluster_of.end() ? 0 : it->second];
    out.vectors.index.emplace(w, out.vectors.words.size());
    out.vectors.words.push_back(w);
    for (std::size_t d = 0; d < dim; ++d) {
      // Round through text precision so files and memory agree.
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.5f", c[d] + vrng.normal() * 0.2);
      out.vectors.values.push_back(std::stof(buf));
    }
  }

  out.counts = {count_plain_, count_oov_, count_anaphoric_, distractors_, fillers_, inserted_antecedents_};
  return out;
}

}  // namespace

std::string_view to_string(MentionKind k) {
  switch (k) {
    case MentionKind::Plain:
      return "plain";
    case MentionKind::Oov:
      return "oov";
    case MentionKind::Anaphoric:
      return "anaphoric";
  }
  return "?";
}

void SynthSpec::validate() const {
  for (double r : {mention_rate, second_clause_rate, oov_fraction, anaphoric_fraction, valid_anaphor_rate,
                   drop_rate, type_flip_rate, span_shift_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("synth: rates must lie in [0, 1]");
  }
  if (oov_fraction + anaphoric_fraction > 1.0) {
    throw ValidationError("synth: oov_fraction + anaphoric_fraction exceeds 1");
  }
  if (!(distractor_ratio >= 0.0)) throw ValidationError("synth: distractor_ratio must be >= 0");
  if (min_sentences == 0 || min_sentences > max_sentences) {
    throw ValidationError("synth: need 0 < min_sentences <= max_sentences");
  }
  if (max_post_sentences == 0 || window == 0 || vector_dim == 0) {
    throw ValidationError("synth: max_post_sentences, window and vector_dim must be positive");
  }
  if (target_sentences == 0 && threads == 0) throw ValidationError("synth: no threads requested");
  if (target_sentences > 0 && mention_rate == 0.0) {
    throw ValidationError("synth: target_sentences needs a positive mention_rate");
  }
}

nlohmann::json to_json(const SynthSpec& s) {
  return {{"seed", s.seed},
          {"threads", s.threads},
          {"target_sentences", s.target_sentences},
          {"min_sentences", s.min_sentences},
          {"max_sentences", s.max_sentences},
          {"max_post_sentences", s.max_post_sentences},
          {"mention_rate", s.mention_rate},
          {"second_clause_rate", s.second_clause_rate},
          {"oov_fraction", s.oov_fraction},
          {"anaphoric_fraction", s.anaphoric_fraction},
          {"valid_anaphor_rate", s.valid_anaphor_rate},
          {"distractor_ratio", s.distractor_ratio},
          {"window", s.window},
          {"drop_rate", s.drop_rate},
          {"type_flip_rate", s.type_flip_rate},
          {"span_shift_rate", s.span_shift_rate},
          {"vector_dim", s.vector_dim}};
}

SynthSpec spec_from_json(const nlohmann::json& j, SynthSpec base) {
  if (!j.is_object()) throw ValidationError("synth spec: expected a JSON object");
  const nlohmann::json known = to_json(base);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ValidationError("synth spec: unknown key '" + key + "'");
  }
  auto get = [&j](const char* key, auto& field) {
    if (auto it = j.find(key); it != j.end()) {
      try {
        it->get_to(field);
      } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string("synth spec: bad value for '") + key + "'");
      }
    }
  };
  get("seed", base.seed);
  get("threads", base.threads);
  get("target_sentences", base.target_sentences);
  get("min_sentences", base.min_sentences);
  get("max_sentences", base.max_sentences);
  get("max_post_sentences", base.max_post_sentences);
  get("mention_rate", base.mention_rate);
  get("second_clause_rate", base.second_clause_rate);
  get("oov_fraction", base.oov_fraction);
  get("anaphoric_fraction", base.anaphoric_fraction);
  get("valid_anaphor_rate", base.valid_anaphor_rate);
  get("distractor_ratio", base.distractor_ratio);
  get("window", base.window);
  get("drop_rate", base.drop_rate);
  get("type_flip_rate", base.type_flip_rate);
  get("span_shift_rate", base.span_shift_rate);
  get("vector_dim", base.vector_dim);
  base.validate();
  return base;
}

SynthCorpus generate(const SynthSpec& spec) {
  spec.validate();
  SynthCorpus out = Generator(spec).run();
  // Every span must index the tokens the pipeline will see.
  std::map<std::string, std::vector<Sentence>> sentences;
  for (const auto& t : out.threads) sentences.emplace(t.thread_id, unfold_thread(t));
  for (const auto& g : out.gold) {
    const auto& ss = sentences.at(g.mention.thread_id);
    if (g.mention.span.sentence_index >= ss.size() ||
        g.mention.span.end > ss[g.mention.span.sentence_index].size()) {
      throw Error("synth: generated span does not survive tokenization");
    }
  }
  return out;
}

nlohmann::json SynthCorpus::stats() const {
  std::size_t sentence_count = 0;
  for (const auto& t : threads) sentence_count += unfold_thread(t).size();
  std::set<std::pair<std::string, std::size_t>> labeled;
  std::map<std::string, std::size_t> by_kind;
  for (const auto& g : gold) {
    labeled.emplace(g.mention.thread_id, g.mention.span.sentence_index);
    ++by_kind[std::string(to_string(g.kind))];
  }
  std::size_t valid = 0;
  for (const auto& a : anaphors) valid += a.valid ? 1 : 0;
  const double slots = static_cast<double>(counts.plain + counts.oov + counts.anaphoric);
  nlohmann::json j;
  j["threads"] = threads.size();
  j["sentences"] = sentence_count;
  j["labeled_sentences"] = labeled.size();
  j["gold_mentions"] = gold.size();
  j["gold_by_kind"] = by_kind;
  j["g2_mentions"] = g2.size();
  j["anaphors"] = {{"valid", valid}, {"invalid", anaphors.size() - valid}};
  j["slots"] = {{"plain", counts.plain},
                {"oov", counts.oov},
                {"anaphoric", counts.anaphoric},
                {"distractors", counts.distractors},
                {"fillers", counts.fillers},
                {"inserted_antecedents", counts.inserted_antecedents}};
  j["oov_fraction"] = slots > 0 ? static_cast<double>(counts.oov) / slots : 0.0;
  j["anaphoric_fraction"] = slots > 0 ? static_cast<double>(counts.anaphoric) / slots : 0.0;
  j["vector_words"] = vectors.words.size();
  return j;
}

void write_gold(std::ostream& out, const std::vector<GoldMention>& gold) {
  for (const auto& g : gold) {
    const auto& m = g.mention;
    out << m.thread_id << '\t' << m.span.sentence_index << '\t' << m.span.start << '\t' << m.span.end << '\t'
        << to_string(m.type) << '\t' << to_string(g.kind) << '\n';
  }
}

std::vector<GoldMention> read_gold(std::istream& in, const std::string& source) {
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::istringstream standoff(text);
  auto mentions = read_standoff(standoff, 1, source);
  std::vector<GoldMention> out;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0, k = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.rfind('\t');
    const std::string kind = line.substr(tab + 1);
    GoldMention g{mentions.at(k++), MentionKind::Plain};
    if (kind == "oov") {
      g.kind = MentionKind::Oov;
    } else if (kind == "anaphoric") {
      g.kind = MentionKind::Anaphoric;
    } else if (kind != "plain") {
      throw ParseError(source, lineno, "unknown mention kind '" + kind + "'");
    }
    out.push_back(std::move(g));
  }
  return out;
}

void write_vectors(std::ostream& out, const enc::PretrainedVectors& v) {
  char buf[32];
  for (std::size_t i = 0; i < v.words.size(); ++i) {
    out << v.words[i];
    for (float x : v.vector(i)) {
      std::snprintf(buf, sizeof buf, " %.5f", static_cast<double>(x));
      out << buf;
    }
    out << '\n';
  }
}

void write_corpus(const std::string& dir, const SynthCorpus& corpus) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  auto open = [&dir](const char* name) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw IoError("cannot write " + (fs::path(dir) / name).string());
    return f;
  };
  {
    auto f = open("threads.jsonl");
    write_threads(f, corpus.threads);
  }
  {
    auto f = open("g1.tsv");
    write_standoff(f, corpus.g1);
  }
  {
    auto f = open("g2.tsv");
    write_standoff(f, corpus.g2);
  }
  {
    auto f = open("gold.tsv");
    write_gold(f, corpus.gold);
  }
  {
    auto f = open("vectors.txt");
    write_vectors(f, corpus.vectors);
  }
  {
    auto f = open("stats.json");
    f << corpus.stats().dump(2) << '\n';
  }
}

std::array<KindScore, 3> kind_breakdown(const TaggedCorpus& corpus, const eval::TagSequences& pred,
                                        std::span<const GoldMention> gold) {
  if (pred.size() != corpus.size()) throw ValidationError("kind_breakdown: prediction count mismatch");
  std::map<std::pair<std::string, std::size_t>, std::size_t> index;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    index.emplace(std::make_pair(corpus[i].thread_id, corpus[i].sentence.sentence_index), i);
  }
  std::array<KindScore, 3> out{};
  for (const auto& g : gold) {
    const auto it = index.find({g.mention.thread_id, g.mention.span.sentence_index});
    if (it == index.end()) continue;
    const auto& tags = pred[it->second];
    const Span& span = g.mention.span;
    if (span.end > tags.size()) throw ValidationError("kind_breakdown: span outside sentence");
    KindScore& k = out[static_cast<std::size_t>(g.kind)];
    ++k.mentions;
    bool exact = true;
    for (std::size_t t = span.start; t < span.end; ++t) {
      const Tag want = make_tag(coarse_type(g.mention.type), t == span.start);
      ++k.tokens;
      if (tags[t] == want) {
        ++k.correct_tokens;
      } else {
        exact = false;
      }
    }
    if (span.end < tags.size() && tags[span.end] == make_tag(coarse_type(g.mention.type), false)) exact = false;
    if (exact) ++k.exact;
  }
  return out;
}

nlohmann::json to_json(const std::array<KindScore, 3>& scores) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& k = scores[i];
    j[std::string(to_string(static_cast<MentionKind>(i)))] = {{"mentions", k.mentions},
                                                              {"exact", k.exact},
                                                              {"exact_ratio", k.exact_ratio()},
                                                              {"tokens", k.tokens},
                                                              {"token_recall", k.token_recall()}};
  }
  return j;
}

SynthSpec toy_spec(std::uint64_t seed) {
  SynthSpec s;
  s.seed = seed;
  s.target_sentences = 50;
  s.anaphoric_fraction = 0.0;
  s.oov_fraction = 0.2;
  s.distractor_ratio = 0.0;
  return s;
}

}  // namespace forumtag::synth
