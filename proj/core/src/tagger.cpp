#include "forumtag/tagger.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_set>

#include "forumtag/error.hpp"

namespace forumtag {
namespace {

template <typename T>
num::Tensor<T> bio_mask() {
  return crf::bio_constrained(num::Tensor<T>(num::Shape{kNumTags + 2, kNumTags + 2}));
}

std::vector<std::size_t> tag_ids(const TaggedSentence& ex) {
  if (ex.tags.size() != ex.sentence.size()) {
    throw ValidationError("thread " + ex.thread_id + " sentence " +
                          std::to_string(ex.sentence.sentence_index) + ": " +
                          std::to_string(ex.tags.size()) + " tags for " +
                          std::to_string(ex.sentence.size()) + " tokens");
  }
  std::vector<std::size_t> ids;
  ids.reserve(ex.tags.size());
  for (Tag t : ex.tags) ids.push_back(tag_index(t));
  return ids;
}

void require_tokens(const Sentence& s) {
  if (s.tokens.empty()) throw ValidationError("cannot tag an empty sentence");
}

template <typename T>
TagPrediction viterbi_prediction(const num::Tensor<T>& e, const num::Tensor<T>& a) {
  auto d = crf::viterbi_decode(e, a);
  TagPrediction p;
  for (std::size_t t : d.tags) p.tags.push_back(tag_from_index(t));
  p.score = static_cast<double>(d.score);
  return p;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_digit_word(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); });
}

// Python str.istitle for ASCII: cased runs start upper, continue lower.
bool is_title(std::string_view w) {
  bool cased = false, prev_cased = false;
  for (unsigned char c : w) {
    if (std::isupper(c)) {
      if (prev_cased) return false;
      prev_cased = cased = true;
    } else if (std::islower(c)) {
      if (!prev_cased) return false;
      prev_cased = cased = true;
    } else {
      prev_cased = false;
    }
  }
  return cased;
}

bool is_upper(std::string_view w) {
  bool cased = false;
  for (unsigned char c : w) {
    if (std::islower(c)) return false;
    if (std::isupper(c)) cased = true;
  }
  return cased;
}

std::string head(std::string_view w, std::size_t n) { return std::string(w.substr(0, n)); }
std::string tail(std::string_view w, std::size_t n) {
  return std::string(w.size() <= n ? w : w.substr(w.size() - n));
}

const char* flag(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Blstm:
      return "blstm";
    case Variant::FeatureCrf:
      return "crf";
    case Variant::BlstmCrf:
      return "blstm-crf";
    case Variant::BlstmCrfCe:
      return "blstm-crf-ce";
    case Variant::BlstmCrfCeCa:
      return "blstm-crf-ce-ca";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : kVariants) {
    if (to_string(v) == name) return v;
  }
  return std::nullopt;
}

TaggerConfig TaggerConfig::for_variant(Variant v) {
  TaggerConfig c;
  c.feature_model = v == Variant::FeatureCrf;
  c.use_crf = v != Variant::Blstm;
  c.use_char_encoder = v == Variant::BlstmCrfCe || v == Variant::BlstmCrfCeCa;
  c.use_context_attention = v == Variant::BlstmCrfCeCa;
  return c;
}

Variant TaggerConfig::variant() const {
  if (feature_model) return Variant::FeatureCrf;
  if (!use_crf) return Variant::Blstm;
  if (use_context_attention) return Variant::BlstmCrfCeCa;
  return use_char_encoder ? Variant::BlstmCrfCe : Variant::BlstmCrf;
}

void TaggerConfig::validate() const {
  if (use_context_attention && !use_crf) {
    throw ValidationError("config: context attention requires the CRF layer");
  }
  if (use_context_attention && !use_char_encoder) {
    throw ValidationError("config: context attention requires the character encoder");
  }
  if (use_char_encoder && !use_crf) {
    throw ValidationError("config: the character encoder requires the CRF layer");
  }
  if (feature_model && (!use_crf || use_char_encoder || use_context_attention)) {
    throw ValidationError("config: the feature CRF takes no neural switches");
  }
  for (std::size_t d : {word_dim, char_dim, hidden, context_hidden, char_hidden, attention_dim,
                        batch_size, min_word_count}) {
    if (d == 0) throw ValidationError("config: sizes must be positive");
  }
  if (!(learning_rate >= 0.0)) throw ValidationError("config: learning rate must be >= 0");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ValidationError("config: validation_fraction must be in [0, 1)");
  }
  if (!(l2 >= 0.0)) throw ValidationError("config: l2 must be >= 0");
}

nlohmann::json to_json(const TaggerConfig& c) {
  return {{"variant", to_string(c.variant())},
          {"feature_model", c.feature_model},
          {"use_crf", c.use_crf},
          {"use_char_encoder", c.use_char_encoder},
          {"use_context_attention", c.use_context_attention},
          {"word_dim", c.word_dim},
          {"char_dim", c.char_dim},
          {"hidden", c.hidden},
          {"context_hidden", c.context_hidden},
          {"char_hidden", c.char_hidden},
          {"attention_dim", c.attention_dim},
          {"context_cap", c.context_cap},
          {"min_word_count", c.min_word_count},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"validation_fraction", c.validation_fraction},
          {"clip_norm", c.clip_norm},
          {"target_f1", c.target_f1},
          {"seed", c.seed},
          {"softmax_emissions", c.softmax_emissions},
          {"bio_constraints", c.bio_constraints},
          {"freeze_embeddings", c.freeze_embeddings},
          {"l2", c.l2},
          {"feature_min_count", c.feature_min_count}};
}

TaggerConfig config_from_json(const nlohmann::json& j, TaggerConfig base) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  if (auto it = j.find("variant"); it != j.end()) {
    const auto name = it->get<std::string>();
    auto v = parse_variant(name);
    if (!v) throw ValidationError("config: unknown variant '" + name + "'");
    const TaggerConfig sw = TaggerConfig::for_variant(*v);
    base.feature_model = sw.feature_model;
    base.use_crf = sw.use_crf;
    base.use_char_encoder = sw.use_char_encoder;
    base.use_context_attention = sw.use_context_attention;
  }
  const nlohmann::json known = to_json(base);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ValidationError("config: unknown key '" + key + "'");
  }
  auto get = [&j](const char* key, auto& field) {
    if (auto it = j.find(key); it != j.end()) {
      try {
        it->get_to(field);
      } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string("config: bad value for '") + key + "'");
      }
    }
  };
  get("feature_model", base.feature_model);
  get("use_crf", base.use_crf);
  get("use_char_encoder", base.use_char_encoder);
  get("use_context_attention", base.use_context_attention);
  get("word_dim", base.word_dim);
  get("char_dim", base.char_dim);
  get("hidden", base.hidden);
  get("context_hidden", base.context_hidden);
  get("char_hidden", base.char_hidden);
  get("attention_dim", base.attention_dim);
  get("context_cap", base.context_cap);
  get("min_word_count", base.min_word_count);
  get("learning_rate", base.learning_rate);
  get("batch_size", base.batch_size);
  get("max_epochs", base.max_epochs);
  get("patience", base.patience);
  get("validation_fraction", base.validation_fraction);
  get("clip_norm", base.clip_norm);
  get("target_f1", base.target_f1);
  get("seed", base.seed);
  get("softmax_emissions", base.softmax_emissions);
  get("bio_constraints", base.bio_constraints);
  get("freeze_embeddings", base.freeze_embeddings);
  get("l2", base.l2);
  get("feature_min_count", base.feature_min_count);
  base.validate();
  return base;
}

nlohmann::json to_json(const TagPrediction& p) {
  nlohmann::json j;
  j["tags"] = nlohmann::json::array();
  for (Tag t : p.tags) j["tags"].push_back(to_string(t));
  j["score"] = p.score;
  if (!p.attention_forward.empty()) {
    j["attention"] = {{"forward", p.attention_forward}, {"backward", p.attention_backward}};
  }
  return j;
}

// ---------------------------------------------------------------------------

template <typename T>
TaggerModel<T>::TaggerModel(TaggerConfig config, enc::Vocabulary vocab,
                            const enc::PretrainedVectors* pretrained, num::Rng& rng)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.validate();
  if (config_.feature_model) throw ValidationError("TaggerModel: feature CRF config given");
  enc::WordEmbeddings<T> words;
  if (pretrained != nullptr) {
    words = enc::embed_pretrained<T>(*pretrained, vocab_, config_.word_dim, rng);
  } else {
    words = enc::embed_pretrained<T>(enc::PretrainedVectors{}, vocab_, config_.word_dim, rng);
  }
  coverage_ = words.coverage;
  num::Tensor<T> context_init = words.matrix;
  word_embedding_ = &params_.add("word.embedding", std::move(words.matrix));

  std::size_t in = config_.word_dim;
  if (config_.use_char_encoder) {
    chars_ = enc::CharEncoder<T>::create(params_, alphabet_.size(), config_.char_dim,
                                         config_.char_hidden, rng);
    in += chars_->output_dim();
  }
  if (config_.use_context_attention) {
    context_ = enc::ContextEncoder<T>::create(params_, std::move(context_init), config_.context_hidden, rng);
    in += config_.context_hidden;
  }
  forward_ = enc::LstmCell<T>::create(params_, "lstm.fwd", in, config_.hidden, rng);
  backward_ = enc::LstmCell<T>::create(params_, "lstm.bwd", in, config_.hidden, rng);
  w_o_ = &params_.add("out.W", num::init_params<T>(num::Shape{kNumTags, 2 * config_.hidden}, rng));
  b_o_ = &params_.add("out.b", num::Tensor<T>(num::Shape{kNumTags}));
  if (config_.use_context_attention) {
    const std::size_t a = config_.attention_dim;
    w_a_ = &params_.add("att.W", num::init_params<T>(num::Shape{a, config_.hidden}, rng));
    u_a_ = &params_.add("att.U", num::init_params<T>(num::Shape{a, config_.context_hidden}, rng));
    num::Tensor<T> v(num::Shape{a});
    const double bound = std::sqrt(6.0 / static_cast<double>(a + 1));
    for (T& x : v.storage()) x = static_cast<T>(rng.uniform(-bound, bound));
    v_a_ = &params_.add("att.v", std::move(v));
  }
  if (config_.use_crf) {
    transitions_ = &params_.add("crf.transitions", crf::make_transitions<T>(kNumTags));
    if (config_.bio_constraints) mask_ = bio_mask<T>();
  }
}

template <typename T>
std::span<const Sentence> TaggerModel<T>::capped(std::span<const Sentence> context) const {
  if (context.size() <= config_.context_cap) return context;
  return context.subspan(context.size() - config_.context_cap);
}

template <typename T>
num::Var<T> TaggerModel<T>::encode_chars(num::Tape<T>& tape, const Token& word) const {
  if (!chars_) throw ValidationError("character encoder is disabled");
  return chars_->encode(tape, alphabet_.encode(word.text));
}

template <typename T>
num::Var<T> TaggerModel<T>::input_vector(num::Tape<T>& tape, const Token& word) const {
  const std::size_t id = vocab_.id(word.text);
  const std::size_t dim = config_.word_dim + (chars_ ? chars_->output_dim() : 0);
  if (id == enc::Vocabulary::kPad && word.text == enc::Vocabulary::kPadToken) {
    return tape.constant(num::Tensor<T>(num::Shape{dim}));
  }
  num::Var<T> w;
  if (config_.freeze_embeddings) {
    auto r = word_embedding_->value.row(id);
    w = tape.constant(num::Tensor<T>::vector(std::vector<T>(r.begin(), r.end())));
  } else {
    w = num::row(tape.param(*word_embedding_), id);
  }
  if (!chars_) return w;
  return num::concat({w, encode_chars(tape, word)});
}

template <typename T>
std::vector<num::Var<T>> TaggerModel<T>::encode_context(num::Tape<T>& tape,
                                                        std::span<const Sentence> context) const {
  if (!context_) throw ValidationError("context encoder is disabled");
  std::vector<std::vector<std::size_t>> ids;
  for (const auto& s : context) ids.push_back(vocab_.encode(s));
  return context_->encode(tape, ids);
}

template <typename T>
num::Var<T> TaggerModel<T>::logits(num::Tape<T>& tape, const Sentence& s,
                                   std::span<const Sentence> context, TagPrediction* trace) const {
  require_tokens(s);
  const std::size_t len = s.size();
  std::vector<num::Var<T>> inputs;
  inputs.reserve(len);
  for (const auto& tok : s.tokens) inputs.push_back(input_vector(tape, tok));

  std::vector<num::Var<T>> ctx, projected;
  num::Var<T> w_a, v_a;
  if (context_) {
    ctx = encode_context(tape, capped(context));
    num::Var<T> u_a = tape.param(*u_a_);
    for (const auto& c : ctx) projected.push_back(num::matvec(u_a, c));
    w_a = tape.param(*w_a_);
    v_a = tape.param(*v_a_);
    if (trace != nullptr) {
      trace->attention_forward.assign(len, {});
      trace->attention_backward.assign(len, {});
    }
  }

  auto run = [&](const enc::LstmCell<T>& cell, bool reverse,
                 std::vector<std::vector<double>>* att) {
    std::vector<num::Var<T>> hs(len);
    num::Var<T> state = cell.zero_state(tape);
    for (std::size_t k = 0; k < len; ++k) {
      const std::size_t t = reverse ? len - 1 - k : k;
      num::Var<T> x = inputs[t];
      if (context_) {
        auto a = attend<T>(tape, cell.hidden_of(state), ctx, projected, w_a, v_a,
                           config_.context_hidden);
        x = num::concat({x, a.context});
        if (att != nullptr && a.weights.valid()) {
          auto w = a.weights.value();
          (*att)[t].assign(w.begin(), w.end());
        }
      }
      state = cell.step(tape, x, state);
      hs[t] = cell.hidden_of(state);
    }
    return hs;
  };
  auto hf = run(forward_, false, trace ? &trace->attention_forward : nullptr);
  auto hb = run(backward_, true, trace ? &trace->attention_backward : nullptr);

  num::Var<T> w_o = tape.param(*w_o_), b_o = tape.param(*b_o_);
  std::vector<num::Var<T>> rows;
  rows.reserve(len);
  for (std::size_t t = 0; t < len; ++t) {
    rows.push_back(num::add(num::matvec(w_o, num::concat({hf[t], hb[t]})), b_o));
  }
  return num::stack(rows);
}

template <typename T>
num::Var<T> TaggerModel<T>::emissions(num::Tape<T>& tape, const Sentence& s,
                                      std::span<const Sentence> context, TagPrediction* trace) const {
  num::Var<T> l = logits(tape, s, context, trace);
  if (!config_.use_crf || config_.softmax_emissions) return num::softmax(l);
  return l;
}

template <typename T>
num::Tensor<T> TaggerModel<T>::effective_transitions() const {
  if (!transitions_) throw ValidationError("model has no CRF layer");
  num::Tensor<T> a = transitions_->value;
  if (mask_.size() > 0) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += mask_[i];
  }
  return a;
}

template <typename T>
num::Var<T> TaggerModel<T>::loss(num::Tape<T>& tape, const TaggedSentence& ex) {
  const auto gold = tag_ids(ex);
  if (config_.use_crf) {
    num::Var<T> e = emissions(tape, ex.sentence, ex.context);
    return crf::nll_op(e, tape.param(*transitions_), gold, mask_.size() > 0 ? &mask_ : nullptr);
  }
  num::Var<T> l = logits(tape, ex.sentence, ex.context, nullptr);
  std::vector<num::Var<T>> terms;
  terms.reserve(gold.size());
  for (std::size_t t = 0; t < gold.size(); ++t) terms.push_back(num::neg_log_softmax(num::row(l, t), gold[t]));
  return num::add_all(terms);
}

template <typename T>
TagPrediction TaggerModel<T>::predict(const Sentence& s, std::span<const Sentence> context) const {
  num::Tape<T> tape(false);
  TagPrediction trace;
  if (config_.use_crf) {
    num::Var<T> e = emissions(tape, s, context, &trace);
    TagPrediction p = viterbi_prediction(e.tensor(), effective_transitions());
    p.attention_forward = std::move(trace.attention_forward);
    p.attention_backward = std::move(trace.attention_backward);
    return p;
  }
  num::Tensor<T> l = logits(tape, s, context, nullptr).tensor();
  TagPrediction p;
  for (std::size_t t = 0; t < l.rows(); ++t) {
    auto r = l.row(t);
    const std::size_t best = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    p.tags.push_back(tag_from_index(best));
    p.score += static_cast<double>(r[best] - num::kernel::log_sum_exp<T>(r));
  }
  return p;
}

template <typename T>
nlohmann::json TaggerModel<T>::metadata() const {
  return {{"model", "neural"},
          {"config", to_json(config_)},
          {"case_fold", vocab_.case_fold()},
          {"vocab", vocab_.words()},
          {"coverage", enc::to_json(coverage_)}};
}

// ---------------------------------------------------------------------------

namespace {

const std::unordered_map<std::string, std::string>& pos_lexicon() {
  static const std::unordered_map<std::string, std::string> lex = [] {
    std::unordered_map<std::string, std::string> m;
    auto put = [&m](const char* tag, std::initializer_list<const char*> words) {
      for (const char* w : words) m.emplace(w, tag);
    };
    put("DT", {"the", "a", "an", "this", "that", "these", "those", "each", "every", "some", "any",
               "no", "all", "another"});
    put("IN", {"in", "of", "for", "on", "at", "with", "about", "from", "by", "into", "after",
               "before", "during", "like", "than", "if", "because", "since", "until", "while",
               "over", "under", "between", "through", "without"});
    put("TO", {"to"});
    put("PRP", {"i", "you", "he", "she", "it", "we", "they", "me", "him", "them", "us"});
    put("PRP$", {"my", "your", "his", "her", "its", "our", "their"});
    put("CC", {"and", "or", "but", "nor", "so", "yet"});
    put("MD", {"can", "could", "will", "would", "should", "may", "might", "must", "shall"});
    put("WDT", {"which", "what", "whatever"});
    put("WP", {"who", "whom"});
    put("WRB", {"how", "why", "where", "when"});
    put("VBZ", {"is", "has", "does"});
    put("VBP", {"are", "am", "have", "do"});
    put("VBD", {"was", "were", "had", "did"});
    put("VB", {"be", "get", "see", "find", "help", "try", "know", "think", "make"});
    put("VBN", {"been"});
    put("RB", {"not", "also", "very", "just", "really", "still", "again", "too", "only", "here",
               "there", "now", "then", "already", "even"});
    put("UH", {"hi", "hello", "thanks", "thank", "yes", "please", "ok", "okay"});
    put("EX", {"there"});
    return m;
  }();
  return lex;
}

std::string pos_of(const std::string& word, bool sentence_initial) {
  if (word.empty()) return "SYM";
  const unsigned char c0 = static_cast<unsigned char>(word[0]);
  if (!std::isalnum(c0) && c0 < 0x80) {
    if (word.find_first_of(".!?") == 0) return ".";
    if (word == ",") return ",";
    if (word == ":" || word == ";" || word[0] == '-') return ":";
    if (word == "(" || word == "[" || word == "{") return "(";
    if (word == ")" || word == "]" || word == "}") return ")";
    if (word == "\"" || word == "'") return "''";
    if (word == "$") return "$";
    if (word == "#") return "#";
    return "SYM";
  }
  if (std::all_of(word.begin(), word.end(),
                  [](unsigned char c) { return std::isdigit(c) || c == '.' || c == ','; })) {
    return "CD";
  }
  const std::string lw = lower(word);
  if (auto it = pos_lexicon().find(lw); it != pos_lexicon().end()) return it->second;
  if (std::any_of(word.begin(), word.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return "NN";
  }
  if (std::isupper(c0) && !sentence_initial) return "NNP";
  auto ends = [&lw](std::string_view suf) {
    return lw.size() > suf.size() + 1 && lw.compare(lw.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (ends("ing")) return "VBG";
  if (ends("ed")) return "VBD";
  if (ends("ly")) return "RB";
  if (ends("ous") || ends("ful") || ends("able") || ends("ible") || ends("al") || ends("ive")) return "JJ";
  if (ends("s") && !ends("ss") && !ends("us") && !ends("is")) return "NNS";
  return "NN";
}

}  // namespace

std::vector<std::string> LexiconPosTagger::tag(const std::vector<std::string>& words) const {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) out.push_back(pos_of(words[i], i == 0));
  return out;
}

const PosTagger& default_pos_tagger() {
  static const LexiconPosTagger tagger;
  return tagger;
}

std::vector<std::string> extract_baseline_features(const std::vector<std::string>& words,
                                                   const std::vector<std::string>& pos,
                                                   std::size_t t) {
  if (t >= words.size() || pos.size() != words.size()) {
    throw ValidationError("extract_baseline_features: position outside sentence");
  }
  std::vector<std::string> f;
  f.push_back("f0@0=bias");
  for (int off = -2; off <= 2; ++off) {
    const long long p = static_cast<long long>(t) + off;
    const std::string at = "@" + std::to_string(off) + "=";
    if (p < 0) {
      f.push_back("f1" + at + "<BOS>");
      continue;
    }
    if (p >= static_cast<long long>(words.size())) {
      f.push_back("f1" + at + "<EOS>");
      continue;
    }
    const std::string& w = words[static_cast<std::size_t>(p)];
    const std::string& tag = pos[static_cast<std::size_t>(p)];
    f.push_back("f1" + at + lower(w));
    f.push_back("f2" + at + head(w, 2));
    f.push_back("f3" + at + head(w, 3));
    f.push_back("f4" + at + tail(w, 2));
    f.push_back("f5" + at + tail(w, 3));
    f.push_back("f6" + at + flag(is_digit_word(w)));
    f.push_back("f7" + at + flag(is_title(w)));
    f.push_back("f8" + at + flag(is_upper(w)));
    f.push_back("f9" + at + tag);
    f.push_back("f10" + at + head(tag, 2));
  }
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
  return f;
}

std::vector<std::string> extract_baseline_features(const Sentence& s, std::size_t t,
                                                   const PosTagger& pos) {
  const auto words = s.words();
  return extract_baseline_features(words, pos.tag(words), t);
}

// ---------------------------------------------------------------------------

template <typename T>
FeatureCrfModel<T>::FeatureCrfModel(TaggerConfig config, const TaggedCorpus& corpus)
    : config_(std::move(config)) {
  std::unordered_map<std::string, std::size_t> counts;
  std::vector<std::string> order;
  for (const auto& ex : corpus) {
    if (ex.sentence.tokens.empty()) continue;
    const auto words = ex.sentence.words();
    const auto pos = default_pos_tagger().tag(words);
    for (std::size_t t = 0; t < words.size(); ++t) {
      for (auto& f : extract_baseline_features(words, pos, t)) {
        if (counts[f]++ == 0) order.push_back(std::move(f));
      }
    }
  }
  for (auto& f : order) {
    if (counts[f] >= config_.feature_min_count) features_.push_back(std::move(f));
  }
  init();
}

template <typename T>
FeatureCrfModel<T>::FeatureCrfModel(TaggerConfig config, std::vector<std::string> features)
    : config_(std::move(config)), features_(std::move(features)) {
  init();
}

template <typename T>
void FeatureCrfModel<T>::init() {
  config_.validate();
  if (!config_.feature_model) throw ValidationError("FeatureCrfModel: neural config given");
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (!index_.emplace(features_[i], i).second) {
      throw ValidationError("duplicate feature " + features_[i]);
    }
  }
  weights_ = &params_.add("feat.W", num::Tensor<T>(num::Shape{std::max<std::size_t>(features_.size(), 1), kNumTags}));
  transitions_ = &params_.add("crf.transitions", crf::make_transitions<T>(kNumTags));
  if (config_.bio_constraints) mask_ = bio_mask<T>();
}

template <typename T>
std::vector<std::vector<std::size_t>> FeatureCrfModel<T>::feature_ids(const Sentence& s) const {
  const auto words = s.words();
  const auto pos = default_pos_tagger().tag(words);
  std::vector<std::vector<std::size_t>> ids(words.size());
  for (std::size_t t = 0; t < words.size(); ++t) {
    for (const auto& f : extract_baseline_features(words, pos, t)) {
      if (auto it = index_.find(f); it != index_.end()) ids[t].push_back(it->second);
    }
  }
  return ids;
}

template <typename T>
num::Var<T> FeatureCrfModel<T>::emissions(num::Tape<T>& tape, const Sentence& s) const {
  require_tokens(s);
  num::Var<T> w = tape.param(*weights_);
  std::vector<num::Var<T>> rows;
  for (auto& ids : feature_ids(s)) rows.push_back(num::gather_sum(w, std::move(ids)));
  num::Var<T> e = num::stack(rows);
  return config_.softmax_emissions ? num::softmax(e) : e;
}

template <typename T>
num::Var<T> FeatureCrfModel<T>::loss(num::Tape<T>& tape, const TaggedSentence& ex) {
  const auto gold = tag_ids(ex);
  return crf::nll_op(emissions(tape, ex.sentence), tape.param(*transitions_), gold,
                     mask_.size() > 0 ? &mask_ : nullptr);
}

template <typename T>
std::optional<num::Var<T>> FeatureCrfModel<T>::regularizer(num::Tape<T>& tape) {
  if (config_.l2 == 0.0) return std::nullopt;
  return num::scale(num::sum_squares(tape.param(*weights_)), static_cast<T>(config_.l2 / 2));
}

template <typename T>
TagPrediction FeatureCrfModel<T>::predict(const Sentence& s, std::span<const Sentence>) const {
  num::Tape<T> tape(false);
  num::Tensor<T> a = transitions_->value;
  if (mask_.size() > 0) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += mask_[i];
  }
  return viterbi_prediction(emissions(tape, s).tensor(), a);
}

template <typename T>
nlohmann::json FeatureCrfModel<T>::metadata() const {
  return {{"model", "feature"}, {"config", to_json(config_)}, {"features", features_}};
}

// ---------------------------------------------------------------------------

template <typename T>
std::unique_ptr<SequenceModel<T>> make_model(const TaggerConfig& config, const TaggedCorpus& corpus,
                                             const enc::PretrainedVectors* pretrained, num::Rng& rng) {
  config.validate();
  if (config.feature_model) return std::make_unique<FeatureCrfModel<T>>(config, corpus);
  auto vocab = enc::Vocabulary::build(corpus, config.min_word_count,
                                      pretrained ? &pretrained->words : nullptr);
  return std::make_unique<TaggerModel<T>>(config, std::move(vocab), pretrained, rng);
}

template <typename T>
void load_values(num::ParamSet<T>& params, const num::Checkpoint& ckpt) {
  for (auto& p : params) {
    const auto* t = ckpt.find(p->name);
    if (t == nullptr) throw ValidationError("checkpoint has no tensor " + p->name);
    if (t->value.shape() != p->value.shape()) {
      throw ValidationError("checkpoint tensor " + p->name + " has shape " +
                            num::shape_str(t->value.shape()) + ", model expects " +
                            num::shape_str(p->value.shape()));
    }
    p->value = t->value.template cast<T>();
  }
}

num::Checkpoint to_checkpoint(const SequenceModel<float>& model) {
  num::Checkpoint ck;
  ck.metadata_json = model.metadata().dump();
  for (const auto& p : model.params()) ck.tensors.push_back({p->name, p->value});
  return ck;
}

std::unique_ptr<SequenceModel<float>> model_from_checkpoint(const num::Checkpoint& ckpt) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ckpt.metadata_json);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint metadata is not JSON: ") + e.what());
  }
  const TaggerConfig config = config_from_json(meta.at("config"));
  std::unique_ptr<SequenceModel<float>> model;
  const std::string kind = meta.value("model", "");
  if (kind == "neural") {
    auto vocab = enc::Vocabulary::from_words(meta.at("vocab").get<std::vector<std::string>>(),
                                             meta.value("case_fold", true));
    num::Rng rng(config.seed);
    model = std::make_unique<TaggerModel<float>>(config, std::move(vocab), nullptr, rng);
  } else if (kind == "feature") {
    model = std::make_unique<FeatureCrfModel<float>>(
        config, meta.at("features").get<std::vector<std::string>>());
  } else {
    throw ValidationError("checkpoint has unknown model kind '" + kind + "'");
  }
  load_values(model->params(), ckpt);
  return model;
}

template class TaggerModel<float>;
template class TaggerModel<double>;
template class FeatureCrfModel<float>;
template class FeatureCrfModel<double>;
template std::unique_ptr<SequenceModel<float>> make_model<float>(const TaggerConfig&, const TaggedCorpus&,
                                                                 const enc::PretrainedVectors*, num::Rng&);
template std::unique_ptr<SequenceModel<double>> make_model<double>(const TaggerConfig&, const TaggedCorpus&,
                                                                   const enc::PretrainedVectors*, num::Rng&);
template void load_values<float>(num::ParamSet<float>&, const num::Checkpoint&);
template void load_values<double>(num::ParamSet<double>&, const num::Checkpoint&);

}  // namespace forumtag
