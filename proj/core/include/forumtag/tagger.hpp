#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "forumtag/corpus.hpp"
#include "forumtag/crf.hpp"
#include "forumtag/encoders.hpp"
#include "forumtag/numerics/checkpoint.hpp"

namespace forumtag {

enum class Variant { Blstm, FeatureCrf, BlstmCrf, BlstmCrfCe, BlstmCrfCeCa };

inline constexpr std::array<Variant, 5> kVariants = {Variant::Blstm, Variant::FeatureCrf,
                                                     Variant::BlstmCrf, Variant::BlstmCrfCe,
                                                     Variant::BlstmCrfCeCa};

// "blstm", "crf", "blstm-crf", "blstm-crf-ce", "blstm-crf-ce-ca".
std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view name);

struct TaggerConfig {
  bool feature_model = false;
  bool use_crf = true;
  bool use_char_encoder = true;
  bool use_context_attention = true;

  std::size_t word_dim = 200;
  std::size_t char_dim = 64;
  std::size_t hidden = 256;
  std::size_t context_hidden = 256;
  std::size_t char_hidden = 64;
  std::size_t attention_dim = 256;
  std::size_t context_cap = 5;
  std::size_t min_word_count = 2;

  double learning_rate = 0.01;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  double validation_fraction = 0.1;
  double clip_norm = 5.0;
  // Stop once validation micro-F1 reaches this value; 0 disables.
  double target_f1 = 0.0;
  std::uint64_t seed = 1;

  bool softmax_emissions = false;
  bool bio_constraints = false;
  bool freeze_embeddings = false;

  // Feature CRF only.
  double l2 = 1e-4;
  std::size_t feature_min_count = 1;

  static TaggerConfig for_variant(Variant v);
  Variant variant() const;
  // Throws ValidationError on inconsistent switches or zero sizes.
  void validate() const;
};

nlohmann::json to_json(const TaggerConfig& c);
// Keys present in `j` override `base`; unknown keys are rejected.
TaggerConfig config_from_json(const nlohmann::json& j, TaggerConfig base = {});

struct TagPrediction {
  std::vector<Tag> tags;
  double score = 0.0;
  // Per time step attention over the context sentences, one list per
  // direction (backward steps are stored in sentence order).
  std::vector<std::vector<double>> attention_forward;
  std::vector<std::vector<double>> attention_backward;
};

nlohmann::json to_json(const TagPrediction& p);

template <typename T>
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  virtual const TaggerConfig& config() const = 0;
  virtual num::ParamSet<T>& params() = 0;
  virtual const num::ParamSet<T>& params() const = 0;

  // Per-sentence training loss: CRF negative log-likelihood, or summed
  // token cross-entropy for the plain BLSTM.
  virtual num::Var<T> loss(num::Tape<T>& tape, const TaggedSentence& ex) = 0;
  // Added once per minibatch.
  virtual std::optional<num::Var<T>> regularizer(num::Tape<T>&) { return std::nullopt; }

  // Throws ValidationError on an empty sentence.
  virtual TagPrediction predict(const Sentence& s, std::span<const Sentence> context) const = 0;

  // Everything besides parameter values needed to rebuild the model.
  virtual nlohmann::json metadata() const = 0;
};

template <typename T>
struct AttentionResult {
  num::Var<T> weights;  // [m]; invalid when m = 0
  num::Var<T> context;  // [H_c]
};

// e_i = v_a . tanh(W_a h_prev + proj_i), alpha = softmax(e),
// a_c = sum_i alpha_i ctx_i. `projected` holds U_a ctx_i. With no context
// the result is a zero vector of length ctx_dim.
template <typename T>
AttentionResult<T> attend(num::Tape<T>& tape, num::Var<T> h_prev, std::span<const num::Var<T>> ctx,
                          std::span<const num::Var<T>> projected, num::Var<T> w_a, num::Var<T> v_a,
                          std::size_t ctx_dim) {
  AttentionResult<T> r;
  if (ctx.empty()) {
    r.context = tape.constant(num::Tensor<T>(num::Shape{ctx_dim}));
    return r;
  }
  num::Var<T> wh = num::matvec(w_a, h_prev);
  std::vector<num::Var<T>> scores;
  scores.reserve(ctx.size());
  for (const auto& p : projected) scores.push_back(num::dot(v_a, num::tanh(num::add(wh, p))));
  r.weights = num::softmax(num::concat(scores));
  r.context = num::matvec_t(num::stack(std::vector<num::Var<T>>(ctx.begin(), ctx.end())), r.weights);
  return r;
}

// Convenience form that projects the context with U_a.
template <typename T>
AttentionResult<T> attend(num::Tape<T>& tape, num::Var<T> h_prev, std::span<const num::Var<T>> ctx,
                          num::Var<T> w_a, num::Var<T> u_a, num::Var<T> v_a, std::size_t ctx_dim) {
  std::vector<num::Var<T>> projected;
  for (const auto& c : ctx) projected.push_back(num::matvec(u_a, c));
  return attend(tape, h_prev, ctx, std::span<const num::Var<T>>(projected), w_a, v_a, ctx_dim);
}

// BLSTM, BLSTM-CRF, +CE and +CE-CA.
template <typename T>
class TaggerModel final : public SequenceModel<T> {
 public:
  TaggerModel(TaggerConfig config, enc::Vocabulary vocab, const enc::PretrainedVectors* pretrained,
              num::Rng& rng);

  const TaggerConfig& config() const override { return config_; }
  num::ParamSet<T>& params() override { return params_; }
  const num::ParamSet<T>& params() const override { return params_; }
  const enc::Vocabulary& vocab() const { return vocab_; }
  const enc::Coverage& coverage() const { return coverage_; }

  num::Var<T> loss(num::Tape<T>& tape, const TaggedSentence& ex) override;
  TagPrediction predict(const Sentence& s, std::span<const Sentence> context) const override;
  nlohmann::json metadata() const override;

  // [E_w w ; char encoding]; PAD gives a zero vector.
  num::Var<T> input_vector(num::Tape<T>& tape, const Token& word) const;
  std::vector<num::Var<T>> encode_context(num::Tape<T>& tape, std::span<const Sentence> context) const;
  num::Var<T> encode_chars(num::Tape<T>& tape, const Token& word) const;
  // T x K scores: raw for the CRF, softmax rows for the plain BLSTM or
  // when softmax_emissions is set.
  num::Var<T> emissions(num::Tape<T>& tape, const Sentence& s, std::span<const Sentence> context,
                        TagPrediction* trace = nullptr) const;
  // CRF transitions with the BIO mask applied when configured.
  num::Tensor<T> effective_transitions() const;

 private:
  num::Var<T> logits(num::Tape<T>& tape, const Sentence& s, std::span<const Sentence> context,
                     TagPrediction* trace) const;
  std::span<const Sentence> capped(std::span<const Sentence> context) const;

  TaggerConfig config_;
  enc::Vocabulary vocab_;
  enc::CharAlphabet alphabet_;
  enc::Coverage coverage_;
  num::ParamSet<T> params_;
  num::Parameter<T>* word_embedding_ = nullptr;
  std::optional<enc::CharEncoder<T>> chars_;
  std::optional<enc::ContextEncoder<T>> context_;
  enc::LstmCell<T> forward_;
  enc::LstmCell<T> backward_;
  num::Parameter<T>* w_o_ = nullptr;
  num::Parameter<T>* b_o_ = nullptr;
  num::Parameter<T>* w_a_ = nullptr;
  num::Parameter<T>* u_a_ = nullptr;
  num::Parameter<T>* v_a_ = nullptr;
  num::Parameter<T>* transitions_ = nullptr;
  num::Tensor<T> mask_;
};

class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual std::vector<std::string> tag(const std::vector<std::string>& words) const = 0;
};

// Closed-class lexicon plus suffix and shape rules, Penn-style tags.
class LexiconPosTagger final : public PosTagger {
 public:
  std::vector<std::string> tag(const std::vector<std::string>& words) const override;
};

const PosTagger& default_pos_tagger();

// Feature strings "f<k>@<offset>=<value>" for position t: f0 bias (offset 0
// only), then over offsets -2..2: f1 lower-cased word, f2/f3 prefixes of
// length 2/3, f4/f5 suffixes of length 2/3, f6 isdigit, f7 istitle,
// f8 isupper, f9 POS, f10 first two POS characters. Positions outside the
// sentence emit only f1=<BOS> / f1=<EOS>. Sorted and unique.
std::vector<std::string> extract_baseline_features(const std::vector<std::string>& words,
                                                   const std::vector<std::string>& pos,
                                                   std::size_t t);
std::vector<std::string> extract_baseline_features(const Sentence& s, std::size_t t,
                                                   const PosTagger& pos = default_pos_tagger());

// Linear-chain CRF over sparse indicator features.
template <typename T>
class FeatureCrfModel final : public SequenceModel<T> {
 public:
  // Features seen at least feature_min_count times in `corpus`.
  FeatureCrfModel(TaggerConfig config, const TaggedCorpus& corpus);
  FeatureCrfModel(TaggerConfig config, std::vector<std::string> features);

  const TaggerConfig& config() const override { return config_; }
  num::ParamSet<T>& params() override { return params_; }
  const num::ParamSet<T>& params() const override { return params_; }
  const std::vector<std::string>& features() const { return features_; }

  num::Var<T> loss(num::Tape<T>& tape, const TaggedSentence& ex) override;
  std::optional<num::Var<T>> regularizer(num::Tape<T>& tape) override;
  TagPrediction predict(const Sentence& s, std::span<const Sentence> context) const override;
  nlohmann::json metadata() const override;

  num::Var<T> emissions(num::Tape<T>& tape, const Sentence& s) const;
  std::vector<std::vector<std::size_t>> feature_ids(const Sentence& s) const;

 private:
  void init();

  TaggerConfig config_;
  std::vector<std::string> features_;
  std::unordered_map<std::string, std::size_t> index_;
  num::ParamSet<T> params_;
  num::Parameter<T>* weights_ = nullptr;
  num::Parameter<T>* transitions_ = nullptr;
  num::Tensor<T> mask_;
};

// Builds an untrained model for `config` from the training corpus.
template <typename T>
std::unique_ptr<SequenceModel<T>> make_model(const TaggerConfig& config, const TaggedCorpus& corpus,
                                             const enc::PretrainedVectors* pretrained, num::Rng& rng);

num::Checkpoint to_checkpoint(const SequenceModel<float>& model);
std::unique_ptr<SequenceModel<float>> model_from_checkpoint(const num::Checkpoint& ckpt);

// Copies values by name. Throws ValidationError on missing names or shape
// mismatches.
template <typename T>
void load_values(num::ParamSet<T>& params, const num::Checkpoint& ckpt);

template <typename T>
TagPrediction tag_sentence(const SequenceModel<T>& model, const Sentence& s,
                           std::span<const Sentence> context) {
  return model.predict(s, context);
}

extern template class TaggerModel<float>;
extern template class TaggerModel<double>;
extern template class FeatureCrfModel<float>;
extern template class FeatureCrfModel<double>;

}  // namespace forumtag
