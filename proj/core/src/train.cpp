#include "forumtag/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "forumtag/error.hpp"
#include "forumtag/numerics/adam.hpp"

namespace forumtag {
namespace {

template <typename T>
std::vector<num::Tensor<T>> snapshot(const num::ParamSet<T>& params) {
  std::vector<num::Tensor<T>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p->value);
  return out;
}

template <typename T>
void restore(num::ParamSet<T>& params, std::vector<num::Tensor<T>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = std::move(values[i]);
}

eval::PRF mean_prf(const std::vector<eval::PRF>& rows) {
  eval::PRF m;
  if (rows.empty()) return m;
  for (const auto& r : rows) {
    m.precision += r.precision;
    m.recall += r.recall;
    m.f1 += r.f1;
  }
  const double n = static_cast<double>(rows.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

}  // namespace

nlohmann::json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch},
          {"loss", e.loss},
          {"precision", e.validation.precision},
          {"recall", e.validation.recall},
          {"f1", e.validation.f1},
          {"improved", e.improved}};
}

TrainSplit split_validation(const TaggedCorpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ValidationError("validation fraction must be in [0, 1)");
  }
  TrainSplit split;
  if (fraction == 0.0) {
    split.train = corpus;
    split.validation = corpus;
    return split;
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  num::Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(corpus.size())));
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? split.validation : split.train).push_back(corpus[order[i]]);
  }
  if (split.train.empty()) throw ValidationError("validation split leaves no training data");
  if (split.validation.empty()) split.validation = split.train;
  return split;
}

template <typename T>
eval::TagSequences predict_corpus(const SequenceModel<T>& model, const TaggedCorpus& corpus) {
  eval::TagSequences out;
  out.reserve(corpus.size());
  for (const auto& ex : corpus) out.push_back(model.predict(ex.sentence, ex.context).tags);
  return out;
}

template <typename T>
eval::PRF score(const SequenceModel<T>& model, const TaggedCorpus& corpus) {
  eval::TagSequences gold;
  gold.reserve(corpus.size());
  for (const auto& ex : corpus) gold.push_back(ex.tags);
  return eval::micro_prf(gold, predict_corpus(model, corpus));
}

template <typename T>
TrainSummary fit(SequenceModel<T>& model, const TaggedCorpus& train, const TaggedCorpus& validation,
                 std::ostream* jsonl) {
  const TaggerConfig& config = model.config();
  if (train.empty()) throw ValidationError("training corpus is empty");
  for (const auto& ex : train) {
    if (ex.sentence.tokens.empty()) throw ValidationError("training corpus has an empty sentence");
  }
  num::ParamSet<T>& params = model.params();
  num::AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  num::AdamState<T> adam(adam_config);
  num::Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainSummary summary;
  std::vector<num::Tensor<T>> best;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      params.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        num::Tape<T> tape;
        num::Var<T> loss = model.loss(tape, train[order[k]]);
        total += static_cast<double>(loss.item());
        tape.backward(loss);
      }
      params.scale_grad(static_cast<T>(1.0 / static_cast<double>(end - start)));
      {
        num::Tape<T> tape;
        if (auto reg = model.regularizer(tape)) tape.backward(*reg);
      }
      if (config.clip_norm > 0) params.clip_grad_norm(config.clip_norm);
      adam.step(params);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = total / static_cast<double>(train.size());
    entry.validation = score(model, validation);
    entry.improved = entry.validation.f1 > summary.best_f1;
    if (entry.improved) {
      summary.best_f1 = entry.validation.f1;
      summary.best_epoch = epoch;
      best = snapshot(params);
      stale = 0;
    } else if (summary.best_f1 > 0.0) {
      ++stale;
    }
    summary.log.push_back(entry);
    if (jsonl != nullptr) *jsonl << to_json(entry).dump() << '\n';
    if (config.target_f1 > 0 && summary.best_f1 >= config.target_f1) break;
    if (config.patience > 0 && stale >= config.patience) break;
  }
  if (!best.empty()) restore(params, best);
  return summary;
}

template <typename T>
TrainResult<T> train(const TaggerConfig& config, const TaggedCorpus& corpus,
                     const enc::PretrainedVectors* pretrained, std::ostream* jsonl) {
  config.validate();
  TrainSplit split = split_validation(corpus, config.validation_fraction, config.seed);
  num::Rng rng(config.seed);
  TrainResult<T> result;
  result.model = make_model<T>(config, split.train, pretrained, rng);
  result.summary = fit(*result.model, split.train, split.validation, jsonl);
  return result;
}

CrossValidation cross_validate(const TaggerConfig& config, const TaggedCorpus& corpus, std::size_t folds,
                               const enc::PretrainedVectors* pretrained) {
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  std::vector<std::string> threads;
  std::map<std::string, std::vector<std::size_t>> by_thread;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& rows = by_thread[corpus[i].thread_id];
    if (rows.empty()) threads.push_back(corpus[i].thread_id);
    rows.push_back(i);
  }
  if (threads.size() < folds) {
    throw ValidationError("cross-validation: " + std::to_string(threads.size()) + " threads for " +
                          std::to_string(folds) + " folds");
  }
  num::Rng rng(config.seed);
  rng.shuffle(std::span<std::string>(threads));
  CrossValidation cv;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t lo = f * threads.size() / folds, hi = (f + 1) * threads.size() / folds;
    TaggedCorpus train, test;
    for (std::size_t t = 0; t < threads.size(); ++t) {
      auto& dest = (t >= lo && t < hi) ? test : train;
      for (std::size_t i : by_thread[threads[t]]) dest.push_back(corpus[i]);
    }
    auto result = forumtag::train<float>(config, train, pretrained);
    cv.folds.push_back(score(*result.model, test));
  }
  cv.mean = mean_prf(cv.folds);
  return cv;
}

std::string config_hash(const TaggerConfig& config) { return eval::hash_hex(to_json(config).dump()); }

eval::VocabPredicate vocabulary_predicate(const SequenceModel<float>& model) {
  if (const auto* m = dynamic_cast<const TaggerModel<float>*>(&model)) {
    const enc::Vocabulary* vocab = &m->vocab();
    return [vocab](std::string_view w) { return vocab->contains(w); };
  }
  return {};
}

TaggedSentence gradcheck_example() {
  auto sentence = [](std::initializer_list<const char*> words, std::size_t index) {
    Sentence s;
    s.sentence_index = index;
    for (const char* w : words) s.tokens.push_back({w, 0, 0});
    return s;
  };
  TaggedSentence ex;
  ex.thread_id = "gradcheck";
  ex.sentence = sentence({"watch", "lec3.mp4", "video"}, 2);
  ex.tags = {Tag::O, Tag::Videos_B, Tag::Videos_I};
  ex.context = {sentence({"the", "quiz", "is", "hard"}, 0), sentence({"week", "2", "video", "Q1"}, 1)};
  return ex;
}

TaggerConfig gradcheck_config(Variant v) {
  TaggerConfig c = TaggerConfig::for_variant(v);
  c.word_dim = 4;
  c.char_dim = 3;
  c.char_hidden = 2;
  c.hidden = 3;
  c.context_hidden = 3;
  c.attention_dim = 3;
  c.min_word_count = 1;
  c.l2 = 0.1;
  return c;
}

num::GradCheckResult check_model_gradients(const TaggerConfig& config, const TaggedSentence& ex,
                                           const num::GradCheckOptions& options) {
  config.validate();
  num::Rng rng(config.seed);
  if (config.feature_model) {
    FeatureCrfModel<double> model(config, TaggedCorpus{ex});
    for (auto& p : model.params()) {
      for (double& x : p->value.storage()) {
        if (std::isfinite(x)) x = rng.uniform(-0.5, 0.5);
      }
    }
    return num::grad_check(
        model.params(),
        [&](num::Tape<double>& tape) {
          num::Var<double> loss = model.loss(tape, ex);
          if (auto reg = model.regularizer(tape)) loss = num::add(loss, *reg);
          return loss;
        },
        options);
  }
  // "Q1" stays out of the vocabulary so the UNK row is exercised.
  enc::Vocabulary vocab;
  auto add = [&](const Sentence& s) {
    for (const auto& t : s.tokens) {
      if (t.text != "Q1") vocab.add(t.text);
    }
  };
  add(ex.sentence);
  for (const auto& s : ex.context) add(s);
  TaggerModel<double> model(config, std::move(vocab), nullptr, rng);
  return num::grad_check(
      model.params(), [&](num::Tape<double>& tape) { return model.loss(tape, ex); }, options);
}

template TrainSummary fit<float>(SequenceModel<float>&, const TaggedCorpus&, const TaggedCorpus&, std::ostream*);
template TrainSummary fit<double>(SequenceModel<double>&, const TaggedCorpus&, const TaggedCorpus&, std::ostream*);
template TrainResult<float> train<float>(const TaggerConfig&, const TaggedCorpus&, const enc::PretrainedVectors*,
                                         std::ostream*);
template TrainResult<double> train<double>(const TaggerConfig&, const TaggedCorpus&, const enc::PretrainedVectors*,
                                           std::ostream*);
template eval::TagSequences predict_corpus<float>(const SequenceModel<float>&, const TaggedCorpus&);
template eval::TagSequences predict_corpus<double>(const SequenceModel<double>&, const TaggedCorpus&);
template eval::PRF score<float>(const SequenceModel<float>&, const TaggedCorpus&);
template eval::PRF score<double>(const SequenceModel<double>&, const TaggedCorpus&);

}  // namespace forumtag
