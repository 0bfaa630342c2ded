#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forumtag/evaluation.hpp"
#include "forumtag/numerics/gradcheck.hpp"
#include "forumtag/tagger.hpp"

namespace forumtag {

struct EpochLog {
  std::size_t epoch = 0;       // 1-based
  double loss = 0.0;           // mean per-sentence training loss
  eval::PRF validation;        // token micro P/R/F1
  bool improved = false;
};

nlohmann::json to_json(const EpochLog& e);

struct TrainSplit {
  TaggedCorpus train;
  TaggedCorpus validation;
};

// Seeded shuffle, then the first round(fraction * n) examples go to
// validation. A fraction of 0 validates on the training set.
TrainSplit split_validation(const TaggedCorpus& corpus, double fraction, std::uint64_t seed);

struct TrainSummary {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_f1 = -1.0;
};

// Minibatch ADAM on the summed per-sentence loss (averaged over the batch),
// with gradient-norm clipping. Keeps the parameters of the epoch with the
// best validation micro-F1; stops after `patience` epochs without
// improvement (0 disables; epochs before the first positive F1 do not count)
// or once target_f1 is reached. Each epoch log is
// written as one JSON line when `jsonl` is given.
template <typename T>
TrainSummary fit(SequenceModel<T>& model, const TaggedCorpus& train, const TaggedCorpus& validation,
                 std::ostream* jsonl = nullptr);

template <typename T>
struct TrainResult {
  std::unique_ptr<SequenceModel<T>> model;
  TrainSummary summary;
};

// Builds the model for `config` and fits it on a split of `corpus`.
template <typename T>
TrainResult<T> train(const TaggerConfig& config, const TaggedCorpus& corpus,
                     const enc::PretrainedVectors* pretrained = nullptr, std::ostream* jsonl = nullptr);

template <typename T>
eval::TagSequences predict_corpus(const SequenceModel<T>& model, const TaggedCorpus& corpus);

template <typename T>
eval::PRF score(const SequenceModel<T>& model, const TaggedCorpus& corpus);

struct CrossValidation {
  std::vector<eval::PRF> folds;
  eval::PRF mean;
};

// Contiguous folds over a seeded shuffle of threads, so no thread is split
// across train and test.
CrossValidation cross_validate(const TaggerConfig& config, const TaggedCorpus& corpus, std::size_t folds,
                               const enc::PretrainedVectors* pretrained = nullptr);

// Hash of the canonical config JSON.
std::string config_hash(const TaggerConfig& config);

// Vocabulary predicate for the OOV table: a word is known when the model
// vocabulary holds it (feature models have no vocabulary).
eval::VocabPredicate vocabulary_predicate(const SequenceModel<float>& model);

// Three-token sentence with two context sentences.
TaggedSentence gradcheck_example();

// Double-precision finite-difference check of the loss for `config` on
// `ex`, with a vocabulary built from the example's words. The regularizer is
// included for the feature CRF, whose weights start at small random values.
num::GradCheckResult check_model_gradients(const TaggerConfig& config, const TaggedSentence& ex,
                                           const num::GradCheckOptions& options = {});

// Small sizes that keep a full check to a few seconds.
TaggerConfig gradcheck_config(Variant v);

}  // namespace forumtag
