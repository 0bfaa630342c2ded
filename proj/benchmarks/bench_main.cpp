#include <cmath>
#include <string>

#include <benchmark/benchmark.h>

#include "forumtag/agreement.hpp"
#include "forumtag/crf.hpp"
#include "forumtag/synth.hpp"
#include "forumtag/train.hpp"

using namespace forumtag;

namespace {

struct CrfInput {
  num::Tensor<double> e;
  num::Tensor<double> a;
};

CrfInput random_crf(std::size_t len, std::size_t k) {
  num::Rng rng(3);
  CrfInput in{num::Tensor<double>(num::Shape{len, k}), crf::make_transitions<double>(k)};
  for (double& v : in.e.storage()) v = rng.uniform(-2, 2);
  for (double& v : in.a.storage()) {
    if (std::isfinite(v)) v = rng.uniform(-2, 2);
  }
  return in;
}

void BM_LogPartition(benchmark::State& state) {
  const auto in = random_crf(static_cast<std::size_t>(state.range(0)), kNumTags);
  for (auto _ : state) benchmark::DoNotOptimize(crf::log_partition(in.e, in.a));
}
BENCHMARK(BM_LogPartition)->Arg(10)->Arg(40)->Arg(160);

void BM_Viterbi(benchmark::State& state) {
  const auto in = random_crf(static_cast<std::size_t>(state.range(0)), kNumTags);
  for (auto _ : state) benchmark::DoNotOptimize(crf::viterbi_decode(in.e, in.a));
}
BENCHMARK(BM_Viterbi)->Arg(10)->Arg(40)->Arg(160);

const TaggedCorpus& toy_corpus() {
  static const TaggedCorpus corpus = [] {
    const auto src = synth::generate(synth::toy_spec(7));
    return agreement::build_single(src.threads, src.g1, 5).corpus;
  }();
  return corpus;
}

void BM_Predict(benchmark::State& state) {
  const auto v = static_cast<Variant>(state.range(0));
  TaggerConfig c = TaggerConfig::for_variant(v);
  c.min_word_count = 1;
  num::Rng rng(c.seed);
  const auto model = make_model<float>(c, toy_corpus(), nullptr, rng);
  for (auto _ : state) benchmark::DoNotOptimize(predict_corpus(*model, toy_corpus()));
  state.SetLabel(std::string(to_string(v)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(toy_corpus().size()));
}
BENCHMARK(BM_Predict)->DenseRange(0, static_cast<int>(kVariants.size()) - 1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
