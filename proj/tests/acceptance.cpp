// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// selected criterion fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crf_oracle.hpp"
#include "forumtag/agreement.hpp"
#include "forumtag/corpus_io.hpp"
#include "forumtag/crf.hpp"
#include "forumtag/evaluation.hpp"
#include "forumtag/synth.hpp"
#include "forumtag/train.hpp"
#include "properties.hpp"

using namespace forumtag;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  double limit_seconds = 0.0;  // 0: no runtime bound
};

std::string fixed(double v, int digits = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

std::string sci(double v) {
  std::ostringstream out;
  out << std::scientific << std::setprecision(2) << v;
  return out.str();
}

// ---------------------------------------------------------------------------

Outcome agreement_table() {
  struct Row {
    const char* name;
    std::size_t g1, g2, inter, uni;
    double p_pos;
  };
  const Row rows[] = {{"Assessments", 8047, 8520, 5451, 11116, 0.658},
                      {"Exams", 1891, 3624, 1146, 4369, 0.416},
                      {"Videos", 1852, 3037, 1236, 3653, 0.506},
                      {"Coursewares", 3281, 4286, 1557, 6010, 0.412},
                      {"Total", 15071, 19467, 9390, 25148, 0.544}};
  Outcome o{true, "", 1.0};
  double worst = 0.0;
  for (const auto& r : rows) {
    const auto c = agreement::AgreementCounts::from_totals(r.g1, r.g2, r.inter);
    const double p = agreement::positive_specific_agreement(c);
    worst = std::max(worst, std::abs(p - r.p_pos));
    if (std::abs(p - r.p_pos) > 0.001 || c.union_count() != r.uni) {
      o.pass = false;
      o.detail += std::string(r.name) + " P_pos " + fixed(p, 4) + " union " + std::to_string(c.union_count()) + "; ";
    }
  }
  o.detail += "5 rows, max |P_pos diff| " + fixed(worst, 5) + ", unions exact";
  return o;
}

Outcome metric_identities() {
  using T = Tag;
  const eval::TagSequences gold{{T::Assessments_B, T::Assessments_I, T::Exams_B, T::O, T::Videos_B, T::Videos_I}};
  const eval::TagSequences pred{{T::Assessments_B, T::Assessments_I, T::Exams_B, T::Exams_B, T::O, T::O}};
  const auto c = eval::confusion(gold, pred);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < kNumTags; ++i) {
    tp += c.tp[i];
    fp += c.fp[i];
    fn += c.fn[i];
  }
  const auto prf = eval::micro_prf(gold, pred);
  const auto table5 = eval::PRF::from_pr(72.91, 79.20);
  Outcome o;
  o.pass = tp == 3 && fp == 1 && fn == 2 && prf.precision == 0.75 && prf.recall == 0.6 &&
           std::abs(prf.f1 - 2.0 / 3.0) < 1e-12 && std::abs(table5.f1 - 75.92) <= 0.05;
  o.detail = "TP/FP/FN " + std::to_string(tp) + "/" + std::to_string(fp) + "/" + std::to_string(fn) + " -> P " +
             fixed(prf.precision) + " R " + fixed(prf.recall) + " F1 " + fixed(prf.f1) + "; F1(72.91, 79.20) = " +
             fixed(table5.f1, 2);
  return o;
}

Outcome crf_oracle() {
  num::Rng rng(2024);
  double worst_z = 0.0;
  std::size_t viterbi_mismatch = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t len = 1 + rng.below(5), k = 1 + rng.below(5);
    num::Tensor<double> e(num::Shape{len, k});
    for (double& v : e.storage()) v = rng.uniform(-3, 3);
    auto a = crf::make_transitions<double>(k);
    for (double& v : a.storage()) {
      if (std::isfinite(v)) v = rng.uniform(-3, 3);
    }
    const auto oracle = testing::brute_force_oracle(e, a);
    worst_z = std::max(worst_z, std::abs(crf::log_partition(e, a) - oracle.log_partition));
    if (crf::viterbi_decode(e, a).tags != oracle.best) ++viterbi_mismatch;
  }
  Outcome o{worst_z < 1e-8 && viterbi_mismatch == 0, "", 30.0};
  o.detail = "200 instances, max |logZ diff| " + sci(worst_z) + ", Viterbi mismatches " +
             std::to_string(viterbi_mismatch);
  return o;
}

Outcome gradient_check() {
  const TaggerConfig config = gradcheck_config(Variant::BlstmCrfCeCa);
  const auto ex = gradcheck_example();
  const auto r = check_model_gradients(config, ex);
  Outcome o{r.max_rel_error < 1e-4 && r.checked > 0, "", 60.0};
  o.detail = "BLSTM-CRF-CE-CA, " + std::to_string(ex.sentence.size()) + " tokens, " +
             std::to_string(ex.context.size()) + " context sentences, " + std::to_string(r.checked) +
             " coordinates, max rel error " + sci(r.max_rel_error) + " (" + r.worst_param + ")";
  return o;
}

Outcome overfit() {
  synth::SynthSpec spec = synth::toy_spec(7);
  spec.vector_dim = TaggerConfig{}.word_dim;
  const auto source = synth::generate(spec);
  const auto corpus = agreement::build_single(source.threads, source.g1, spec.window).corpus;
  Outcome o{corpus.size() == 50, "", 600.0};
  for (Variant v : kVariants) {
    TaggerConfig c = TaggerConfig::for_variant(v);
    c.min_word_count = 1;
    c.validation_fraction = 0.0;
    c.target_f1 = 0.99;
    c.max_epochs = 200;
    c.patience = 0;
    c.seed = 5;
    std::ostringstream log1, log2;
    const auto r1 = train<float>(c, corpus, &source.vectors, &log1);
    const auto r2 = train<float>(c, corpus, &source.vectors, &log2);
    const double f1 = score(*r1.model, corpus).f1;
    const bool same = log1.str() == log2.str();
    o.pass = o.pass && f1 >= 0.99 && same;
    o.detail += std::string(to_string(v)) + " " + fixed(f1, 3) + "@" + std::to_string(r1.summary.log.size()) +
                (same ? "" : " (logs differ)") + "; ";
  }
  o.detail += "reruns identical";
  return o;
}

struct EffectRun {
  double oov_exact = 0.0;
  double anaphoric_recall = 0.0;
  double micro_f1 = 0.0;
  std::size_t epochs = 0;
};

Outcome direction_of_effect(std::ostream& log) {
  synth::SynthSpec train_spec;
  train_spec.seed = 1;
  train_spec.target_sentences = 2000;
  synth::SynthSpec test_spec = train_spec;
  test_spec.seed = 2;
  test_spec.target_sentences = 400;
  const auto train_src = synth::generate(train_spec);
  const auto test_src = synth::generate(test_spec);
  auto gold_of = [](const synth::SynthCorpus& c) {
    std::vector<AnnotatedMention> out;
    for (const auto& g : c.gold) out.push_back(g.mention);
    return out;
  };
  const auto train_set = agreement::build_single(train_src.threads, gold_of(train_src), train_spec.window).corpus;
  const auto test_set = agreement::build_single(test_src.threads, gold_of(test_src), test_spec.window).corpus;
  const auto& vectors = train_src.vectors;
  const eval::VocabPredicate in_vectors = [&vectors](std::string_view w) { return vectors.contains(w); };

  auto run = [&](Variant v) {
    TaggerConfig c = TaggerConfig::for_variant(v);
    c.word_dim = train_spec.vector_dim;
    c.char_dim = 16;
    c.char_hidden = 32;
    c.hidden = 64;
    c.context_hidden = 64;
    c.attention_dim = 64;
    c.max_epochs = 10;
    c.patience = 3;
    c.seed = 1;
    const auto result = train<float>(c, train_set, &vectors);
    const auto pred = predict_corpus(*result.model, test_set);
    const auto report = eval::evaluate(test_set, pred, in_vectors);
    const auto kinds = synth::kind_breakdown(test_set, pred, test_src.gold);
    EffectRun r;
    r.oov_exact = report.oov ? report.oov->oov.ratio() : 0.0;
    r.anaphoric_recall = kinds[static_cast<std::size_t>(synth::MentionKind::Anaphoric)].token_recall();
    r.micro_f1 = report.micro.f1;
    r.epochs = result.summary.log.size();
    log << "    " << to_string(v) << ": micro F1 " << fixed(100 * r.micro_f1, 2) << ", OOV exact "
        << fixed(100 * r.oov_exact, 2) << " (" << (report.oov ? report.oov->oov.total : 0) << " mentions), anaphoric recall "
        << fixed(100 * r.anaphoric_recall, 2) << ", " << r.epochs << " epochs\n";
    return r;
  };
  const auto base = run(Variant::BlstmCrf);
  const auto ce = run(Variant::BlstmCrfCe);
  const auto ca = run(Variant::BlstmCrfCeCa);
  const double gain_oov = 100 * (ce.oov_exact - base.oov_exact);
  const double gain_ana = 100 * (ca.anaphoric_recall - ce.anaphoric_recall);
  Outcome o{gain_oov >= 5.0 && gain_ana >= 5.0, "", 3600.0};
  o.detail = "train " + std::to_string(train_set.size()) + " / test " + std::to_string(test_set.size()) +
             " sentences; (a) OOV exact +CE vs BLSTM-CRF " + fixed(100 * ce.oov_exact, 2) + " vs " +
             fixed(100 * base.oov_exact, 2) + " (+" + fixed(gain_oov, 2) + "); (b) anaphoric recall +CE-CA vs +CE " +
             fixed(100 * ca.anaphoric_recall, 2) + " vs " + fixed(100 * ce.anaphoric_recall, 2) + " (+" +
             fixed(gain_ana, 2) + ")";
  return o;
}

Outcome properties() {
  num::Rng rng(7);
  std::size_t bio_fail = 0, cat_fail = 0;
  std::string first;
  for (int i = 0; i < 10000; ++i) {
    const auto why = testing::check_bio_roundtrip(rng);
    if (!why.empty() && bio_fail++ == 0) first = why;
  }
  for (int i = 0; i < 10000; ++i) {
    const auto why = testing::check_taxonomy_partition(rng);
    if (!why.empty() && cat_fail++ == 0) first = why;
  }
  Outcome o{bio_fail == 0 && cat_fail == 0, "", 0.0};
  o.detail = "BIO roundtrip 10000 cases, " + std::to_string(bio_fail) + " failures; taxonomy 10000 cases, " +
             std::to_string(cat_fail) + " failures" + (first.empty() ? "" : " (" + first + ")");
  return o;
}

// synth-gen -> dataset-build -> train -> evaluate, through files.
std::string pipeline(const std::filesystem::path& dir) {
  std::filesystem::remove_all(dir);
  synth::SynthSpec spec = synth::toy_spec(11);
  synth::write_corpus((dir / "synth").string(), synth::generate(spec));

  const auto threads = read_threads((dir / "synth" / "threads.jsonl").string());
  const auto g1 = read_standoff((dir / "synth" / "g1.tsv").string(), 1);
  const auto g2 = read_standoff((dir / "synth" / "g2.tsv").string(), 2);
  const auto ds = agreement::build_dataset(threads, g1, g2, agreement::MergePolicy::IntersectionM, 5);
  write_tagged_corpus((dir / "form_m.conll").string(), ds.corpus);

  const auto corpus = read_tagged_corpus((dir / "form_m.conll").string());
  const auto vectors = enc::read_pretrained_vectors((dir / "synth" / "vectors.txt").string());
  TaggerConfig c = TaggerConfig::for_variant(Variant::BlstmCrfCeCa);
  c.word_dim = vectors.dim;
  c.char_dim = 8;
  c.char_hidden = 8;
  c.hidden = 16;
  c.context_hidden = 16;
  c.attention_dim = 16;
  c.max_epochs = 4;
  c.seed = 11;
  std::ofstream log((dir / "train.log.jsonl").string(), std::ios::binary);
  auto trained = train<float>(c, corpus, &vectors, &log);
  num::save_checkpoint((dir / "model.ckpt").string(), to_checkpoint(*trained.model));

  const auto model = model_from_checkpoint(num::load_checkpoint((dir / "model.ckpt").string()));
  const auto pred = predict_corpus(*model, corpus);
  const auto report = eval::evaluate(corpus, pred, vocabulary_predicate(*model), config_hash(model->config()));
  return eval::to_text(report) + eval::to_json(report).dump(2);
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "forumtag_acceptance";
  const std::string a = pipeline(root / "a");
  const std::string b = pipeline(root / "b");
  auto bytes = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  bool files_same = true;
  for (const char* f : {"form_m.conll", "train.log.jsonl", "model.ckpt"}) {
    files_same = files_same && bytes(root / "a" / f) == bytes(root / "b" / f);
  }
  std::filesystem::remove_all(root);
  Outcome o{a == b && files_same && !a.empty(), "", 0.0};
  o.detail = "report " + std::to_string(a.size()) + " bytes, hash " + eval::hash_hex(a) + " vs " + eval::hash_hex(b) +
             (files_same ? ", corpus/log/checkpoint identical" : ", intermediate files differ");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run (default all)")->delimiter(',')->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);
  const std::set<int> chosen = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8}
                                            : std::set<int>(only.begin(), only.end());

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"agreement reproduction", agreement_table},
      {"metric identities", metric_identities},
      {"CRF oracle equivalence", crf_oracle},
      {"gradient correctness", gradient_check},
      {"overfit oracle", overfit},
      {"direction of effect", [] { return direction_of_effect(std::cout); }},
      {"BIO roundtrip and taxonomy partition", properties},
      {"determinism", determinism},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!chosen.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = o.limit_seconds <= 0.0 || secs < o.limit_seconds;
    const bool pass = o.pass && in_time;
    all = all && pass;
    std::cout << "[" << (pass ? "PASS" : "FAIL") << "] " << id << ". " << criteria[i].first << ": " << o.detail
              << " (" << fixed(secs, 2) << " s" << (o.limit_seconds > 0 ? " < " + fixed(o.limit_seconds, 0) + " s" : "")
              << (in_time ? "" : ", over time") << ")" << std::endl;
  }
  return all ? 0 : 1;
}
