#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "command.hpp"
#include "forumtag/agreement.hpp"
#include "forumtag/corpus_io.hpp"
#include "forumtag/error.hpp"
#include "forumtag/evaluation.hpp"
#include "forumtag/synth.hpp"
#include "forumtag/train.hpp"

using forumtag::cli::Command;
using nlohmann::json;
namespace ft = forumtag;

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ft::IoError("cannot write " + path);
  out << text;
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

std::unique_ptr<ft::SequenceModel<float>> load_model(const std::string& path) {
  return ft::model_from_checkpoint(ft::num::load_checkpoint(path));
}

std::string span_text(const ft::Sentence& s, const ft::Span& span) {
  std::string out;
  for (std::size_t i = span.start; i < span.end && i < s.size(); ++i) {
    out += (out.empty() ? "" : " ") + s.tokens[i].text;
  }
  return out;
}

// ---------------------------------------------------------------------------

struct CorpusBuild {
  explicit CorpusBuild(CLI::App& app) : cmd(app, "corpus-build", "Normalize a thread file into sentence lists") {
    cmd.option("--input", input, "Thread JSONL; posts may be strings or sentence lists")->required();
    cmd.option("--out", out, "Normalized thread JSONL")->required();
  }

  int run() {
    cmd.resolve();
    const auto threads = ft::read_threads(input);
    std::size_t posts = 0, sentences = 0, tokens = 0;
    for (const auto& t : threads) {
      posts += t.posts.size();
      for (const auto& s : ft::unfold_thread(t)) {
        ++sentences;
        tokens += s.size();
      }
    }
    ft::write_threads(out, threads);
    const json stats = {{"threads", threads.size()}, {"posts", posts}, {"sentences", sentences}, {"tokens", tokens}};
    if (cmd.json) {
      print_json(stats);
    } else {
      std::cout << "threads " << threads.size() << "  posts " << posts << "  sentences " << sentences
                << "  tokens " << tokens << "\nwrote " << out << '\n';
    }
    return 0;
  }

  Command cmd;
  std::string input, out;
};

struct Agreement {
  explicit Agreement(CLI::App& app) : cmd(app, "agreement", "Positive specific agreement between two groups") {
    cmd.option("--g1", g1, "Group 1 standoff annotations")->required();
    cmd.option("--g2", g2, "Group 2 standoff annotations")->required();
  }

  int run() {
    cmd.resolve();
    const auto a = ft::read_standoff(g1, 1);
    const auto b = ft::read_standoff(g2, 2);
    const auto report = ft::agreement::tally(ft::agreement::compare_groups(a, b));
    if (cmd.json) {
      print_json(ft::agreement::to_json(report));
      return 0;
    }
    std::cout << std::left << std::setw(14) << "type" << std::right << std::setw(8) << "G1" << std::setw(8) << "G2"
              << std::setw(8) << "AG" << std::setw(8) << "TD" << std::setw(8) << "Union" << std::setw(9) << "P_pos"
              << '\n';
    auto row = [](const std::string& name, const ft::agreement::AgreementCounts& c) {
      const bool any = c.g1_total() + c.g2_total() > 0;
      std::cout << std::left << std::setw(14) << name << std::right << std::setw(8) << c.g1_total() << std::setw(8)
                << c.g2_total() << std::setw(8) << c.ag << std::setw(8) << c.td << std::setw(8) << c.union_count()
                << std::setw(9) << (any ? fixed(ft::agreement::positive_specific_agreement(c), 3) : "-") << '\n';
    };
    for (ft::ResourceType t : ft::kResourceTypes) row(std::string(ft::to_string(t)), report.of(t));
    row("Total", report.total);
    return 0;
  }

  Command cmd;
  std::string g1, g2;
};

struct DatasetBuild {
  explicit DatasetBuild(CLI::App& app) : cmd(app, "dataset-build", "Build a tagged corpus from annotations") {
    cmd.app()
        ->add_option("policy", policy, "form-m (agreed spans), form-l (union), or gold (single key)")
        ->required()
        ->check(CLI::IsMember({"form-m", "form-l", "gold"}));
    cmd.option("--threads", threads, "Thread JSONL")->required();
    cmd.option("--g1", g1, "Group 1 standoff annotations (form-m, form-l)");
    cmd.option("--g2", g2, "Group 2 standoff annotations (form-m, form-l)");
    cmd.option("--gold", gold, "Single standoff key (gold)");
    cmd.option("--context-cap", context_cap, "Context sentences per example");
    cmd.flag("--keep-unlabeled", keep_unlabeled, "Keep sentences without mentions (gold)");
    cmd.option("--out", out, "Tagged corpus column file")->required();
  }

  int run() {
    cmd.resolve();
    const auto th = ft::read_threads(threads);
    ft::agreement::Dataset ds;
    if (policy == "gold") {
      if (gold.empty()) throw ft::ValidationError("dataset-build gold needs --gold");
      ds = ft::agreement::build_single(th, ft::read_standoff(gold, 1), context_cap, keep_unlabeled);
    } else {
      if (g1.empty() || g2.empty()) throw ft::ValidationError("dataset-build " + policy + " needs --g1 and --g2");
      const auto merge =
          policy == "form-m" ? ft::agreement::MergePolicy::IntersectionM : ft::agreement::MergePolicy::UnionL;
      ds = ft::agreement::build_dataset(th, ft::read_standoff(g1, 1), ft::read_standoff(g2, 2), merge, context_cap);
    }
    ft::write_tagged_corpus(out, ds.corpus);
    std::size_t tokens = 0;
    for (const auto& ex : ds.corpus) tokens += ex.sentence.size();
    const json summary = {{"policy", policy},
                          {"sentences", ds.corpus.size()},
                          {"tokens", tokens},
                          {"mentions", ds.mentions.size()},
                          {"warnings", ds.warnings},
                          {"agreement", ft::agreement::to_json(ds.counts)},
                          {"fingerprint", ft::eval::fingerprint(ds.corpus)}};
    if (cmd.json) {
      print_json(summary);
    } else {
      std::cout << policy << ": " << ds.corpus.size() << " sentences, " << tokens << " tokens, " << ds.mentions.size()
                << " mentions, " << ds.warnings.size() << " warnings\n";
      for (const auto& w : ds.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "wrote " << out << '\n';
    }
    return 0;
  }

  Command cmd;
  std::string policy, threads, g1, g2, gold, out;
  std::size_t context_cap = 5;
  bool keep_unlabeled = false;
};

// Hyperparameter flags shared by train and gradcheck; each maps to the
// TaggerConfig key of the same name.
void add_model_tunables(Command& cmd) {
  cmd.tunable<std::size_t>("--word-dim", "Word embedding size");
  cmd.tunable<std::size_t>("--char-dim", "Character embedding size");
  cmd.tunable<std::size_t>("--char-hidden", "Character LSTM state size");
  cmd.tunable<std::size_t>("--hidden", "Word LSTM state size");
  cmd.tunable<std::size_t>("--context-hidden", "Context GRU state size");
  cmd.tunable<std::size_t>("--attention-dim", "Attention size");
  cmd.tunable<std::size_t>("--context-cap", "Context sentences attended");
  cmd.tunable<std::size_t>("--min-word-count", "Vocabulary frequency cut-off");
  cmd.tunable<double>("--learning-rate", "ADAM step size");
  cmd.tunable<std::size_t>("--batch-size", "Minibatch size");
  cmd.tunable<std::size_t>("--max-epochs", "Epoch limit");
  cmd.tunable<std::size_t>("--patience", "Epochs without improvement before stopping (0 disables)");
  cmd.tunable<double>("--validation-fraction", "Held-out share (0 validates on training data)");
  cmd.tunable<double>("--clip-norm", "Gradient norm clip (0 disables)");
  cmd.tunable<double>("--target-f1", "Stop once validation F1 reaches this (0 disables)");
  cmd.tunable<double>("--l2", "Feature CRF L2 weight");
  cmd.tunable<std::size_t>("--feature-min-count", "Feature CRF frequency cut-off");
  cmd.tunable_flag("--softmax-emissions", "Normalize emissions before the CRF");
  cmd.tunable_flag("--bio-constraints", "Forbid illegal BIO transitions");
  cmd.tunable_flag("--freeze-embeddings", "Keep word embeddings fixed");
}

ft::TaggerConfig resolve_model_config(Command& cmd, const std::string& variant, ft::TaggerConfig base) {
  json file = cmd.resolve(true);
  if (!variant.empty()) file["variant"] = variant;
  if (file.contains("variant")) {
    const auto v = ft::parse_variant(file["variant"].get<std::string>());
    if (!v) throw ft::ValidationError("unknown variant '" + file["variant"].get<std::string>() + "'");
    const auto switches = ft::TaggerConfig::for_variant(*v);
    base.feature_model = switches.feature_model;
    base.use_crf = switches.use_crf;
    base.use_char_encoder = switches.use_char_encoder;
    base.use_context_attention = switches.use_context_attention;
    file.erase("variant");
  }
  ft::TaggerConfig config = ft::config_from_json(file, base);
  config = ft::config_from_json(cmd.overrides(), config);
  config.seed = cmd.seed;
  config.validate();
  return config;
}

struct Train {
  explicit Train(CLI::App& app) : cmd(app, "train", "Train a tagger") {
    cmd.option("--variant", variant, "blstm, crf, blstm-crf, blstm-crf-ce, blstm-crf-ce-ca");
    cmd.option("--corpus", corpus, "Tagged corpus column file")->required();
    cmd.option("--vectors", vectors, "Pretrained word vectors (text format)");
    cmd.option("--out", out, "Checkpoint path");
    cmd.option("--log", log, "Epoch log JSONL (default <out>.log.jsonl)");
    cmd.option("--folds", folds, "Cross-validation folds instead of a single model (0 off)");
    add_model_tunables(cmd);
  }

  int run() {
    ft::TaggerConfig base = ft::TaggerConfig::for_variant(ft::Variant::BlstmCrfCeCa);
    const ft::TaggerConfig config = resolve_model_config(cmd, variant, base);
    const auto data = ft::read_tagged_corpus(corpus);
    ft::enc::PretrainedVectors pv;
    if (!vectors.empty()) pv = ft::enc::read_pretrained_vectors(vectors, config.word_dim);
    const ft::enc::PretrainedVectors* pretrained = vectors.empty() ? nullptr : &pv;

    if (folds > 0) {
      const auto cv = ft::cross_validate(config, data, folds, pretrained);
      json j = {{"variant", ft::to_string(config.variant())}, {"config_hash", ft::config_hash(config)}};
      for (const auto& f : cv.folds) j["folds"].push_back({{"precision", f.precision}, {"recall", f.recall}, {"f1", f.f1}});
      j["mean"] = {{"precision", cv.mean.precision}, {"recall", cv.mean.recall}, {"f1", cv.mean.f1}};
      if (cmd.json) {
        print_json(j);
      } else {
        for (std::size_t i = 0; i < cv.folds.size(); ++i) {
          std::cout << "fold " << i + 1 << "  P " << fixed(100 * cv.folds[i].precision, 2) << "  R "
                    << fixed(100 * cv.folds[i].recall, 2) << "  F1 " << fixed(100 * cv.folds[i].f1, 2) << '\n';
        }
        std::cout << "mean    P " << fixed(100 * cv.mean.precision, 2) << "  R " << fixed(100 * cv.mean.recall, 2)
                  << "  F1 " << fixed(100 * cv.mean.f1, 2) << '\n';
      }
      return 0;
    }

    if (out.empty()) throw ft::ValidationError("train needs --out (or --folds)");
    const std::string log_path = log.empty() ? out + ".log.jsonl" : log;
    std::ofstream log_out(log_path, std::ios::binary);
    if (!log_out) throw ft::IoError("cannot write " + log_path);
    auto result = ft::train<float>(config, data, pretrained, &log_out);
    ft::num::save_checkpoint(out, ft::to_checkpoint(*result.model));

    std::size_t n_params = 0;
    for (const auto& p : result.model->params()) n_params += p->value.size();
    const json j = {{"variant", ft::to_string(config.variant())},
                    {"config_hash", ft::config_hash(config)},
                    {"parameters", n_params},
                    {"epochs", result.summary.log.size()},
                    {"best_epoch", result.summary.best_epoch},
                    {"best_validation_f1", result.summary.best_f1},
                    {"checkpoint", out},
                    {"log", log_path}};
    if (cmd.json) {
      print_json(j);
    } else {
      std::cout << ft::to_string(config.variant()) << ": " << result.summary.log.size() << " epochs, best epoch "
                << result.summary.best_epoch << ", validation F1 " << fixed(100 * result.summary.best_f1, 2) << ", "
                << n_params << " parameters\nwrote " << out << " and " << log_path << '\n';
    }
    return 0;
  }

  Command cmd;
  std::string variant, corpus, vectors, out, log;
  std::size_t folds = 0;
};

struct Evaluate {
  explicit Evaluate(CLI::App& app) : cmd(app, "evaluate", "Score a model on a tagged corpus") {
    cmd.option("--model", model, "Checkpoint")->required();
    cmd.option("--corpus", corpus, "Tagged corpus column file")->required();
    cmd.option("--vectors", vectors, "Pretrained vectors defining OOV words (default: model vocabulary)");
    cmd.option("--gold-key", gold_key, "Synthetic gold key with mention kinds");
    cmd.option("--out", out, "Report path (default stdout)");
  }

  int run() {
    cmd.resolve();
    const auto m = load_model(model);
    const auto data = ft::read_tagged_corpus(corpus);
    const auto pred = ft::predict_corpus(*m, data);

    ft::eval::VocabPredicate in_vocab;
    ft::enc::PretrainedVectors pv;
    if (!vectors.empty()) {
      pv = ft::enc::read_pretrained_vectors(vectors);
      in_vocab = [&pv](std::string_view w) { return pv.contains(w); };
    } else {
      in_vocab = ft::vocabulary_predicate(*m);
    }
    const auto report = ft::eval::evaluate(data, pred, in_vocab, ft::config_hash(m->config()));

    std::optional<std::array<ft::synth::KindScore, 3>> kinds;
    if (!gold_key.empty()) {
      std::ifstream in(gold_key);
      if (!in) throw ft::IoError("cannot open " + gold_key);
      kinds = ft::synth::kind_breakdown(data, pred, ft::synth::read_gold(in, gold_key));
    }

    std::string text;
    if (cmd.json) {
      json j = ft::eval::to_json(report);
      if (kinds) j["mention_kinds"] = ft::synth::to_json(*kinds);
      text = j.dump(2) + "\n";
    } else {
      text = ft::eval::to_text(report);
      if (kinds) {
        text += "\nplanted kind   mentions  exact   ratio  token recall\n";
        for (std::size_t i = 0; i < kinds->size(); ++i) {
          const auto& k = (*kinds)[i];
          char line[128];
          std::snprintf(line, sizeof line, "%-13s %9zu %6zu %7s %13s\n",
                        std::string(ft::synth::to_string(static_cast<ft::synth::MentionKind>(i))).c_str(), k.mentions,
                        k.exact, fixed(100 * k.exact_ratio(), 2).c_str(), fixed(100 * k.token_recall(), 2).c_str());
          text += line;
        }
      }
    }
    emit(out, text);
    return 0;
  }

  Command cmd;
  std::string model, corpus, vectors, gold_key, out;
};

struct Tag {
  explicit Tag(CLI::App& app) : cmd(app, "tag", "Tag every sentence of a thread file") {
    cmd.option("--model", model, "Checkpoint")->required();
    cmd.option("--threads", threads, "Thread JSONL")->required();
    cmd.option("--out", out, "Output path (default stdout)");
    cmd.flag("--attention", attention, "Include attention weights (JSON output)");
  }

  int run() {
    cmd.resolve();
    const auto m = load_model(model);
    const std::size_t cap = m->config().context_cap;
    std::string text;
    for (const auto& thread : ft::read_threads(threads)) {
      const auto sentences = ft::unfold_thread(thread);
      for (std::size_t i = 0; i < sentences.size(); ++i) {
        const auto& s = sentences[i];
        if (s.tokens.empty()) continue;
        const auto context = ft::context_window(sentences, i, cap);
        const auto p = m->predict(s, context);
        const auto decoded = ft::bio_decode(p.tags, i);
        if (cmd.json) {
          json j = {{"thread_id", thread.thread_id}, {"sentence", i}, {"tokens", s.words()}};
          for (ft::Tag t : p.tags) j["tags"].push_back(ft::to_string(t));
          j["mentions"] = json::array();
          for (const auto& mention : decoded.mentions) {
            j["mentions"].push_back({{"start", mention.span.start},
                                     {"end", mention.span.end},
                                     {"type", ft::to_string(mention.type)},
                                     {"text", span_text(s, mention.span)}});
          }
          if (attention) {
            j["attention_forward"] = p.attention_forward;
            j["attention_backward"] = p.attention_backward;
          }
          text += j.dump() + "\n";
        } else {
          std::string line = thread.thread_id + "\t" + std::to_string(i) + "\t";
          for (std::size_t t = 0; t < s.size(); ++t) {
            line += (t ? " " : "") + s.tokens[t].text;
            if (p.tags[t] != ft::Tag::O) line += "/" + std::string(ft::to_string(p.tags[t]));
          }
          text += line + "\n";
        }
      }
    }
    emit(out, text);
    return 0;
  }

  Command cmd;
  std::string model, threads, out;
  bool attention = false;
};

struct AnalyzeErrors {
  explicit AnalyzeErrors(CLI::App& app) : cmd(app, "analyze-errors", "Six-way error taxonomy with examples") {
    cmd.option("--model", model, "Checkpoint")->required();
    cmd.option("--corpus", corpus, "Tagged corpus column file")->required();
    cmd.option("--examples", examples, "Examples listed per category");
    cmd.option("--out", out, "Report path (default stdout)");
  }

  int run() {
    cmd.resolve();
    const auto m = load_model(model);
    const auto data = ft::read_tagged_corpus(corpus);
    const auto pred = ft::predict_corpus(*m, data);
    const auto report = ft::eval::evaluate(data, pred, {}, ft::config_hash(m->config()));

    std::array<std::vector<json>, ft::eval::kNumCategories> samples;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& s = data[i].sentence;
      const auto gold = ft::bio_decode(data[i].tags, s.sentence_index).mentions;
      const auto guess = ft::bio_decode(pred[i], s.sentence_index).mentions;
      for (const auto& pair : ft::eval::categorize_prediction(gold, guess)) {
        auto& bucket = samples[static_cast<std::size_t>(pair.category)];
        if (pair.category == ft::eval::ErrorCategory::ExactlyCorrect || bucket.size() >= examples) continue;
        json e = {{"thread_id", data[i].thread_id}, {"sentence", s.sentence_index}};
        std::string sentence_text;
        for (const auto& t : s.tokens) sentence_text += (sentence_text.empty() ? "" : " ") + t.text;
        e["text"] = sentence_text;
        if (pair.gold) e["gold"] = {{"text", span_text(s, pair.gold->span)}, {"type", ft::to_string(pair.gold->type)}};
        if (pair.pred) e["pred"] = {{"text", span_text(s, pair.pred->span)}, {"type", ft::to_string(pair.pred->type)}};
        bucket.push_back(std::move(e));
      }
    }

    std::string text;
    if (cmd.json) {
      json j;
      j["config_hash"] = report.config_hash;
      j["corpus_fingerprint"] = report.corpus_fingerprint;
      for (std::size_t c = 0; c < ft::eval::kNumCategories; ++c) {
        const std::string name(ft::eval::to_string(static_cast<ft::eval::ErrorCategory>(c)));
        j["total"][name] = report.errors.total[c];
        for (ft::ResourceType t : ft::kResourceTypes) {
          j["by_type"][std::string(ft::to_string(t))][name] = report.errors.by_type[static_cast<std::size_t>(t)][c];
        }
        j["examples"][name] = samples[c];
      }
      text = j.dump(2) + "\n";
    } else {
      std::ostringstream o;
      o << std::left << std::setw(24) << "category";
      for (ft::ResourceType t : ft::kResourceTypes) o << std::right << std::setw(13) << ft::to_string(t);
      o << std::setw(8) << "Total" << '\n';
      for (std::size_t c = 0; c < ft::eval::kNumCategories; ++c) {
        o << std::left << std::setw(24) << ft::eval::to_string(static_cast<ft::eval::ErrorCategory>(c));
        for (ft::ResourceType t : ft::kResourceTypes) {
          o << std::right << std::setw(13) << report.errors.by_type[static_cast<std::size_t>(t)][c];
        }
        o << std::setw(8) << report.errors.total[c] << '\n';
      }
      for (std::size_t c = 1; c < ft::eval::kNumCategories; ++c) {
        if (samples[c].empty()) continue;
        o << '\n' << ft::eval::to_string(static_cast<ft::eval::ErrorCategory>(c)) << ":\n";
        for (const auto& e : samples[c]) {
          o << "  " << e["thread_id"].get<std::string>() << ":" << e["sentence"].get<std::size_t>();
          if (e.contains("gold")) {
            o << "  gold [" << e["gold"]["text"].get<std::string>() << "] " << e["gold"]["type"].get<std::string>();
          }
          if (e.contains("pred")) {
            o << "  pred [" << e["pred"]["text"].get<std::string>() << "] " << e["pred"]["type"].get<std::string>();
          }
          o << "\n    " << e["text"].get<std::string>() << '\n';
        }
      }
      text = o.str();
    }
    emit(out, text);
    return 0;
  }

  Command cmd;
  std::string model, corpus, out;
  std::size_t examples = 5;
};

struct GradCheck {
  explicit GradCheck(CLI::App& app) : cmd(app, "gradcheck", "Finite-difference check of the model loss") {
    cmd.option("--variant", variant, "Model variant");
    cmd.option("--step", step, "Central difference step");
    cmd.option("--samples", samples, "Coordinates per parameter tensor (0 checks all)");
    cmd.option("--threshold", threshold, "Largest accepted relative error");
    add_model_tunables(cmd);
  }

  int run() {
    const ft::TaggerConfig config =
        resolve_model_config(cmd, variant, ft::gradcheck_config(ft::Variant::BlstmCrfCeCa));
    ft::num::GradCheckOptions options;
    options.step = step;
    options.samples_per_param = samples;
    options.seed = cmd.seed;
    const auto r = ft::check_model_gradients(config, ft::gradcheck_example(), options);
    const bool ok = r.max_rel_error < threshold;
    if (cmd.json) {
      print_json({{"variant", ft::to_string(config.variant())},
                  {"max_rel_error", r.max_rel_error},
                  {"worst_param", r.worst_param},
                  {"worst_index", r.worst_index},
                  {"analytic", r.worst_analytic},
                  {"numeric", r.worst_numeric},
                  {"checked", r.checked},
                  {"threshold", threshold},
                  {"passed", ok}});
    } else {
      std::ostringstream e;
      e << std::scientific << std::setprecision(3) << r.max_rel_error;
      std::cout << ft::to_string(config.variant()) << ": max relative error " << e.str() << " over " << r.checked
                << " coordinates (worst " << r.worst_param << "[" << r.worst_index << "]) "
                << (ok ? "PASS" : "FAIL") << '\n';
    }
    return ok ? 0 : 1;
  }

  Command cmd;
  std::string variant;
  double step = 1e-4;
  std::size_t samples = 0;
  double threshold = 1e-4;
};

struct SynthGen {
  explicit SynthGen(CLI::App& app) : cmd(app, "synth-gen", "Generate a synthetic annotated corpus") {
    cmd.option("--out", out, "Output directory")->required();
    cmd.flag("--toy", toy, "Start from the 50-sentence overfit preset");
    cmd.tunable<std::size_t>("--threads", "Thread count (ignored with --target-sentences)");
    cmd.tunable<std::size_t>("--target-sentences", "Exact number of labeled sentences");
    cmd.tunable<std::size_t>("--min-sentences", "Fewest planned sentences per thread");
    cmd.tunable<std::size_t>("--max-sentences", "Most planned sentences per thread");
    cmd.tunable<std::size_t>("--max-post-sentences", "Most sentences per post");
    cmd.tunable<double>("--mention-rate", "Share of sentences with a mention slot");
    cmd.tunable<double>("--second-clause-rate", "Share of mention sentences with a second clause");
    cmd.tunable<double>("--oov-fraction", "Share of OOV-template mentions");
    cmd.tunable<double>("--anaphoric-fraction", "Share of anaphoric mentions");
    cmd.tunable<double>("--valid-anaphor-rate", "Share of anaphors given an antecedent");
    cmd.tunable<double>("--distractor-ratio", "OOV look-alike distractors per OOV mention");
    cmd.tunable<std::size_t>("--window", "Antecedent window in sentences");
    cmd.tunable<double>("--drop-rate", "Group 2 mention drop rate");
    cmd.tunable<double>("--type-flip-rate", "Group 2 type flip rate");
    cmd.tunable<double>("--span-shift-rate", "Group 2 span shift rate");
    cmd.tunable<std::size_t>("--vector-dim", "Pretrained vector size");
  }

  int run() {
    const json file = cmd.resolve(true);
    ft::synth::SynthSpec spec = toy ? ft::synth::toy_spec(cmd.seed) : ft::synth::SynthSpec{};
    spec = ft::synth::spec_from_json(file, spec);
    spec = ft::synth::spec_from_json(cmd.overrides(), spec);
    spec.seed = cmd.seed;
    spec.validate();
    const auto corpus = ft::synth::generate(spec);
    ft::synth::write_corpus(out, corpus);
    {
      std::ofstream f(std::filesystem::path(out) / "spec.json", std::ios::binary);
      f << ft::synth::to_json(spec).dump(2) << '\n';
    }
    if (cmd.json) {
      print_json(corpus.stats());
    } else {
      const auto s = corpus.stats();
      std::cout << s["threads"] << " threads, " << s["sentences"] << " sentences (" << s["labeled_sentences"]
                << " labeled), " << s["gold_mentions"] << " gold mentions\nwrote " << out << '\n';
    }
    return 0;
  }

  Command cmd;
  std::string out;
  bool toy = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resource mention tagging for course forum threads"};
  app.require_subcommand(1);
  CorpusBuild corpus_build(app);
  Agreement agreement(app);
  DatasetBuild dataset_build(app);
  Train train(app);
  Evaluate evaluate(app);
  Tag tag(app);
  AnalyzeErrors analyze_errors(app);
  GradCheck gradcheck(app);
  SynthGen synth_gen(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (corpus_build.cmd.chosen()) return corpus_build.run();
    if (agreement.cmd.chosen()) return agreement.run();
    if (dataset_build.cmd.chosen()) return dataset_build.run();
    if (train.cmd.chosen()) return train.run();
    if (evaluate.cmd.chosen()) return evaluate.run();
    if (tag.cmd.chosen()) return tag.run();
    if (analyze_errors.cmd.chosen()) return analyze_errors.run();
    if (gradcheck.cmd.chosen()) return gradcheck.run();
    if (synth_gen.cmd.chosen()) return synth_gen.run();
  } catch (const ft::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
