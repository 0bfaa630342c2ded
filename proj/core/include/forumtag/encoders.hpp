#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forumtag/corpus.hpp"
#include "forumtag/numerics/init.hpp"
#include "forumtag/numerics/params.hpp"
#include "forumtag/numerics/rnn.hpp"

namespace forumtag::enc {

// Word <-> id map. Ids 0 and 1 are UNK and PAD.
class Vocabulary {
 public:
  static constexpr std::size_t kUnk = 0;
  static constexpr std::size_t kPad = 1;
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kPadToken = "<pad>";

  explicit Vocabulary(bool case_fold = true);

  // Rebuilds a vocabulary from its word list (ids are list positions).
  static Vocabulary from_words(std::vector<std::string> words, bool case_fold);

  // Words seen at least min_count times in the corpus (sentences and
  // contexts), plus every word of `pretrained` when given.
  static Vocabulary build(const TaggedCorpus& corpus, std::size_t min_count,
                          const std::vector<std::string>* pretrained, bool case_fold = true);

  std::string normalize(std::string_view word) const;
  std::size_t add(std::string_view word);
  std::size_t id(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& word(std::size_t id) const { return words_.at(id); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  std::size_t size() const noexcept { return words_.size(); }
  bool case_fold() const noexcept { return case_fold_; }

  std::vector<std::size_t> encode(const Sentence& s) const;

 private:
  bool case_fold_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Bytes 0x20..0x7e get ids 1..95 in code order; id 0 is the unknown char.
// Non-ASCII bytes map to the unknown char.
class CharAlphabet {
 public:
  static constexpr std::size_t kUnkChar = 0;

  std::size_t size() const noexcept { return 96; }
  std::size_t id(char c) const noexcept;
  char symbol(std::size_t id) const noexcept;
  std::vector<std::size_t> encode(std::string_view word) const;
};

struct PretrainedVectors {
  std::size_t dim = 0;
  std::vector<std::string> words;
  std::vector<float> values;  // words.size() x dim
  std::unordered_map<std::string, std::size_t> index;

  std::span<const float> vector(std::size_t i) const { return {values.data() + i * dim, dim}; }
  // Exact, then lower-cased lookup. Returns words.size() when absent.
  std::size_t find(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word) != words.size(); }
};

// One entry per line: token then `dim` numbers. expected_dim = 0 takes the
// width of the first line. Throws ParseError with a line number on malformed
// lines and on width mismatches.
PretrainedVectors read_pretrained_vectors(std::istream& in, std::size_t expected_dim = 0,
                                          const std::string& source = "<stream>");
PretrainedVectors read_pretrained_vectors(const std::string& path, std::size_t expected_dim = 0);

// Over the non-reserved vocabulary entries.
struct Coverage {
  std::size_t vocab_size = 0;
  std::size_t covered = 0;
  std::size_t oov = 0;

  double oov_ratio() const noexcept {
    return vocab_size == 0 ? 0.0 : static_cast<double>(oov) / static_cast<double>(vocab_size);
  }
};

nlohmann::json to_json(const Coverage& c);

template <typename T>
struct WordEmbeddings {
  num::Tensor<T> matrix;  // |V| x dim
  Coverage coverage;
};

// Covered rows are copied from the file, the rest drawn from init_params.
// The PAD row is zero.
template <typename T>
WordEmbeddings<T> embed_pretrained(const PretrainedVectors& pv, const Vocabulary& vocab,
                                   std::size_t dim, num::Rng& rng) {
  if (pv.dim != 0 && !pv.words.empty() && pv.dim != dim) {
    throw ValidationError("pretrained vectors have dimension " + std::to_string(pv.dim) +
                          ", model expects " + std::to_string(dim));
  }
  WordEmbeddings<T> out;
  if (vocab.size() == 0) return out;
  out.matrix = num::init_params<T>(num::Shape{vocab.size(), dim}, rng);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    auto row = out.matrix.row(i);
    if (i == Vocabulary::kPad) {
      std::fill(row.begin(), row.end(), T(0));
      continue;
    }
    if (i == Vocabulary::kUnk) continue;
    ++out.coverage.vocab_size;
    const std::size_t j = pv.find(vocab.word(i));
    if (j == pv.words.size()) {
      ++out.coverage.oov;
      continue;
    }
    ++out.coverage.covered;
    auto src = pv.vector(j);
    for (std::size_t d = 0; d < dim; ++d) row[d] = static_cast<T>(src[d]);
  }
  return out;
}

WordEmbeddings<float> load_pretrained_vectors(const std::string& path, const Vocabulary& vocab,
                                              std::size_t dim, num::Rng& rng);

template <typename T>
struct LstmCell {
  num::Parameter<T>* weight = nullptr;  // [4H x (in + H)], gates [i, f, g, o]
  num::Parameter<T>* bias = nullptr;    // [4H]
  std::size_t input = 0;
  std::size_t hidden = 0;

  static LstmCell create(num::ParamSet<T>& ps, const std::string& prefix, std::size_t input,
                         std::size_t hidden, num::Rng& rng) {
    LstmCell c;
    c.weight = &ps.add(prefix + ".W", num::init_params<T>(num::Shape{4 * hidden, input + hidden}, rng));
    c.bias = &ps.add(prefix + ".b", num::lstm_bias<T>(hidden));
    c.input = input;
    c.hidden = hidden;
    return c;
  }

  static LstmCell bind(num::ParamSet<T>& ps, const std::string& prefix) {
    LstmCell c;
    c.weight = &ps.get(prefix + ".W");
    c.bias = &ps.get(prefix + ".b");
    c.hidden = c.weight->value.rows() / 4;
    c.input = c.weight->value.cols() - c.hidden;
    return c;
  }

  // [h; c] state of zeros.
  num::Var<T> zero_state(num::Tape<T>& tape) const {
    return tape.constant(num::Tensor<T>(num::Shape{2 * hidden}));
  }

  num::Var<T> step(num::Tape<T>& tape, num::Var<T> x, num::Var<T> state) const {
    return num::lstm_step(tape.param(*weight), tape.param(*bias), x, state);
  }

  num::Var<T> hidden_of(num::Var<T> state) const { return num::slice(state, 0, hidden); }
};

template <typename T>
struct GruCell {
  num::Parameter<T>* wzr = nullptr;  // [2H x (in + H)]
  num::Parameter<T>* bzr = nullptr;  // [2H]
  num::Parameter<T>* wx = nullptr;   // [H x in]
  num::Parameter<T>* uh = nullptr;   // [H x H]
  num::Parameter<T>* bn = nullptr;   // [H]
  std::size_t input = 0;
  std::size_t hidden = 0;

  static GruCell create(num::ParamSet<T>& ps, const std::string& prefix, std::size_t input,
                        std::size_t hidden, num::Rng& rng) {
    GruCell c;
    c.wzr = &ps.add(prefix + ".Wzr", num::init_params<T>(num::Shape{2 * hidden, input + hidden}, rng));
    c.bzr = &ps.add(prefix + ".bzr", num::Tensor<T>(num::Shape{2 * hidden}));
    c.wx = &ps.add(prefix + ".Wx", num::init_params<T>(num::Shape{hidden, input}, rng));
    c.uh = &ps.add(prefix + ".Uh", num::init_params<T>(num::Shape{hidden, hidden}, rng));
    c.bn = &ps.add(prefix + ".bn", num::Tensor<T>(num::Shape{hidden}));
    c.input = input;
    c.hidden = hidden;
    return c;
  }

  static GruCell bind(num::ParamSet<T>& ps, const std::string& prefix) {
    GruCell c;
    c.wzr = &ps.get(prefix + ".Wzr");
    c.bzr = &ps.get(prefix + ".bzr");
    c.wx = &ps.get(prefix + ".Wx");
    c.uh = &ps.get(prefix + ".Uh");
    c.bn = &ps.get(prefix + ".bn");
    c.hidden = c.uh->value.rows();
    c.input = c.wx->value.cols();
    return c;
  }

  num::Var<T> step(num::Tape<T>& tape, num::Var<T> x, num::Var<T> h) const {
    return num::gru_step(tape.param(*wzr), tape.param(*bzr), tape.param(*wx), tape.param(*uh),
                         tape.param(*bn), x, h);
  }
};

// Bidirectional character LSTM; a word becomes [h_fwd_last ; h_bwd_last].
template <typename T>
struct CharEncoder {
  num::Parameter<T>* embedding = nullptr;  // |V_C| x d_c
  LstmCell<T> forward;
  LstmCell<T> backward;

  static CharEncoder create(num::ParamSet<T>& ps, std::size_t alphabet, std::size_t dim,
                            std::size_t hidden, num::Rng& rng) {
    CharEncoder e;
    e.embedding = &ps.add("char.embedding", num::init_params<T>(num::Shape{alphabet, dim}, rng));
    e.forward = LstmCell<T>::create(ps, "char.fwd", dim, hidden, rng);
    e.backward = LstmCell<T>::create(ps, "char.bwd", dim, hidden, rng);
    return e;
  }

  static CharEncoder bind(num::ParamSet<T>& ps) {
    CharEncoder e;
    e.embedding = &ps.get("char.embedding");
    e.forward = LstmCell<T>::bind(ps, "char.fwd");
    e.backward = LstmCell<T>::bind(ps, "char.bwd");
    return e;
  }

  std::size_t output_dim() const noexcept { return 2 * forward.hidden; }

  num::Var<T> encode(num::Tape<T>& tape, std::span<const std::size_t> chars) const {
    if (chars.empty()) throw ValidationError("encode_chars: empty word");
    num::Var<T> table = tape.param(*embedding);
    std::vector<num::Var<T>> xs;
    xs.reserve(chars.size());
    for (std::size_t c : chars) xs.push_back(num::row(table, c));
    num::Var<T> f = forward.zero_state(tape);
    for (const auto& x : xs) f = forward.step(tape, x, f);
    num::Var<T> b = backward.zero_state(tape);
    for (auto it = xs.rbegin(); it != xs.rend(); ++it) b = backward.step(tape, *it, b);
    return num::concat({forward.hidden_of(f), backward.hidden_of(b)});
  }
};

// Shared-weight GRU over each context sentence; one final state per sentence.
template <typename T>
struct ContextEncoder {
  num::Parameter<T>* embedding = nullptr;  // |V| x d_w
  GruCell<T> cell;

  static ContextEncoder create(num::ParamSet<T>& ps, num::Tensor<T> embedding,
                               std::size_t hidden, num::Rng& rng) {
    ContextEncoder e;
    const std::size_t dim = embedding.cols();
    e.embedding = &ps.add("ctx.embedding", std::move(embedding));
    e.cell = GruCell<T>::create(ps, "ctx.gru", dim, hidden, rng);
    return e;
  }

  static ContextEncoder bind(num::ParamSet<T>& ps) {
    ContextEncoder e;
    e.embedding = &ps.get("ctx.embedding");
    e.cell = GruCell<T>::bind(ps, "ctx.gru");
    return e;
  }

  std::size_t output_dim() const noexcept { return cell.hidden; }

  num::Var<T> encode_sentence(num::Tape<T>& tape, std::span<const std::size_t> ids) const {
    num::Var<T> table = tape.param(*embedding);
    num::Var<T> h = tape.constant(num::Tensor<T>(num::Shape{cell.hidden}));
    for (std::size_t id : ids) h = cell.step(tape, num::row(table, id), h);
    return h;
  }

  std::vector<num::Var<T>> encode(num::Tape<T>& tape,
                                  std::span<const std::vector<std::size_t>> sentences) const {
    std::vector<num::Var<T>> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back(encode_sentence(tape, s));
    return out;
  }
};

}  // namespace forumtag::enc
