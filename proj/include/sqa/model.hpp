#ifndef SQA_MODEL_HPP
#define SQA_MODEL_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sqa/errors.hpp"
#include "sqa/subword.hpp"
#include "sqa/tensor.hpp"
#include "sqa/text.hpp"

namespace sqa {

enum class SubwordUnit { Phoneme, Syllable, Chars };

inline const char* subword_unit_name(SubwordUnit u) {
  switch (u) {
    case SubwordUnit::Phoneme: return "phoneme";
    case SubwordUnit::Syllable: return "syllable";
    case SubwordUnit::Chars: return "char";
  }
  return "?";
}

// Geometry of one subword CNN: d-dimensional unit embeddings scanned by
// n_filters filters of height k.
struct SubwordConfig {
  SubwordUnit unit = SubwordUnit::Phoneme;
  std::size_t dim = 6;
  std::size_t k = 3;
  std::size_t n_filters = 80;

  static SubwordConfig defaults(SubwordUnit u) {
    switch (u) {
      case SubwordUnit::Phoneme: return {SubwordUnit::Phoneme, 6, 3, 80};
      case SubwordUnit::Syllable: return {SubwordUnit::Syllable, 20, 2, 100};
      case SubwordUnit::Chars: return {SubwordUnit::Chars, 8, 3, 50};
    }
    return {};
  }
};

// Which representations are concatenated per word. The word embedding is
// always active; subword embeddings join in the fixed order
// [word | phoneme | syllable | char].
struct EmbeddingConfig {
  std::size_t word_dim = 32;
  std::optional<SubwordConfig> phoneme;
  std::optional<SubwordConfig> syllable;
  std::optional<SubwordConfig> chars;

  std::size_t total_dim() const {
    std::size_t d = word_dim;
    if (phoneme) d += phoneme->n_filters;
    if (syllable) d += syllable->n_filters;
    if (chars) d += chars->n_filters;
    return d;
  }

  std::string describe() const {
    std::string s = "word";
    if (chars) s += "+char";
    if (phoneme) s += "+phoneme";
    if (syllable) s += "+syllable";
    return s;
  }

  // Accepts a comma list such as "word,phoneme,syllable". The word unit is
  // mandatory.
  static EmbeddingConfig parse(const std::string& list, std::size_t word_dim = 32) {
    EmbeddingConfig cfg;
    cfg.word_dim = word_dim;
    bool has_word = false;
    std::size_t start = 0;
    while (start <= list.size()) {
      std::size_t comma = list.find(',', start);
      std::string item = list.substr(start, comma == std::string::npos ? comma : comma - start);
      if (item == "word")
        has_word = true;
      else if (item == "phoneme")
        cfg.phoneme = SubwordConfig::defaults(SubwordUnit::Phoneme);
      else if (item == "syllable")
        cfg.syllable = SubwordConfig::defaults(SubwordUnit::Syllable);
      else if (item == "char" || item == "chars")
        cfg.chars = SubwordConfig::defaults(SubwordUnit::Chars);
      else if (!item.empty())
        raise(ErrorCode::InvalidConfig, "unknown embedding unit '" + item + "'");
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!has_word) raise(ErrorCode::InvalidConfig, "embedding set must include 'word'");
    return cfg;
  }
};

struct ModelConfig {
  EmbeddingConfig embeddings;
  std::size_t hidden_dim = 16;
};

// Id spaces for words and subword units. Index 0 is UNK for words; for
// subword units index 0 is PAD and 1 is UNK.
struct Vocabulary {
  std::vector<std::string> words;      // words[0] == "<unk>"
  std::vector<std::string> syllables;  // [PAD, <unk>, ...]
  std::vector<std::string> chars;      // [PAD, <unk>, ...]
  std::vector<std::string> phonemes;   // inventory symbols, PAD first

  std::unordered_map<std::string, std::size_t> word_index;
  std::unordered_map<std::string, std::size_t> syllable_index;
  std::unordered_map<char, std::size_t> char_index;

  static constexpr std::size_t kUnkWord = 0;
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnkUnit = 1;

  void rebuild_indices() {
    word_index.clear();
    for (std::size_t i = 0; i < words.size(); ++i) word_index[words[i]] = i;
    syllable_index.clear();
    for (std::size_t i = 0; i < syllables.size(); ++i) syllable_index[syllables[i]] = i;
    char_index.clear();
    for (std::size_t i = 0; i < chars.size(); ++i)
      if (chars[i].size() == 1) char_index[chars[i][0]] = i;
  }

  std::size_t word_id(const std::string& w) const {
    auto it = word_index.find(w);
    return it == word_index.end() ? kUnkWord : it->second;
  }
};

// Collects the word list from training token sequences and derives syllable
// and character inventories with the same subword machinery used at run time.
inline Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_seqs,
                                   const PronunciationLexicon& lexicon,
                                   const SyllablePatterns& patterns) {
  Vocabulary v;
  std::set<std::string> words;
  for (const auto& seq : token_seqs)
    for (const std::string& t : seq) words.insert(t);

  v.words.push_back("<unk>");
  for (const std::string& w : words) v.words.push_back(w);

  std::set<std::string> sylls;
  for (const std::string& w : words) {
    if (detail::g2p_normalize(w).empty()) continue;
    for (const std::string& s : syllabify(w, patterns)) sylls.insert(to_lower(s));
  }
  v.syllables.push_back("<pad>");
  v.syllables.push_back("<unk>");
  for (const std::string& s : sylls) v.syllables.push_back(s);

  v.chars.push_back("<pad>");
  v.chars.push_back("<unk>");
  for (char c : std::string("abcdefghijklmnopqrstuvwxyz0123456789'-"))
    v.chars.push_back(std::string(1, c));

  v.phonemes = lexicon.inventory().symbols();
  v.rebuild_indices();
  return v;
}

// Per-word feature ids, cached once per distinct word. Sequences shorter
// than the filter height are PAD-extended so the valid convolution exists.
struct WordFeatures {
  std::size_t word_id = Vocabulary::kUnkWord;
  std::vector<std::size_t> phoneme_ids;
  std::vector<std::size_t> syllable_ids;
  std::vector<std::size_t> char_ids;
};

inline std::vector<double> softmax_values(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  double mx = out[0];
  for (double v : out) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

struct SpanDistributions {
  std::vector<double> start;
  std::vector<double> end;
};

enum class RunMode { Train, Eval };

class SpanModel {
 public:
  SpanModel(ModelConfig config, Vocabulary vocab, const PronunciationLexicon* lexicon,
            const SyllablePatterns* patterns)
      : config_(std::move(config)), vocab_(std::move(vocab)), lexicon_(lexicon),
        patterns_(patterns) {
    allocate_params();
  }

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocab_; }

  std::vector<Param*> parameters() {
    std::vector<Param*> out;
    out.push_back(&word_table_);
    auto push_unit = [&out](std::optional<UnitParams>& u) {
      if (u) {
        out.push_back(&u->embedding);
        out.push_back(&u->filters);
      }
    };
    push_unit(phoneme_);
    push_unit(syllable_);
    push_unit(chars_);
    for (GruParams* g : {&gru_fwd_, &gru_bwd_})
      for (Param* p : {&g->wz, &g->uz, &g->bz, &g->wr, &g->ur, &g->br, &g->wc, &g->uc, &g->bc})
        out.push_back(p);
    out.push_back(&attention_);
    out.push_back(&w_start_);
    out.push_back(&w_end_);
    return out;
  }

  void init_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (Param* p : parameters()) {
      if (p->name.ends_with(".b")) {
        std::fill(p->value.begin(), p->value.end(), 0.0);
        continue;
      }
      p->init_uniform(rng, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, p->cols))));
    }
    features_.clear();
  }

  void zero_grads() {
    for (Param* p : parameters()) p->zero_grad();
  }

  // Concatenated [word | subword...] representation of one token.
  Var word_representation(Tape& tape, const std::string& word) {
    const WordFeatures& f = features(word);
    std::vector<Var> parts;
    parts.push_back(tape.lookup_rows(word_table_, {f.word_id}));
    if (phoneme_)
      parts.push_back(subword_embedding(tape, *phoneme_, f.phoneme_ids));
    if (syllable_)
      parts.push_back(subword_embedding(tape, *syllable_, f.syllable_ids));
    if (chars_)
      parts.push_back(subword_embedding(tape, *chars_, f.char_ids));
    return parts.size() == 1 ? parts[0] : tape.concat(parts);
  }

  // Bidirectional recurrent states over the token sequence, one 2h vector
  // per position. Dropout (train mode only) masks the word representations.
  std::vector<Var> encode(Tape& tape, const std::vector<std::string>& tokens, RunMode mode,
                          double dropout, std::mt19937_64* rng) {
    std::vector<Var> reps;
    reps.reserve(tokens.size());
    for (const std::string& t : tokens) {
      Var rep = word_representation(tape, t);
      if (mode == RunMode::Train && dropout > 0.0) {
        if (!rng) raise(ErrorCode::InvalidConfig, "train-mode dropout requires an rng");
        const std::size_t dim = tape.size(rep);
        std::vector<double> mask(dim);
        std::bernoulli_distribution keep(1.0 - dropout);
        const double scale = 1.0 / (1.0 - dropout);
        for (double& m : mask) m = keep(*rng) ? scale : 0.0;
        rep = tape.mul(rep, tape.input(std::move(mask), dim, 1));
      }
      reps.push_back(rep);
    }

    const std::size_t n = tokens.size();
    std::vector<Var> fwd(n), bwd(n);
    Var h = zero_state(tape);
    for (std::size_t t = 0; t < n; ++t) {
      h = gru_step(tape, gru_fwd_, reps[t], h);
      fwd[t] = h;
    }
    h = zero_state(tape);
    for (std::size_t t = n; t-- > 0;) {
      h = gru_step(tape, gru_bwd_, reps[t], h);
      bwd[t] = h;
    }
    std::vector<Var> states(n);
    for (std::size_t t = 0; t < n; ++t) states[t] = tape.concat({fwd[t], bwd[t]});
    return states;
  }

  struct Forward {
    Var start_logits;
    Var end_logits;
  };

  // Question pooled by self-attention into one vector q; bilinear pointers
  // score every document state against q.
  Forward forward(Tape& tape, const std::vector<std::string>& doc_tokens,
                  const std::vector<std::string>& question_tokens, RunMode mode, double dropout,
                  std::mt19937_64* rng) {
    if (doc_tokens.empty()) raise(ErrorCode::EmptyDocument, "span model needs a non-empty document");
    if (question_tokens.empty())
      raise(ErrorCode::EmptyDocument, "span model needs a non-empty question");

    std::vector<Var> doc_states = encode(tape, doc_tokens, mode, dropout, rng);
    std::vector<Var> q_states = encode(tape, question_tokens, mode, dropout, rng);

    Var H = tape.stack_rows(doc_states);   // L x 2h
    Var Q = tape.stack_rows(q_states);     // Lq x 2h
    Var att_logits = tape.matvec(Q, tape.leaf(attention_));
    Var att = tape.softmax(att_logits);
    Var q = tape.matvec_transposed(Q, att);  // 2h

    Var us = tape.matvec(tape.leaf(w_start_), q);
    Var ue = tape.matvec(tape.leaf(w_end_), q);
    return Forward{tape.matvec(H, us), tape.matvec(H, ue)};
  }

  SpanDistributions span_scores(const std::vector<std::string>& doc_tokens,
                                const std::vector<std::string>& question_tokens, RunMode mode,
                                double dropout, std::mt19937_64* rng) {
    Tape tape;
    Forward fwd = forward(tape, doc_tokens, question_tokens, mode, dropout, rng);
    SpanDistributions out;
    auto s = softmax_values(tape.value(fwd.start_logits));
    auto e = softmax_values(tape.value(fwd.end_logits));
    out.start.assign(s.begin(), s.end());
    out.end.assign(e.begin(), e.end());
    return out;
  }

  // Negative log-likelihood of the gold start and end indices.
  Var loss(Tape& tape, const std::vector<std::string>& doc_tokens,
           const std::vector<std::string>& question_tokens, std::size_t gold_start,
           std::size_t gold_end, RunMode mode, double dropout, std::mt19937_64* rng) {
    if (gold_start > gold_end || gold_end >= doc_tokens.size())
      raise(ErrorCode::InvalidSpan, "gold span out of range");
    Forward fwd = forward(tape, doc_tokens, question_tokens, mode, dropout, rng);
    Var ls = tape.pick(tape.log_softmax(fwd.start_logits), gold_start);
    Var le = tape.pick(tape.log_softmax(fwd.end_logits), gold_end);
    return tape.scale(tape.add(ls, le), -1.0);
  }

  const WordFeatures& features(const std::string& word) {
    auto it = features_.find(word);
    if (it != features_.end()) return it->second;
    WordFeatures f;
    f.word_id = vocab_.word_id(word);
    if (phoneme_) f.phoneme_ids = phoneme_ids(word, config_.embeddings.phoneme->k);
    if (syllable_) f.syllable_ids = syllable_ids(word, config_.embeddings.syllable->k);
    if (chars_) f.char_ids = char_ids(word, config_.embeddings.chars->k);
    return features_.emplace(word, std::move(f)).first->second;
  }

 private:
  struct UnitParams {
    Param embedding;  // C x d lookup table
    Param filters;    // n_filters x (k*d)
    std::size_t k = 0;
  };

  struct GruParams {
    Param wz, uz, bz, wr, ur, br, wc, uc, bc;
  };

  void allocate_params() {
    const EmbeddingConfig& e = config_.embeddings;
    word_table_ = Param("word_table", vocab_.words.size(), e.word_dim);
    if (e.phoneme) phoneme_ = make_unit("phoneme", *e.phoneme, vocab_.phonemes.size());
    if (e.syllable) syllable_ = make_unit("syllable", *e.syllable, vocab_.syllables.size());
    if (e.chars) chars_ = make_unit("char", *e.chars, vocab_.chars.size());

    const std::size_t in = e.total_dim(), h = config_.hidden_dim;
    auto make_gru = [&](const std::string& prefix) {
      GruParams g;
      g.wz = Param(prefix + ".wz", h, in);
      g.uz = Param(prefix + ".uz", h, h);
      g.bz = Param(prefix + ".bz.b", h, 1);
      g.wr = Param(prefix + ".wr", h, in);
      g.ur = Param(prefix + ".ur", h, h);
      g.br = Param(prefix + ".br.b", h, 1);
      g.wc = Param(prefix + ".wc", h, in);
      g.uc = Param(prefix + ".uc", h, h);
      g.bc = Param(prefix + ".bc.b", h, 1);
      return g;
    };
    gru_fwd_ = make_gru("encoder.fwd");
    gru_bwd_ = make_gru("encoder.bwd");
    attention_ = Param("attention.w", 2 * h, 1);
    w_start_ = Param("pointer.start", 2 * h, 2 * h);
    w_end_ = Param("pointer.end", 2 * h, 2 * h);
  }

  UnitParams make_unit(const std::string& name, const SubwordConfig& cfg, std::size_t table_rows) {
    UnitParams u;
    u.embedding = Param(name + ".table", table_rows, cfg.dim);
    u.filters = Param(name + ".filters", cfg.n_filters, cfg.k * cfg.dim);
    u.k = cfg.k;
    return u;
  }

  Var subword_embedding(Tape& tape, UnitParams& unit, const std::vector<std::size_t>& ids) {
    Var e = tape.lookup_rows(unit.embedding, ids);
    return tape.conv_rows_max(e, unit.filters, unit.k);
  }

  Var zero_state(Tape& tape) {
    return tape.input(std::vector<double>(config_.hidden_dim, 0.0), config_.hidden_dim, 1);
  }

  Var gru_step(Tape& tape, GruParams& g, Var x, Var h) {
    Var z = tape.sigmoid(tape.add(tape.add(tape.matvec(tape.leaf(g.wz), x),
                                           tape.matvec(tape.leaf(g.uz), h)),
                                  tape.leaf(g.bz)));
    Var r = tape.sigmoid(tape.add(tape.add(tape.matvec(tape.leaf(g.wr), x),
                                           tape.matvec(tape.leaf(g.ur), h)),
                                  tape.leaf(g.br)));
    Var c = tape.tanh_op(tape.add(tape.add(tape.matvec(tape.leaf(g.wc), x),
                                           tape.matvec(tape.leaf(g.uc), tape.mul(r, h))),
                                  tape.leaf(g.bc)));
    return tape.add(tape.mul(tape.one_minus(z), h), tape.mul(z, c));
  }

  std::vector<std::size_t> phoneme_ids(const std::string& word, std::size_t k) const {
    std::vector<std::size_t> ids;
    if (!detail::g2p_normalize(word).empty()) {
      for (PhonemeId p : g2p(word, *lexicon_)) ids.push_back(static_cast<std::size_t>(p));
    }
    while (ids.size() < k) ids.push_back(Vocabulary::kPad);
    return ids;
  }

  std::vector<std::size_t> syllable_ids(const std::string& word, std::size_t k) const {
    std::vector<std::size_t> ids;
    if (!detail::g2p_normalize(word).empty()) {
      for (const std::string& s : syllabify(word, *patterns_)) {
        auto it = vocab_.syllable_index.find(to_lower(s));
        ids.push_back(it == vocab_.syllable_index.end() ? Vocabulary::kUnkUnit : it->second);
      }
    }
    while (ids.size() < k) ids.push_back(Vocabulary::kPad);
    return ids;
  }

  std::vector<std::size_t> char_ids(const std::string& word, std::size_t k) const {
    std::vector<std::size_t> ids;
    for (char c : to_lower(word)) {
      auto it = vocab_.char_index.find(c);
      ids.push_back(it == vocab_.char_index.end() ? Vocabulary::kUnkUnit : it->second);
    }
    while (ids.size() < k) ids.push_back(Vocabulary::kPad);
    return ids;
  }

  ModelConfig config_;
  Vocabulary vocab_;
  const PronunciationLexicon* lexicon_;
  const SyllablePatterns* patterns_;

  Param word_table_;
  std::optional<UnitParams> phoneme_;
  std::optional<UnitParams> syllable_;
  std::optional<UnitParams> chars_;
  GruParams gru_fwd_, gru_bwd_;
  Param attention_;
  Param w_start_;
  Param w_end_;

  std::unordered_map<std::string, WordFeatures> features_;
};

// Highest-product span under i <= j; ties prefer the smallest start, then
// the shortest span.
inline std::pair<std::size_t, std::size_t> predict_span(const std::vector<double>& start,
                                                        const std::vector<double>& end) {
  if (start.empty() || end.empty() || start.size() != end.size())
    raise(ErrorCode::InvalidConfig, "predict_span needs equal-length distributions");
  std::size_t bi = 0, bj = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < start.size(); ++i) {
    for (std::size_t j = i; j < end.size(); ++j) {
      double s = start[i] * end[j];
      if (s > best) {
        best = s;
        bi = i;
        bj = j;
      }
    }
  }
  return {bi, bj};
}

// Standalone forward/backward pair over one subword CNN, mirroring the
// module-level contract: backward without a prior forward is an error, and
// gradients flow only through the recorded max-pool positions.
class SubwordCnnRun {
 public:
  SubwordCnnRun(Param& embedding, Param& filters, std::size_t k)
      : embedding_(&embedding), filters_(&filters), k_(k) {}

  std::vector<double> forward(const std::vector<std::size_t>& unit_ids) {
    std::vector<std::size_t> ids = unit_ids;
    if (ids.empty()) raise(ErrorCode::InvalidConfig, "subword cnn needs at least one unit id");
    while (ids.size() < k_) ids.push_back(0);  // PAD rows
    tape_ = std::make_unique<Tape>();
    Var e = tape_->lookup_rows(*embedding_, ids);
    out_ = tape_->conv_rows_max(e, *filters_, k_, &argmax_);
    auto v = tape_->value(out_);
    return {v.begin(), v.end()};
  }

  const std::vector<std::size_t>& argmax_positions() const {
    if (!tape_) raise(ErrorCode::NoForwardState, "no forward pass recorded");
    return argmax_;
  }

  // Accumulates into embedding.grad and filters.grad.
  void backward(std::span<const double> upstream) {
    if (!tape_) raise(ErrorCode::NoForwardState, "backward before forward");
    tape_->backward_with_gradient(out_, upstream);
  }

 private:
  Param* embedding_;
  Param* filters_;
  std::size_t k_;
  std::unique_ptr<Tape> tape_;
  Var out_;
  std::vector<std::size_t> argmax_;
};

}  // namespace sqa

#endif  // SQA_MODEL_HPP
