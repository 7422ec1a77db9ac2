#ifndef SQA_TRAIN_HPP
#define SQA_TRAIN_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sqa/corpus.hpp"
#include "sqa/errors.hpp"
#include "sqa/model.hpp"
#include "sqa/spoken.hpp"

namespace sqa {

struct TrainConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double dropout = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (learning_rate <= 0.0) raise(ErrorCode::InvalidConfig, "learning rate must be positive");
    if (dropout < 0.0 || dropout >= 1.0) raise(ErrorCode::InvalidConfig, "dropout must lie in [0,1)");
    if (epochs == 0 || batch_size == 0)
      raise(ErrorCode::InvalidConfig, "epochs and batch size must be positive");
  }
};

// One training item in the model's view: lowercase speakable tokens with a
// gold token span inside them.
struct TrainingExample {
  std::string id;
  std::vector<std::string> doc_tokens;
  std::vector<std::string> question_tokens;
  std::size_t gold_start = 0;
  std::size_t gold_end = 0;
};

// Lowercased speakable token texts; the shared "model view" of both
// reference transcripts and hypothesis transcripts.
inline std::vector<std::string> speakable_lower(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const Token& t : tokens)
    if (is_speakable(t.text)) out.push_back(to_lower(t.text));
  return out;
}

// Training examples over reference transcripts (the "text" side). Answer
// token spans are re-indexed from document tokens to the speakable view.
inline std::vector<TrainingExample> training_examples_from_text(const QADataset& dataset) {
  auto docs = dataset.documents_by_id();
  std::vector<TrainingExample> out;
  for (const QAPair& pair : dataset.pairs) {
    auto it = docs.find(pair.doc_id);
    if (it == docs.end())
      raise(ErrorCode::InvalidSpan, "pair '" + pair.id + "' references missing document");
    const Document& doc = *it->second;

    std::vector<std::size_t> view_of_doc_index(doc.tokens.size(), EditOp::npos);
    TrainingExample ex;
    ex.id = pair.id;
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (!is_speakable(doc.tokens[i].text)) continue;
      view_of_doc_index[i] = ex.doc_tokens.size();
      ex.doc_tokens.push_back(to_lower(doc.tokens[i].text));
    }
    ex.question_tokens = speakable_lower(pair.question_tokens);

    const AnswerRef& ans = pair.answers.front();
    std::size_t first = EditOp::npos, last = EditOp::npos;
    for (std::size_t i = ans.token_first; i <= ans.token_last && i < doc.tokens.size(); ++i) {
      if (view_of_doc_index[i] == EditOp::npos) continue;
      if (first == EditOp::npos) first = view_of_doc_index[i];
      last = view_of_doc_index[i];
    }
    if (first == EditOp::npos || ex.doc_tokens.empty() || ex.question_tokens.empty())
      raise(ErrorCode::InvalidSpan, "pair '" + pair.id + "' has no speakable answer span");
    ex.gold_start = first;
    ex.gold_end = last;
    out.push_back(std::move(ex));
  }
  return out;
}

// Training examples over hypothesis transcripts (the "speech" side). The
// gold span is the first occurrence of the normalized answer inside the
// hypothesis; pairs whose answer does not survive are dropped, mirroring the
// answer-presence filter.
inline std::vector<TrainingExample> training_examples_from_speech(const QADataset& dataset,
                                                                  const SpokenCorpus& corpus) {
  auto spoken = corpus.by_id();
  std::vector<TrainingExample> out;
  for (const QAPair& pair : dataset.pairs) {
    auto it = spoken.find(pair.doc_id);
    if (it == spoken.end())
      raise(ErrorCode::MissingTranscript, "no transcript for document '" + pair.doc_id + "'");
    const SpokenDocument& doc = *it->second;
    if (doc.hyp_words.empty()) continue;

    std::vector<std::string> hyp = doc.hyp_texts();
    std::vector<std::string> needle = normalized_answer_tokens(pair.answers.front().text);
    auto start = find_subsequence(normalized_hyp_tokens(doc), needle);
    if (!start) continue;

    TrainingExample ex;
    ex.id = pair.id;
    ex.doc_tokens = std::move(hyp);
    ex.question_tokens = speakable_lower(pair.question_tokens);
    if (ex.question_tokens.empty()) continue;
    ex.gold_start = *start;
    ex.gold_end = *start + needle.size() - 1;
    if (ex.gold_end >= ex.doc_tokens.size())
      raise(ErrorCode::InvalidSpan, "pair '" + pair.id + "' span exceeds transcript");
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::vector<std::vector<std::string>> token_sequences(
    const std::vector<TrainingExample>& examples) {
  std::vector<std::vector<std::string>> out;
  out.reserve(examples.size() * 2);
  for (const TrainingExample& ex : examples) {
    out.push_back(ex.doc_tokens);
    out.push_back(ex.question_tokens);
  }
  return out;
}

struct TrainResult {
  std::vector<double> epoch_losses;
};

// Mini-batch gradient descent on the span NLL with a fixed learning rate.
// Deterministic for a given seed: parameter init, batch order, and dropout
// masks all derive from it.
inline TrainResult train(SpanModel& model, const std::vector<TrainingExample>& examples,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (examples.empty()) raise(ErrorCode::EmptyRecords, "no training examples");
  for (const TrainingExample& ex : examples) {
    if (ex.gold_start > ex.gold_end || ex.gold_end >= ex.doc_tokens.size())
      raise(ErrorCode::InvalidSpan, "example '" + ex.id + "' has an invalid gold span");
  }

  model.init_params(cfg.seed);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x14057b7ef767814fULL);

  TrainResult result;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batch_count = 0;
    model.zero_grads();
    for (std::size_t n = 0; n < order.size(); ++n) {
      const TrainingExample& ex = examples[order[n]];
      Tape tape;
      Var loss = model.loss(tape, ex.doc_tokens, ex.question_tokens, ex.gold_start, ex.gold_end,
                            RunMode::Train, cfg.dropout, &dropout_rng);
      epoch_loss += tape.value(loss)[0];
      tape.backward(loss);
      ++batch_count;
      if (batch_count == cfg.batch_size || n + 1 == order.size()) {
        const double step = cfg.learning_rate / static_cast<double>(batch_count);
        for (Param* p : model.parameters()) p->sgd_step(step);
        model.zero_grads();
        batch_count = 0;
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(examples.size()));
  }
  return result;
}

// Exact-match rate of greedy span predictions against the gold spans, on the
// training examples themselves. Used as an overfitting check.
inline double training_exact_match(SpanModel& model, const std::vector<TrainingExample>& examples) {
  if (examples.empty()) raise(ErrorCode::EmptyRecords, "no examples");
  std::size_t hits = 0;
  for (const TrainingExample& ex : examples) {
    SpanDistributions dist =
        model.span_scores(ex.doc_tokens, ex.question_tokens, RunMode::Eval, 0.0, nullptr);
    auto [i, j] = predict_span(dist.start, dist.end);
    if (i == ex.gold_start && j == ex.gold_end) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

}  // namespace sqa

#endif  // SQA_TRAIN_HPP
