#ifndef SQA_EXPERIMENT_HPP
#define SQA_EXPERIMENT_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqa/channel.hpp"
#include "sqa/checkpoint.hpp"
#include "sqa/corpus.hpp"
#include "sqa/errors.hpp"
#include "sqa/fixture.hpp"
#include "sqa/metrics.hpp"
#include "sqa/model.hpp"
#include "sqa/train.hpp"

namespace sqa {

// A test condition named by its target WER. "clean-ref" evaluates on the
// reference transcripts through an identity channel.
struct Tier {
  std::string name;
  double target_wer = 0.0;

  bool operator==(const Tier&) const = default;
};

inline Tier parse_tier(const std::string& name) {
  if (name == "clean-ref") return {name, 0.0};
  if (name.rfind("wer-", 0) == 0) {
    try {
      double pct = std::stod(name.substr(4));
      if (pct < 0.0 || pct >= 100.0) raise(ErrorCode::InvalidConfig, "tier WER out of range");
      return {name, pct / 100.0};
    } catch (const std::logic_error&) {
      raise(ErrorCode::InvalidConfig, "bad tier '" + name + "'");
    }
  }
  raise(ErrorCode::InvalidConfig,
        "unknown tier '" + name + "' (expected clean-ref or wer-<percent>)");
}

struct ExperimentSpec {
  std::string train_side = "text";  // "text" or "speech"
  std::vector<Tier> tiers;
  std::vector<std::string> embedding_sets;  // comma lists, e.g. "word,phoneme"
  double dropout = 0.0;
  std::vector<std::uint64_t> seeds;

  // model/training knobs (declared defaults; not taken from any reference)
  std::size_t word_dim = 24;
  std::size_t hidden_dim = 16;
  double learning_rate = 0.5;
  std::size_t epochs = 12;
  std::size_t batch_size = 16;
  std::size_t confusion_pool_size = 5;
  double phones_per_second = kDefaultPhonesPerSecond;

  void validate() const {
    if (train_side != "text" && train_side != "speech")
      raise(ErrorCode::InvalidConfig, "train side must be text or speech");
    if (seeds.empty()) raise(ErrorCode::InvalidConfig, "need at least one seed");
    if (tiers.empty()) raise(ErrorCode::InvalidConfig, "need at least one tier");
    if (embedding_sets.empty()) raise(ErrorCode::InvalidConfig, "need at least one embedding set");
    for (const std::string& e : embedding_sets) EmbeddingConfig::parse(e, word_dim);
  }

  nlohmann::json to_json() const {
    nlohmann::json tiers_j = nlohmann::json::array();
    for (const Tier& t : tiers) tiers_j.push_back({{"name", t.name}, {"target_wer", t.target_wer}});
    return nlohmann::json{{"train_side", train_side},
                          {"tiers", std::move(tiers_j)},
                          {"embedding_sets", embedding_sets},
                          {"dropout", dropout},
                          {"seeds", seeds},
                          {"word_dim", word_dim},
                          {"hidden_dim", hidden_dim},
                          {"learning_rate", learning_rate},
                          {"epochs", epochs},
                          {"batch_size", batch_size},
                          {"confusion_pool_size", confusion_pool_size},
                          {"phones_per_second", phones_per_second}};
  }
};

struct Prediction {
  std::string id;
  std::string doc_id;
  std::string question;
  std::string gold;
  std::string predicted_text;
  std::size_t span_start = 0;
  std::size_t span_end = 0;
  int em = 0;
  double f1 = 0.0;
  double aos = 0.0;
};

struct EvalOutput {
  MetricReport report;
  std::vector<Prediction> predictions;
  std::size_t skipped = 0;
};

// Scores a model's predictions over one spoken corpus. Questions whose
// ground-truth span cannot be aligned to any hypothesis word are excluded
// with a counted skip.
inline EvalOutput evaluate_model(SpanModel& model, const SpokenCorpus& corpus,
                                 const QADataset& dataset) {
  auto spoken_by_id = corpus.by_id();
  EvalOutput out;
  std::vector<MetricRecord> records;
  for (const QAPair& pair : dataset.pairs) {
    auto it = spoken_by_id.find(pair.doc_id);
    if (it == spoken_by_id.end())
      raise(ErrorCode::MissingTranscript, "no transcript for document '" + pair.doc_id + "'");
    const SpokenDocument& doc = *it->second;
    if (doc.hyp_words.empty()) {
      ++out.skipped;
      continue;
    }

    std::optional<TimeInterval> gold_interval;
    for (const AnswerRef& ans : pair.answers) {
      try {
        gold_interval = ground_truth_interval(ans.token_first, ans.token_last, doc);
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AnswerUnalignable) throw;
      }
    }
    if (!gold_interval) {
      ++out.skipped;
      continue;
    }

    std::vector<std::string> question = speakable_lower(pair.question_tokens);
    if (question.empty()) {
      ++out.skipped;
      continue;
    }
    std::vector<std::string> hyp = doc.hyp_texts();
    SpanDistributions dist = model.span_scores(hyp, question, RunMode::Eval, 0.0, nullptr);
    auto [i, j] = predict_span(dist.start, dist.end);

    Prediction p;
    p.id = pair.id;
    p.doc_id = pair.doc_id;
    p.question = pair.question;
    p.gold = pair.answers.front().text;
    p.span_start = i;
    p.span_end = j;
    p.predicted_text = join({hyp.begin() + static_cast<std::ptrdiff_t>(i),
                             hyp.begin() + static_cast<std::ptrdiff_t>(j) + 1});

    std::vector<std::string> refs;
    for (const AnswerRef& a : pair.answers) refs.push_back(a.text);
    p.em = exact_match(p.predicted_text, refs);
    p.f1 = f1(p.predicted_text, refs);
    p.aos = aos(predicted_interval(i, j, doc), *gold_interval);

    records.push_back(MetricRecord{p.id, p.em, p.f1, p.aos});
    out.predictions.push_back(std::move(p));
  }
  if (records.empty()) raise(ErrorCode::EmptyRecords, "every question was skipped");
  out.report = aggregate(std::move(records), corpus.corpus_wer, out.skipped);
  return out;
}

// Synthesizes a spoken corpus for a tier. Channel rates come from bisection
// against the calibration corpus (usually the training split); the identity
// channel handles clean-ref.
inline SpokenCorpus synthesize_tier_corpus(const QADataset& dataset, const Tier& tier,
                                           const QADataset& calibration_corpus,
                                           const PronunciationLexicon& lexicon,
                                           const ConfusionModel& confusions,
                                           std::uint64_t channel_seed,
                                           double phones_per_second = kDefaultPhonesPerSecond,
                                           std::size_t pool_size = 5) {
  ChannelConfig cfg;
  cfg.seed = channel_seed;
  cfg.confusion_pool_size = pool_size;
  if (tier.target_wer > 0.0) {
    std::vector<std::vector<std::string>> calib_docs;
    for (const Document& d : calibration_corpus.documents) {
      std::vector<std::string> texts;
      for (const Token& t : d.tokens)
        if (is_speakable(t.text)) texts.push_back(to_lower(t.text));
      calib_docs.push_back(std::move(texts));
    }
    cfg = calibrate(tier.target_wer, calib_docs, cfg, confusions);
  } else {
    cfg.target_wer = 0.0;
  }
  return build_spoken_corpus(dataset, cfg, confusions, lexicon, phones_per_second);
}

struct CellAggregate {
  std::string embeddings;
  std::string tier;
  double em = 0.0;
  double f1 = 0.0;
  double aos = 0.0;
  std::vector<nlohmann::json> per_seed;
};

struct RunRecord {
  ExperimentSpec spec;
  std::vector<CellAggregate> cells;
  nlohmann::json qualitative;
  double wall_seconds = 0.0;
  std::string config_hash;
};

namespace detail {

inline std::string hash_hex(const std::string& s) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(s)));
  return buf;
}

}  // namespace detail

// Fixed-width comparison table, one row per embedding set, one EM/F1/AOS
// column group per tier.
inline std::string render_table(const RunRecord& record) {
  std::string out;
  const int name_w = 28;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s += std::string(w - s.size(), ' ');
    return s;
  };
  out += pad("model", name_w) + "|";
  for (const Tier& t : record.spec.tiers) out += " " + pad(t.name, 23) + "|";
  out += "\n";
  out += pad("", name_w) + "|";
  for (std::size_t i = 0; i < record.spec.tiers.size(); ++i)
    out += " " + pad("EM", 7) + pad("F1", 7) + pad("AOS", 8) + "|";
  out += "\n";
  out += std::string(name_w + record.spec.tiers.size() * 25, '-') + "\n";
  for (const std::string& emb : record.spec.embedding_sets) {
    std::string row_name = EmbeddingConfig::parse(emb, 1).describe();
    out += pad(row_name, name_w) + "|";
    for (const Tier& t : record.spec.tiers) {
      for (const CellAggregate& c : record.cells) {
        if (c.embeddings == emb && c.tier == t.name) {
          out += " " + pad(detail::fmt("%.2f", c.em), 7) + pad(detail::fmt("%.2f", c.f1), 7) +
                 pad(detail::fmt("%.4f", c.aos), 8) + "|";
        }
      }
    }
    out += "\n";
  }
  return out;
}

inline std::string render_qualitative(const nlohmann::json& q) {
  if (q.is_null() || q.empty()) return "no qualitative example selected\n";
  std::string out;
  out += "document:        " + q.at("document").get<std::string>() + "\n";
  out += "transcription:   " + q.at("transcription").get<std::string>() + "\n";
  out += "question:        " + q.at("question").get<std::string>() + "\n";
  out += "ground truth:    " + q.at("ground_truth").get<std::string>() + "\n";
  for (const auto& p : q.at("predictions")) {
    std::string name = p.at("model").get<std::string>();
    if (name.size() < 16) name += std::string(16 - name.size(), ' ');
    out += name + " " + p.at("answer").get<std::string>() + "\n";
  }
  return out;
}

inline nlohmann::json run_record_to_json(const RunRecord& record, bool include_timing) {
  nlohmann::json cells = nlohmann::json::array();
  for (const CellAggregate& c : record.cells) {
    cells.push_back({{"embeddings", c.embeddings},
                     {"tier", c.tier},
                     {"mean", {{"em_pct", c.em}, {"f1_pct", c.f1}, {"aos", c.aos}}},
                     {"per_seed", c.per_seed}});
  }
  nlohmann::json j{{"format", "sqa-experiment-report"},
                   {"version", 1},
                   {"spec", record.spec.to_json()},
                   {"cells", std::move(cells)},
                   {"qualitative", record.qualitative},
                   {"config_hash", record.config_hash}};
  if (include_timing) j["wall_seconds"] = record.wall_seconds;
  return j;
}

// Trains per (embedding set, seed), evaluates on every tier, and aggregates.
// The speech side trains on a wer-22.73 corpus filtered for answer
// presence. Outputs are deterministic functions of the spec and seeds.
inline RunRecord run_experiment(const ExperimentSpec& spec, const QADataset& train_set,
                                const QADataset& test_set, const PronunciationLexicon& lexicon,
                                const SyllablePatterns& patterns) {
  spec.validate();
  auto t0 = std::chrono::steady_clock::now();

  std::vector<std::string> vocab_words = dataset_vocabulary(train_set);
  {
    std::vector<std::string> test_words = dataset_vocabulary(test_set);
    vocab_words.insert(vocab_words.end(), test_words.begin(), test_words.end());
  }
  ConfusionModel confusions(lexicon, vocab_words, spec.confusion_pool_size);

  // Tier evaluation corpora are shared across rows and seeds.
  std::map<std::string, SpokenCorpus> tier_corpora;
  for (const Tier& tier : spec.tiers) {
    if (!tier_corpora.contains(tier.name)) {
      tier_corpora.emplace(
          tier.name, synthesize_tier_corpus(test_set, tier, train_set, lexicon, confusions,
                                            detail::fnv1a("eval-" + tier.name),
                                            spec.phones_per_second, spec.confusion_pool_size));
    }
  }

  // Speech-side training data: one fixed corrupted training corpus.
  std::vector<TrainingExample> train_examples;
  if (spec.train_side == "speech") {
    Tier train_tier = parse_tier("wer-22.73");
    SpokenCorpus train_corpus =
        synthesize_tier_corpus(train_set, train_tier, train_set, lexicon, confusions,
                               detail::fnv1a("train-speech"), spec.phones_per_second,
                               spec.confusion_pool_size);
    train_examples = training_examples_from_speech(train_set, train_corpus);
  } else {
    train_examples = training_examples_from_text(train_set);
  }

  RunRecord record;
  record.spec = spec;
  record.config_hash = detail::hash_hex(spec.to_json().dump());

  // predictions of the first tier, keyed by embedding set, for the
  // qualitative section (first seed only)
  std::map<std::string, std::vector<Prediction>> qual_predictions;
  const std::string qual_tier = spec.tiers.front().name;

  for (const std::string& emb : spec.embedding_sets) {
    std::map<std::string, CellAggregate> per_tier;
    for (const Tier& tier : spec.tiers) {
      per_tier[tier.name] = CellAggregate{emb, tier.name, 0.0, 0.0, 0.0, {}};
    }
    for (std::uint64_t seed : spec.seeds) {
      ModelConfig mc;
      mc.embeddings = EmbeddingConfig::parse(emb, spec.word_dim);
      mc.hidden_dim = spec.hidden_dim;
      Vocabulary vocab = build_vocabulary(token_sequences(train_examples), lexicon, patterns);
      SpanModel model(mc, std::move(vocab), &lexicon, &patterns);

      TrainConfig tc;
      tc.learning_rate = spec.learning_rate;
      tc.epochs = spec.epochs;
      tc.batch_size = spec.batch_size;
      tc.dropout = spec.dropout;
      tc.seed = seed;
      train(model, train_examples, tc);

      for (const Tier& tier : spec.tiers) {
        EvalOutput eval = evaluate_model(model, tier_corpora.at(tier.name), test_set);
        CellAggregate& cell = per_tier[tier.name];
        cell.em += eval.report.mean_em_pct;
        cell.f1 += eval.report.mean_f1_pct;
        cell.aos += eval.report.mean_aos;
        cell.per_seed.push_back({{"seed", seed},
                                 {"em_pct", eval.report.mean_em_pct},
                                 {"f1_pct", eval.report.mean_f1_pct},
                                 {"aos", eval.report.mean_aos},
                                 {"corpus_wer", eval.report.corpus_wer},
                                 {"evaluated", eval.report.records.size()},
                                 {"skipped", eval.skipped}});
        if (seed == spec.seeds.front() && tier.name == qual_tier)
          qual_predictions[emb] = eval.predictions;
      }
    }
    const double n = static_cast<double>(spec.seeds.size());
    for (const Tier& tier : spec.tiers) {
      CellAggregate cell = per_tier[tier.name];
      cell.em /= n;
      cell.f1 /= n;
      cell.aos /= n;
      record.cells.push_back(std::move(cell));
    }
  }

  // Qualitative example: prefer a question the last row answers exactly and
  // the first row does not.
  if (!qual_predictions.empty()) {
    const auto& first_row = qual_predictions.at(spec.embedding_sets.front());
    const auto& last_row = qual_predictions.at(spec.embedding_sets.back());
    std::size_t chosen = 0;
    bool found = false;
    for (std::size_t i = 0; i < first_row.size() && i < last_row.size() && !found; ++i) {
      if (last_row[i].em == 1 && first_row[i].em == 0) {
        chosen = i;
        found = true;
      }
    }
    if (!first_row.empty()) {
      const Prediction& base = first_row[chosen];
      const SpokenCorpus& corpus = tier_corpora.at(qual_tier);
      const SpokenDocument* doc = corpus.find(base.doc_id);
      const Document* ref_doc = test_set.find_document(base.doc_id);
      nlohmann::json preds = nlohmann::json::array();
      for (const std::string& emb : spec.embedding_sets) {
        const auto& row = qual_predictions.at(emb);
        if (chosen < row.size())
          preds.push_back({{"model", EmbeddingConfig::parse(emb, 1).describe()},
                           {"answer", row[chosen].predicted_text}});
      }
      record.qualitative = {{"id", base.id},
                            {"document", ref_doc ? ref_doc->text : ""},
                            {"transcription", doc ? join(doc->hyp_texts()) : ""},
                            {"question", base.question},
                            {"ground_truth", base.gold},
                            {"predictions", std::move(preds)}};
    }
  }

  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return record;
}

// report.json / report.csv / table.txt / qualitative.txt are deterministic;
// wall-clock time lives only in run_record.json.
inline void write_experiment_outputs(const RunRecord& record, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto path = [&](const char* name) { return (std::filesystem::path(out_dir) / name).string(); };

  save_json_file(run_record_to_json(record, false), path("report.json"));
  save_json_file(run_record_to_json(record, true), path("run_record.json"));

  std::string csv = "embeddings,tier,em_pct,f1_pct,aos\n";
  for (const CellAggregate& c : record.cells) {
    csv += c.embeddings + "," + c.tier + "," + detail::fmt("%.4f", c.em) + "," +
           detail::fmt("%.4f", c.f1) + "," + detail::fmt("%.6f", c.aos) + "\n";
  }
  std::ofstream csv_out(path("report.csv"), std::ios::binary);
  csv_out << csv;

  std::ofstream table_out(path("table.txt"), std::ios::binary);
  table_out << render_table(record);

  std::ofstream qual_out(path("qualitative.txt"), std::ios::binary);
  qual_out << render_qualitative(record.qualitative);
}

}  // namespace sqa

#endif  // SQA_EXPERIMENT_HPP
