#ifndef SQA_SPOKEN_HPP
#define SQA_SPOKEN_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sqa/channel.hpp"
#include "sqa/edit.hpp"
#include "sqa/errors.hpp"
#include "sqa/subword.hpp"
#include "sqa/text.hpp"

namespace sqa {

// A hypothesis word with its synthesized time interval, in seconds.
struct TimedWord {
  std::string text;
  double t_start = 0.0;
  double t_end = 0.0;

  bool operator==(const TimedWord&) const = default;
};

// One document after the simulated recognition stage. ref_tokens holds the
// speakable tokens of the source document (punctuation is not spoken);
// ref_doc_index maps each of them back to its index in the full token list.
struct SpokenDocument {
  std::string doc_id;
  std::vector<Token> ref_tokens;
  std::vector<std::size_t> ref_doc_index;
  std::vector<TimedWord> hyp_words;
  std::vector<EditOp> alignment;
  double wer = 0.0;

  std::vector<std::string> hyp_texts() const {
    std::vector<std::string> out;
    out.reserve(hyp_words.size());
    for (const TimedWord& w : hyp_words) out.push_back(w.text);
    return out;
  }

  std::vector<std::string> ref_lower_texts() const {
    std::vector<std::string> out;
    out.reserve(ref_tokens.size());
    for (const Token& t : ref_tokens) out.push_back(to_lower(t.text));
    return out;
  }
};

constexpr double kInterWordGapSeconds = 0.05;
constexpr double kDefaultPhonesPerSecond = 10.0;

// Word duration is max(1, phoneme count) / phones_per_second; words run
// contiguously from t=0 with a fixed gap between them.
inline std::vector<TimedWord> synthesize_timestamps(const std::vector<std::string>& hyp,
                                                    const PronunciationLexicon& lexicon,
                                                    double phones_per_second = kDefaultPhonesPerSecond) {
  if (phones_per_second <= 0.0)
    raise(ErrorCode::InvalidConfig, "phones_per_second must be positive");
  std::vector<TimedWord> out;
  out.reserve(hyp.size());
  double t = 0.0;
  for (const std::string& word : hyp) {
    std::size_t phones = std::max<std::size_t>(1, phoneme_count_or(word, lexicon, 1));
    double duration = static_cast<double>(phones) / phones_per_second;
    out.push_back(TimedWord{word, t, t + duration});
    t += duration + kInterWordGapSeconds;
  }
  return out;
}

// Runs the channel over one document's speakable tokens and aligns the
// corrupted output against the lowercased reference.
inline SpokenDocument build_spoken_document(const std::string& doc_id,
                                            const std::vector<Token>& doc_tokens,
                                            const ChannelConfig& cfg,
                                            const ConfusionModel& confusions,
                                            const PronunciationLexicon& lexicon,
                                            double phones_per_second = kDefaultPhonesPerSecond) {
  SpokenDocument out;
  out.doc_id = doc_id;
  for (std::size_t i = 0; i < doc_tokens.size(); ++i) {
    if (!is_speakable(doc_tokens[i].text)) continue;
    out.ref_tokens.push_back(doc_tokens[i]);
    out.ref_doc_index.push_back(i);
  }

  std::vector<std::string> ref_lower = out.ref_lower_texts();
  std::vector<std::string> hyp = corrupt(ref_lower, cfg, confusions, detail::fnv1a(doc_id));
  out.hyp_words = synthesize_timestamps(hyp, lexicon, phones_per_second);

  Alignment aligned = levenshtein_align(ref_lower, hyp);
  out.alignment = std::move(aligned.ops);
  out.wer = out.ref_tokens.empty()
                ? 0.0
                : static_cast<double>(aligned.distance) / static_cast<double>(out.ref_tokens.size());
  return out;
}

// Hypothesis index range covered by Match/Sub alignment of the reference
// tokens whose document indices fall in [doc_first, doc_last]. Empty when
// every such token was deleted.
inline std::optional<std::pair<std::size_t, std::size_t>> aligned_hyp_range(
    const SpokenDocument& doc, std::size_t doc_first, std::size_t doc_last) {
  std::optional<std::size_t> lo, hi;
  for (const EditOp& op : doc.alignment) {
    if (op.kind != EditKind::Match && op.kind != EditKind::Sub) continue;
    std::size_t di = doc.ref_doc_index[op.ref_index];
    if (di < doc_first || di > doc_last) continue;
    if (!lo || op.hyp_index < *lo) lo = op.hyp_index;
    if (!hi || op.hyp_index > *hi) hi = op.hyp_index;
  }
  if (!lo) return std::nullopt;
  return std::make_pair(*lo, *hi);
}

struct SpokenCorpus {
  ChannelConfig channel;
  double phones_per_second = kDefaultPhonesPerSecond;
  double corpus_wer = 0.0;
  std::vector<SpokenDocument> documents;

  const SpokenDocument* find(const std::string& doc_id) const {
    for (const SpokenDocument& d : documents)
      if (d.doc_id == doc_id) return &d;
    return nullptr;
  }

  std::map<std::string, const SpokenDocument*> by_id() const {
    std::map<std::string, const SpokenDocument*> out;
    for (const SpokenDocument& d : documents) out[d.doc_id] = &d;
    return out;
  }
};

namespace detail {

inline double round3(double x) { return std::nearbyint(x * 1000.0) / 1000.0; }

inline nlohmann::json channel_to_json(const ChannelConfig& cfg) {
  nlohmann::json j{{"sub_rate", cfg.sub_rate},
                   {"del_rate", cfg.del_rate},
                   {"ins_rate", cfg.ins_rate},
                   {"confusion_pool_size", cfg.confusion_pool_size},
                   {"seed", cfg.seed}};
  if (cfg.target_wer)
    j["target_wer"] = *cfg.target_wer;
  else
    j["target_wer"] = nullptr;
  return j;
}

inline ChannelConfig channel_from_json(const nlohmann::json& j) {
  ChannelConfig cfg;
  cfg.sub_rate = j.at("sub_rate").get<double>();
  cfg.del_rate = j.at("del_rate").get<double>();
  cfg.ins_rate = j.at("ins_rate").get<double>();
  cfg.confusion_pool_size = j.at("confusion_pool_size").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("target_wer") && !j.at("target_wer").is_null())
    cfg.target_wer = j.at("target_wer").get<double>();
  return cfg;
}

}  // namespace detail

inline nlohmann::json spoken_corpus_to_json(const SpokenCorpus& corpus) {
  nlohmann::json docs = nlohmann::json::array();
  for (const SpokenDocument& d : corpus.documents) {
    nlohmann::json ref = nlohmann::json::array();
    for (std::size_t i = 0; i < d.ref_tokens.size(); ++i) {
      ref.push_back({{"text", d.ref_tokens[i].text},
                     {"start", d.ref_tokens[i].char_start},
                     {"end", d.ref_tokens[i].char_end},
                     {"doc_index", d.ref_doc_index[i]}});
    }
    nlohmann::json hyp = nlohmann::json::array();
    for (const TimedWord& w : d.hyp_words) {
      hyp.push_back({{"text", w.text},
                     {"t_start", detail::round3(w.t_start)},
                     {"t_end", detail::round3(w.t_end)}});
    }
    nlohmann::json ops = nlohmann::json::array();
    for (const EditOp& op : d.alignment) {
      nlohmann::json o{{"op", edit_kind_name(op.kind)}};
      if (op.ref_index != EditOp::npos) o["ref"] = op.ref_index;
      if (op.hyp_index != EditOp::npos) o["hyp"] = op.hyp_index;
      ops.push_back(std::move(o));
    }
    docs.push_back({{"id", d.doc_id},
                    {"ref_tokens", std::move(ref)},
                    {"hyp_words", std::move(hyp)},
                    {"alignment", std::move(ops)},
                    {"wer", d.wer}});
  }
  return nlohmann::json{{"format", "sqa-spoken-corpus"},
                        {"version", 1},
                        {"channel", detail::channel_to_json(corpus.channel)},
                        {"phones_per_second", corpus.phones_per_second},
                        {"corpus_wer", corpus.corpus_wer},
                        {"documents", std::move(docs)}};
}

inline SpokenCorpus spoken_corpus_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "sqa-spoken-corpus")
      raise(ErrorCode::MalformedInput, "not a spoken-corpus file");
    SpokenCorpus corpus;
    corpus.channel = detail::channel_from_json(j.at("channel"));
    corpus.phones_per_second = j.at("phones_per_second").get<double>();
    corpus.corpus_wer = j.at("corpus_wer").get<double>();
    for (const auto& dj : j.at("documents")) {
      SpokenDocument d;
      d.doc_id = dj.at("id").get<std::string>();
      for (const auto& tj : dj.at("ref_tokens")) {
        d.ref_tokens.push_back(Token{tj.at("text").get<std::string>(),
                                     tj.at("start").get<std::size_t>(),
                                     tj.at("end").get<std::size_t>()});
        d.ref_doc_index.push_back(tj.at("doc_index").get<std::size_t>());
      }
      for (const auto& wj : dj.at("hyp_words")) {
        d.hyp_words.push_back(TimedWord{wj.at("text").get<std::string>(),
                                        wj.at("t_start").get<double>(),
                                        wj.at("t_end").get<double>()});
      }
      for (const auto& oj : dj.at("alignment")) {
        EditOp op;
        std::string kind = oj.at("op").get<std::string>();
        if (kind == "match")
          op.kind = EditKind::Match;
        else if (kind == "sub")
          op.kind = EditKind::Sub;
        else if (kind == "del")
          op.kind = EditKind::Del;
        else if (kind == "ins")
          op.kind = EditKind::Ins;
        else
          raise(ErrorCode::MalformedInput, "unknown alignment op '" + kind + "'");
        if (oj.contains("ref")) op.ref_index = oj.at("ref").get<std::size_t>();
        if (oj.contains("hyp")) op.hyp_index = oj.at("hyp").get<std::size_t>();
        d.alignment.push_back(op);
      }
      d.wer = dj.at("wer").get<double>();
      corpus.documents.push_back(std::move(d));
    }
    return corpus;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedInput, std::string("spoken-corpus parse: ") + e.what());
  }
}

inline void save_json_file(const nlohmann::json& j, const std::string& path, int indent = 1) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot open for writing: " + path);
  out << j.dump(indent) << '\n';
  if (!out) raise(ErrorCode::IoError, "write failed: " + path);
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedInput, path + ": " + e.what());
  }
}

}  // namespace sqa

#endif  // SQA_SPOKEN_HPP
