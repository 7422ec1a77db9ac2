#ifndef SQA_METRICS_HPP
#define SQA_METRICS_HPP

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqa/errors.hpp"
#include "sqa/spoken.hpp"
#include "sqa/text.hpp"

namespace sqa {

struct TimeInterval {
  double t_start = 0.0;
  double t_end = 0.0;

  double length() const { return t_end - t_start; }
  bool operator==(const TimeInterval&) const = default;
};

// Answer normalization: lowercase, punctuation characters removed, the
// articles a/an/the dropped, then whitespace split. This is the usual
// community convention; without it casing alone would zero the scores on
// recognizer output.
inline std::vector<std::string> normalize_answer(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (detail::is_ascii_space(u)) {
      cleaned.push_back(' ');
    } else if (detail::is_word_byte(u)) {
      cleaned.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    }
    // ASCII punctuation is dropped without inserting a space
  }
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && cleaned[i] == ' ') ++i;
    std::size_t start = i;
    while (i < cleaned.size() && cleaned[i] != ' ') ++i;
    if (i > start) {
      std::string word = cleaned.substr(start, i - start);
      if (word != "a" && word != "an" && word != "the") out.push_back(std::move(word));
    }
  }
  return out;
}

// 1 iff the normalized prediction equals any normalized reference.
inline int exact_match(const std::string& pred, const std::vector<std::string>& refs) {
  if (refs.empty()) raise(ErrorCode::EmptyReferences, "exact_match with no references");
  std::vector<std::string> p = normalize_answer(pred);
  for (const std::string& ref : refs)
    if (p == normalize_answer(ref)) return 1;
  return 0;
}

namespace detail {

inline double f1_single(const std::vector<std::string>& pred, const std::vector<std::string>& ref) {
  if (pred.empty() || ref.empty()) return (pred.empty() && ref.empty()) ? 1.0 : 0.0;
  std::map<std::string, std::size_t> counts;
  for (const std::string& w : ref) ++counts[w];
  std::size_t common = 0;
  for (const std::string& w : pred) {
    auto it = counts.find(w);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  double recall = static_cast<double>(common) / static_cast<double>(ref.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace detail

// Token-level F1: harmonic mean of precision and recall over the multiset
// intersection, maximized over the references.
inline double f1(const std::string& pred, const std::vector<std::string>& refs) {
  if (refs.empty()) raise(ErrorCode::EmptyReferences, "f1 with no references");
  std::vector<std::string> p = normalize_answer(pred);
  double best = 0.0;
  for (const std::string& ref : refs)
    best = std::max(best, detail::f1_single(p, normalize_answer(ref)));
  return best;
}

// Duration Jaccard of two time intervals. For disjoint intervals the union
// is the sum of the two lengths, so the score is 0.
inline double aos(const TimeInterval& x, const TimeInterval& y) {
  if (x.length() <= 0.0 || y.length() <= 0.0)
    raise(ErrorCode::DegenerateInterval, "aos requires positive-length intervals");
  double inter = std::min(x.t_end, y.t_end) - std::max(x.t_start, y.t_start);
  if (inter < 0.0) inter = 0.0;
  double uni = x.length() + y.length() - inter;
  return inter / uni;
}

// Ground-truth time span: the hypothesis words aligned (Match or Sub) to the
// answer's reference tokens. Raises when every answer token was deleted.
inline TimeInterval ground_truth_interval(std::size_t answer_first_token,
                                          std::size_t answer_last_token,
                                          const SpokenDocument& spoken) {
  auto range = aligned_hyp_range(spoken, answer_first_token, answer_last_token);
  if (!range)
    raise(ErrorCode::AnswerUnalignable,
          "every answer token deleted in document '" + spoken.doc_id + "'");
  return TimeInterval{spoken.hyp_words[range->first].t_start,
                      spoken.hyp_words[range->second].t_end};
}

inline TimeInterval predicted_interval(std::size_t i, std::size_t j, const SpokenDocument& spoken) {
  if (i > j || j >= spoken.hyp_words.size())
    raise(ErrorCode::IndexOutOfRange,
          "span (" + std::to_string(i) + "," + std::to_string(j) + ") invalid for " +
              std::to_string(spoken.hyp_words.size()) + " hypothesis words");
  return TimeInterval{spoken.hyp_words[i].t_start, spoken.hyp_words[j].t_end};
}

struct MetricRecord {
  std::string id;
  int em = 0;       // {0,1}
  double f1 = 0.0;  // [0,1]
  double aos = 0.0; // [0,1]
};

struct MetricReport {
  std::vector<MetricRecord> records;
  double mean_em_pct = 0.0;
  double mean_f1_pct = 0.0;
  double mean_aos = 0.0;
  double corpus_wer = 0.0;
  std::size_t skipped = 0;  // questions excluded because no reference span aligns
};

// Arithmetic means in double precision; EM and F1 reported as percentages,
// AOS as a fraction.
inline MetricReport aggregate(std::vector<MetricRecord> records, double corpus_wer = 0.0,
                              std::size_t skipped = 0) {
  if (records.empty()) raise(ErrorCode::EmptyRecords, "aggregate over zero records");
  MetricReport report;
  double em = 0.0, f = 0.0, a = 0.0;
  for (const MetricRecord& r : records) {
    em += r.em;
    f += r.f1;
    a += r.aos;
  }
  const double n = static_cast<double>(records.size());
  report.mean_em_pct = 100.0 * em / n;
  report.mean_f1_pct = 100.0 * f / n;
  report.mean_aos = a / n;
  report.corpus_wer = corpus_wer;
  report.skipped = skipped;
  report.records = std::move(records);
  return report;
}

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace detail

inline nlohmann::json metric_report_to_json(const MetricReport& report) {
  nlohmann::json recs = nlohmann::json::array();
  for (const MetricRecord& r : report.records)
    recs.push_back({{"id", r.id}, {"em", r.em}, {"f1", r.f1}, {"aos", r.aos}});
  return nlohmann::json{{"format", "sqa-metric-report"},
                        {"version", 1},
                        {"aggregate",
                         {{"em_pct", report.mean_em_pct},
                          {"f1_pct", report.mean_f1_pct},
                          {"aos", report.mean_aos},
                          {"corpus_wer", report.corpus_wer},
                          {"count", report.records.size()},
                          {"skipped", report.skipped}}},
                        {"records", std::move(recs)}};
}

inline MetricReport metric_report_from_json(const nlohmann::json& j) {
  try {
    MetricReport report;
    for (const auto& rj : j.at("records")) {
      report.records.push_back(MetricRecord{rj.at("id").get<std::string>(),
                                            rj.at("em").get<int>(), rj.at("f1").get<double>(),
                                            rj.at("aos").get<double>()});
    }
    const auto& agg = j.at("aggregate");
    report.mean_em_pct = agg.at("em_pct").get<double>();
    report.mean_f1_pct = agg.at("f1_pct").get<double>();
    report.mean_aos = agg.at("aos").get<double>();
    report.corpus_wer = agg.at("corpus_wer").get<double>();
    report.skipped = agg.at("skipped").get<std::size_t>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedInput, std::string("metric report parse: ") + e.what());
  }
}

// CSV layout: one row per example plus a trailing summary row.
inline std::string metric_report_to_csv(const MetricReport& report) {
  std::string out = "id,em,f1,aos\n";
  for (const MetricRecord& r : report.records) {
    out += r.id;
    out += ",";
    out += std::to_string(r.em);
    out += ",";
    out += detail::fmt("%.6f", r.f1);
    out += ",";
    out += detail::fmt("%.6f", r.aos);
    out += "\n";
  }
  out += "summary," + detail::fmt("%.2f", report.mean_em_pct) + "," +
         detail::fmt("%.2f", report.mean_f1_pct) + "," + detail::fmt("%.4f", report.mean_aos) +
         "\n";
  return out;
}

}  // namespace sqa

#endif  // SQA_METRICS_HPP
