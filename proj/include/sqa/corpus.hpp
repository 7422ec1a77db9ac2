#ifndef SQA_CORPUS_HPP
#define SQA_CORPUS_HPP

#include <cstddef>
#include <istream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sqa/errors.hpp"
#include "sqa/spoken.hpp"
#include "sqa/text.hpp"

namespace sqa {

struct Document {
  std::string id;
  std::string text;
  std::vector<Token> tokens;

  bool operator==(const Document&) const = default;
};

// An answer anchored both by character offset and by the inclusive token
// span covering every token whose character range intersects the answer.
struct AnswerRef {
  std::string text;
  std::size_t char_start = 0;
  std::size_t token_first = 0;
  std::size_t token_last = 0;

  bool operator==(const AnswerRef&) const = default;
};

struct QAPair {
  std::string id;
  std::string doc_id;
  std::string question;
  std::vector<Token> question_tokens;
  std::vector<AnswerRef> answers;  // non-empty

  bool operator==(const QAPair&) const = default;
};

struct QADataset {
  std::vector<Document> documents;
  std::vector<QAPair> pairs;
  std::string split_label = "train";

  bool operator==(const QADataset&) const = default;

  const Document* find_document(const std::string& id) const {
    for (const Document& d : documents)
      if (d.id == id) return &d;
    return nullptr;
  }

  std::map<std::string, const Document*> documents_by_id() const {
    std::map<std::string, const Document*> out;
    for (const Document& d : documents) out[d.id] = &d;
    return out;
  }

  std::size_t total_tokens() const {
    std::size_t n = 0;
    for (const Document& d : documents) n += d.tokens.size();
    return n;
  }
};

// Resolves a character-anchored answer to its covering token span.
inline AnswerRef resolve_answer(const Document& doc, const std::string& text,
                                std::size_t char_start) {
  if (char_start >= doc.text.size())
    raise(ErrorCode::OffsetOutOfRange,
          "answer_start " + std::to_string(char_start) + " beyond context length " +
              std::to_string(doc.text.size()) + " in document '" + doc.id + "'");
  const std::size_t char_end = char_start + text.size();
  AnswerRef out;
  out.text = text;
  out.char_start = char_start;
  bool found = false;
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    const Token& t = doc.tokens[i];
    if (t.char_end <= char_start || t.char_start >= char_end) continue;
    if (!found) out.token_first = i;
    out.token_last = i;
    found = true;
  }
  if (!found)
    raise(ErrorCode::OffsetOutOfRange,
          "answer at offset " + std::to_string(char_start) + " covers no token in document '" +
              doc.id + "'");
  return out;
}

// Parses the nested article/paragraph/qas JSON layout into the canonical
// token-anchored model. Each paragraph becomes one document.
inline QADataset parse_squad(std::istream& in, const std::string& split_label = "train") {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedInput, std::string("invalid JSON: ") + e.what());
  }

  QADataset out;
  out.split_label = split_label;
  try {
    const auto& data = root.at("data");
    for (std::size_t a = 0; a < data.size(); ++a) {
      const auto& article = data[a];
      std::string title = article.contains("title")
                              ? article.at("title").get<std::string>()
                              : ("article" + std::to_string(a));
      const auto& paragraphs = article.at("paragraphs");
      for (std::size_t p = 0; p < paragraphs.size(); ++p) {
        const auto& para = paragraphs[p];
        Document doc;
        doc.id = title + "_p" + std::to_string(p);
        doc.text = para.at("context").get<std::string>();
        doc.tokens = tokenize(doc.text);
        for (const auto& qa : para.at("qas")) {
          QAPair pair;
          pair.id = qa.at("id").get<std::string>();
          pair.doc_id = doc.id;
          pair.question = qa.at("question").get<std::string>();
          pair.question_tokens = tokenize(pair.question);
          const auto& answers = qa.at("answers");
          if (answers.empty())
            raise(ErrorCode::MalformedInput, "qa '" + pair.id + "' has no answers");
          for (const auto& ans : answers) {
            pair.answers.push_back(resolve_answer(doc, ans.at("text").get<std::string>(),
                                                  ans.at("answer_start").get<std::size_t>()));
          }
          out.pairs.push_back(std::move(pair));
        }
        out.documents.push_back(std::move(doc));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedInput, std::string("missing or mistyped field: ") + e.what());
  }
  return out;
}

namespace detail {

inline nlohmann::json tokens_to_json(const std::vector<Token>& tokens) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Token& t : tokens)
    arr.push_back({{"text", t.text}, {"start", t.char_start}, {"end", t.char_end}});
  return arr;
}

inline std::vector<Token> tokens_from_json(const nlohmann::json& arr) {
  std::vector<Token> out;
  for (const auto& tj : arr)
    out.push_back(Token{tj.at("text").get<std::string>(), tj.at("start").get<std::size_t>(),
                        tj.at("end").get<std::size_t>()});
  return out;
}

}  // namespace detail

inline nlohmann::json dataset_to_json(const QADataset& dataset) {
  nlohmann::json docs = nlohmann::json::array();
  for (const Document& d : dataset.documents) {
    docs.push_back(
        {{"id", d.id}, {"text", d.text}, {"tokens", detail::tokens_to_json(d.tokens)}});
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const QAPair& p : dataset.pairs) {
    nlohmann::json answers = nlohmann::json::array();
    for (const AnswerRef& a : p.answers) {
      answers.push_back({{"text", a.text},
                         {"char_start", a.char_start},
                         {"token_span", {a.token_first, a.token_last}}});
    }
    pairs.push_back({{"id", p.id},
                     {"document", p.doc_id},
                     {"question", p.question},
                     {"question_tokens", detail::tokens_to_json(p.question_tokens)},
                     {"answers", std::move(answers)}});
  }
  return nlohmann::json{{"format", "sqa-dataset"},
                        {"version", 1},
                        {"split", dataset.split_label},
                        {"documents", std::move(docs)},
                        {"pairs", std::move(pairs)}};
}

inline QADataset dataset_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "sqa-dataset")
      raise(ErrorCode::MalformedInput, "not a canonical dataset file");
    QADataset out;
    out.split_label = j.at("split").get<std::string>();
    for (const auto& dj : j.at("documents")) {
      out.documents.push_back(Document{dj.at("id").get<std::string>(),
                                       dj.at("text").get<std::string>(),
                                       detail::tokens_from_json(dj.at("tokens"))});
    }
    for (const auto& pj : j.at("pairs")) {
      QAPair p;
      p.id = pj.at("id").get<std::string>();
      p.doc_id = pj.at("document").get<std::string>();
      p.question = pj.at("question").get<std::string>();
      p.question_tokens = detail::tokens_from_json(pj.at("question_tokens"));
      for (const auto& aj : pj.at("answers")) {
        AnswerRef a;
        a.text = aj.at("text").get<std::string>();
        a.char_start = aj.at("char_start").get<std::size_t>();
        a.token_first = aj.at("token_span").at(0).get<std::size_t>();
        a.token_last = aj.at("token_span").at(1).get<std::size_t>();
        p.answers.push_back(std::move(a));
      }
      if (p.answers.empty())
        raise(ErrorCode::MalformedInput, "pair '" + p.id + "' has no answers");
      out.pairs.push_back(std::move(p));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedInput, std::string("dataset parse: ") + e.what());
  }
}

// Normalized token sequence of an answer string (lowercase, punctuation
// stripped, empty tokens dropped).
inline std::vector<std::string> normalized_answer_tokens(const std::string& answer_text) {
  return normalized_words(answer_text);
}

inline std::vector<std::string> normalized_hyp_tokens(const SpokenDocument& doc) {
  std::vector<std::string> out;
  out.reserve(doc.hyp_words.size());
  for (const TimedWord& w : doc.hyp_words) {
    std::string norm = normalize_token(w.text);
    if (!norm.empty()) out.push_back(std::move(norm));
  }
  return out;
}

// First start index of `needle` as a contiguous subsequence of `haystack`.
inline std::optional<std::size_t> find_subsequence(const std::vector<std::string>& haystack,
                                                   const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size(); ++k) {
      if (haystack[i + k] != needle[k]) {
        ok = false;
        break;
      }
    }
    if (ok) return i;
  }
  return std::nullopt;
}

struct FilterResult {
  QADataset dataset;
  std::size_t removed = 0;
};

// Keeps the pairs whose first reference answer survives in the hypothesis
// transcript: its normalized tokens occur contiguously AND at least one of
// its reference tokens aligns (Match/Sub) to a hypothesis word, so a ground
// truth time interval is always derivable for retained pairs.
inline FilterResult filter_answerable(const QADataset& dataset,
                                      const std::map<std::string, const SpokenDocument*>& transcripts) {
  FilterResult out;
  out.dataset.split_label = dataset.split_label;
  out.dataset.documents = dataset.documents;
  for (const QAPair& pair : dataset.pairs) {
    auto it = transcripts.find(pair.doc_id);
    if (it == transcripts.end() || it->second == nullptr)
      raise(ErrorCode::MissingTranscript, "no transcript for document '" + pair.doc_id + "'");
    const SpokenDocument& spoken = *it->second;
    const AnswerRef& first = pair.answers.front();
    bool keep = false;
    std::vector<std::string> needle = normalized_answer_tokens(first.text);
    if (!needle.empty() &&
        find_subsequence(normalized_hyp_tokens(spoken), needle).has_value() &&
        aligned_hyp_range(spoken, first.token_first, first.token_last).has_value()) {
      keep = true;
    }
    if (keep)
      out.dataset.pairs.push_back(pair);
    else
      ++out.removed;
  }
  return out;
}

// Runs the channel over every document of a dataset.
inline SpokenCorpus build_spoken_corpus(const QADataset& dataset, const ChannelConfig& cfg,
                                        const ConfusionModel& confusions,
                                        const PronunciationLexicon& lexicon,
                                        double phones_per_second = kDefaultPhonesPerSecond) {
  SpokenCorpus corpus;
  corpus.channel = cfg;
  corpus.phones_per_second = phones_per_second;
  std::size_t edits = 0, ref_tokens = 0;
  for (const Document& doc : dataset.documents) {
    SpokenDocument spoken =
        build_spoken_document(doc.id, doc.tokens, cfg, confusions, lexicon, phones_per_second);
    ref_tokens += spoken.ref_tokens.size();
    edits += static_cast<std::size_t>(
        std::llround(spoken.wer * static_cast<double>(spoken.ref_tokens.size())));
    corpus.documents.push_back(std::move(spoken));
  }
  corpus.corpus_wer =
      ref_tokens == 0 ? 0.0 : static_cast<double>(edits) / static_cast<double>(ref_tokens);
  return corpus;
}

// Vocabulary of a dataset's speakable tokens, normalized; feeds the
// confusion model alongside the lexicon headwords.
inline std::vector<std::string> dataset_vocabulary(const QADataset& dataset) {
  std::set<std::string> vocab;
  for (const Document& d : dataset.documents)
    for (const Token& t : d.tokens) {
      std::string norm = normalize_token(t.text);
      if (!norm.empty()) vocab.insert(std::move(norm));
    }
  return {vocab.begin(), vocab.end()};
}

}  // namespace sqa

#endif  // SQA_CORPUS_HPP
