#ifndef SQA_FIXTURE_HPP
#define SQA_FIXTURE_HPP

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqa/corpus.hpp"
#include "sqa/errors.hpp"

namespace sqa {

// Synthetic desk-scale QA fixture: templated single-fact sentences with
// entity answers. Every question names enough of its sentence to be
// answerable by attention over cue words, and every answer is a contiguous
// token span.
struct FixtureConfig {
  std::size_t num_docs = 250;
  std::size_t sentences_per_doc = 8;
  std::uint64_t seed = 1;
  std::string split_label = "train";
};

namespace fixture_detail {

inline const std::vector<std::string>& cities() {
  static const std::vector<std::string> v{
      "portland", "austin",  "denver", "boston", "madison", "salem",
      "dayton",   "fresno",  "tucson", "norfolk", "albany",  "toledo",
      "provo",    "camden",  "dover",  "bangor", "racine",  "yonkers",
      "laredo",   "helena",  "topeka", "eugene", "waco",    "reno"};
  return v;
}

inline const std::vector<std::string>& first_names() {
  static const std::vector<std::string> v{
      "maria", "elena", "victor", "samuel", "nora",  "felix", "clara",
      "oscar", "irene", "hugo",   "alice",  "martin", "paula", "simon",
      "greta", "lucas", "wanda",  "edgar",  "sonia", "ruben"};
  return v;
}

inline const std::vector<std::string>& last_names() {
  static const std::vector<std::string> v{
      "lopez",  "carter", "hansen",  "brooks",  "weaver", "malone", "porter",
      "dalton", "shaw",   "becker",  "rollins", "fisher", "grady",  "navarro",
      "barton", "mercer", "holden",  "vargas",  "tillman", "osborne"};
  return v;
}

inline const std::vector<std::string>& org_adjectives() {
  static const std::vector<std::string> v{"northern", "united",  "golden", "pacific", "summit",
                                          "crescent", "liberty", "pioneer", "beacon", "harbor"};
  return v;
}

inline const std::vector<std::string>& org_trades() {
  static const std::vector<std::string> v{"textile", "lumber", "ceramics", "shipping",
                                          "printing", "milling"};
  return v;
}

inline const std::vector<std::string>& years() {
  static const std::vector<std::string> v{"1952", "1963", "1971", "1985", "1990",
                                          "2003", "2010", "1948", "1977", "1969"};
  return v;
}

inline const std::vector<std::string>& numbers() {
  static const std::vector<std::string> v{"twelve", "forty",  "sixty",     "ninety", "twenty",
                                          "thirty", "fifty",  "eighty",    "seventeen", "eleven"};
  return v;
}

inline const std::vector<std::string>& items() {
  static const std::vector<std::string> v{"furniture", "bicycles", "engines", "textiles",
                                          "pianos",    "lanterns", "kettles", "saddles",
                                          "barrels",   "rope"};
  return v;
}

inline const std::vector<std::string>& jobs() {
  static const std::vector<std::string> v{"teacher", "baker",  "engineer", "nurse",  "painter",
                                          "farmer",  "tailor", "clerk",    "broker", "printer"};
  return v;
}

inline const std::vector<std::string>& rivers() {
  static const std::vector<std::string> v{"willow", "cedar", "falcon", "otter", "juniper",
                                          "maple",  "heron", "aspen",  "birch", "alder"};
  return v;
}

struct Sentence {
  std::string text;
  std::string question;
  std::string answer;  // substring of text
};

template <typename T>
const T& pick(const std::vector<T>& pool, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
  return pool[d(rng)];
}

template <typename T>
T draw_unused(const std::vector<T>& pool, std::set<T>& used, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const T& candidate = pick(pool, rng);
    if (!used.contains(candidate)) {
      used.insert(candidate);
      return candidate;
    }
  }
  // pool exhausted; fall back to any member
  return pick(pool, rng);
}

}  // namespace fixture_detail

inline nlohmann::json generate_fixture_squad_json(const FixtureConfig& cfg) {
  using namespace fixture_detail;
  std::mt19937_64 rng(cfg.seed);

  nlohmann::json articles = nlohmann::json::array();
  for (std::size_t d = 0; d < cfg.num_docs; ++d) {
    std::set<std::string> used_cities, used_persons, used_orgs;
    std::vector<Sentence> sentences;
    for (std::size_t s = 0; s < cfg.sentences_per_doc; ++s) {
      std::uniform_int_distribution<int> tmpl_dist(0, 6);
      const int tmpl = tmpl_dist(rng);
      Sentence out;
      switch (tmpl) {
        case 0: {
          std::string city = draw_unused(cities(), used_cities, rng);
          std::string person = pick(first_names(), rng) + " " + pick(last_names(), rng);
          used_persons.insert(person);
          out.text = "the mayor of " + city + " is " + person + " .";
          out.question = "who is the mayor of " + city + " ?";
          out.answer = person;
          break;
        }
        case 1: {
          std::string org;
          for (int attempt = 0; attempt < 64 && org.empty(); ++attempt) {
            std::string c = pick(org_adjectives(), rng) + " " + pick(org_trades(), rng);
            if (!used_orgs.contains(c)) {
              used_orgs.insert(c);
              org = c;
            }
          }
          if (org.empty()) org = pick(org_adjectives(), rng) + " " + pick(org_trades(), rng);
          std::string person = pick(first_names(), rng) + " " + pick(last_names(), rng);
          std::string year = pick(years(), rng);
          out.text = "the " + org + " company was founded by " + person + " in " + year + " .";
          std::uniform_int_distribution<int> coin(0, 1);
          if (coin(rng) == 0) {
            out.question = "who founded the " + org + " company ?";
            out.answer = person;
          } else {
            out.question = "when was the " + org + " company founded ?";
            out.answer = year;
          }
          break;
        }
        case 2: {
          std::string city = draw_unused(cities(), used_cities, rng);
          std::string item = pick(items(), rng);
          std::string number = pick(numbers(), rng);
          out.text = "the " + item + " plant in " + city + " has " + number + " workers .";
          out.question = "how many workers does the " + item + " plant in " + city + " have ?";
          out.answer = number;
          break;
        }
        case 3: {
          std::string person = pick(first_names(), rng) + " " + pick(last_names(), rng);
          std::string from = draw_unused(cities(), used_cities, rng);
          std::string to = draw_unused(cities(), used_cities, rng);
          std::string year = pick(years(), rng);
          out.text = person + " moved from " + from + " to " + to + " in " + year + " .";
          out.question = "which city did " + person + " move to ?";
          out.answer = to;
          break;
        }
        case 4: {
          std::string city = draw_unused(cities(), used_cities, rng);
          std::string year = pick(years(), rng);
          out.text = "the " + city + " museum opened in " + year + " .";
          out.question = "when did the " + city + " museum open ?";
          out.answer = year;
          break;
        }
        case 5: {
          std::string person = pick(first_names(), rng) + " " + pick(last_names(), rng);
          std::string city = draw_unused(cities(), used_cities, rng);
          std::string job = pick(jobs(), rng);
          out.text = person + " works as a " + job + " in " + city + " .";
          out.question = "what is the job of " + person + " in " + city + " ?";
          out.answer = job;
          break;
        }
        default: {
          std::string city = draw_unused(cities(), used_cities, rng);
          std::string river = pick(rivers(), rng);
          out.text = "the river near " + city + " is called the " + river + " .";
          out.question = "what is the river near " + city + " called ?";
          out.answer = river;
          break;
        }
      }
      sentences.push_back(std::move(out));
    }

    std::string context;
    nlohmann::json qas = nlohmann::json::array();
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      if (!context.empty()) context += " ";
      const std::size_t sentence_offset = context.size();
      context += sentences[s].text;
      const std::size_t in_sentence = sentences[s].text.find(sentences[s].answer);
      qas.push_back({{"id", "d" + std::to_string(d) + "_q" + std::to_string(s)},
                     {"question", sentences[s].question},
                     {"answers", nlohmann::json::array({{{"text", sentences[s].answer},
                                                         {"answer_start",
                                                          sentence_offset + in_sentence}}})}});
    }
    nlohmann::json paragraph{{"context", context}, {"qas", std::move(qas)}};
    articles.push_back({{"title", "doc" + std::to_string(d)},
                        {"paragraphs", nlohmann::json::array({std::move(paragraph)})}});
  }
  return nlohmann::json{{"data", std::move(articles)}};
}

inline QADataset generate_fixture(const FixtureConfig& cfg) {
  nlohmann::json j = generate_fixture_squad_json(cfg);
  std::stringstream ss;
  ss << j.dump();
  return parse_squad(ss, cfg.split_label);
}

}  // namespace sqa

#endif  // SQA_FIXTURE_HPP
