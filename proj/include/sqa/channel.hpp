#ifndef SQA_CHANNEL_HPP
#define SQA_CHANNEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "sqa/edit.hpp"
#include "sqa/errors.hpp"
#include "sqa/subword.hpp"
#include "sqa/text.hpp"

namespace sqa {

// Word-level noisy channel standing in for a real recognizer. Rates apply
// per token; substitutions draw from a phonetically nearest confusion pool.
struct ChannelConfig {
  double sub_rate = 0.0;
  double del_rate = 0.0;
  double ins_rate = 0.0;
  std::optional<double> target_wer;
  std::size_t confusion_pool_size = 5;
  std::uint64_t seed = 0;

  void validate() const {
    auto in_unit = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!in_unit(sub_rate) || !in_unit(del_rate) || !in_unit(ins_rate))
      raise(ErrorCode::InvalidConfig, "channel rates must lie in [0,1]");
    if (sub_rate + del_rate > 1.0 + 1e-12)
      raise(ErrorCode::InvalidConfig, "sub_rate + del_rate must not exceed 1");
    if (confusion_pool_size == 0)
      raise(ErrorCode::InvalidConfig, "confusion_pool_size must be positive");
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_u64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Small counter-based generator. Every token position owns an independent
// stream derived from (seed, salt, position), so decisions at one position
// never shift the draws of another. That keeps the measured error rate a
// monotone function of the rate scale under a fixed seed.
class TokenRng {
 public:
  TokenRng(std::uint64_t seed, std::uint64_t salt, std::uint64_t position)
      : state_(detail::mix_u64(detail::mix_u64(seed, salt), position)) {}

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  double next_double() {  // uniform in [0,1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(next_double() * static_cast<double>(n)) % n;
  }

 private:
  std::uint64_t state_;
};

// Vocabulary plus per-word substitution pools. Pools hold the
// confusion_pool_size nearest vocabulary words under phoneme edit distance;
// words tied with the last admitted distance are all included, and the draw
// among pool members is uniform.
class ConfusionModel {
 public:
  ConfusionModel(const PronunciationLexicon& lexicon, const std::vector<std::string>& extra_vocab,
                 std::size_t pool_size)
      : lexicon_(&lexicon), pool_size_(pool_size) {
    std::set<std::string> vocab;
    for (const auto& [word, phones] : lexicon.entries()) vocab.insert(to_lower(word));
    for (const std::string& w : extra_vocab) {
      std::string norm = normalize_token(w);
      if (!norm.empty()) vocab.insert(std::move(norm));
    }
    vocab_.assign(vocab.begin(), vocab.end());
    if (vocab_.empty()) raise(ErrorCode::EmptyLexicon, "confusion model has an empty vocabulary");
    vocab_phones_.reserve(vocab_.size());
    for (const std::string& w : vocab_) vocab_phones_.push_back(g2p(w, lexicon));
  }

  const std::vector<std::string>& vocabulary() const { return vocab_; }
  const PronunciationLexicon& lexicon() const { return *lexicon_; }

  const std::vector<std::string>& pool_for(const std::string& lower_word) const {
    auto it = pools_.find(lower_word);
    if (it != pools_.end()) return it->second;
    return pools_.emplace(lower_word, build_pool(lower_word)).first->second;
  }

 private:
  std::vector<std::string> build_pool(const std::string& word) const {
    std::vector<PhonemeId> phones;
    if (detail::g2p_normalize(word).empty())
      return {};  // unpronounceable tokens are never substituted
    phones = g2p(word, *lexicon_);

    std::vector<std::pair<std::size_t, std::size_t>> ranked;  // (distance, vocab index)
    ranked.reserve(vocab_.size());
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      if (vocab_[i] == word) continue;
      ranked.emplace_back(phoneme_edit_distance(phones, vocab_phones_[i]), i);
    }
    std::sort(ranked.begin(), ranked.end(), [this](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return vocab_[a.second] < vocab_[b.second];
    });

    std::vector<std::string> pool;
    std::size_t cutoff = 0;
    for (const auto& [dist, idx] : ranked) {
      if (pool.size() >= pool_size_ && dist != cutoff) break;
      pool.push_back(vocab_[idx]);
      cutoff = dist;
    }
    return pool;
  }

  const PronunciationLexicon* lexicon_;
  std::size_t pool_size_;
  std::vector<std::string> vocab_;
  std::vector<std::vector<PhonemeId>> vocab_phones_;
  mutable std::unordered_map<std::string, std::vector<std::string>> pools_;
};

// Applies the channel to one token sequence. Per token, in stream order:
// substitution draw, pool pick, insertion draw, insertion pick. All four are
// consumed regardless of which events fire, so outcomes at a fixed seed are
// coupled across different rate settings.
inline std::vector<std::string> corrupt(const std::vector<std::string>& ref,
                                        const ChannelConfig& cfg, const ConfusionModel& confusions,
                                        std::uint64_t salt = 0) {
  cfg.validate();
  if (confusions.vocabulary().empty())
    raise(ErrorCode::EmptyLexicon, "corrupt requires a non-empty vocabulary");

  std::vector<std::string> hyp;
  hyp.reserve(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    TokenRng rng(cfg.seed, salt, i);
    const double u_event = rng.next_double();
    const double u_pick = rng.next_double();
    const double u_ins = rng.next_double();
    const double u_ins_pick = rng.next_double();

    std::string lower = to_lower(ref[i]);
    if (u_event < cfg.sub_rate) {
      const auto& pool = confusions.pool_for(lower);
      if (!pool.empty()) {
        std::size_t k = static_cast<std::size_t>(u_pick * static_cast<double>(pool.size()));
        hyp.push_back(pool[std::min(k, pool.size() - 1)]);
      } else {
        hyp.push_back(std::move(lower));
      }
    } else if (u_event < cfg.sub_rate + cfg.del_rate) {
      // deleted
    } else {
      hyp.push_back(std::move(lower));
    }

    if (u_ins < cfg.ins_rate) {
      const auto& vocab = confusions.vocabulary();
      std::size_t k = static_cast<std::size_t>(u_ins_pick * static_cast<double>(vocab.size()));
      hyp.push_back(vocab[std::min(k, vocab.size() - 1)]);
    }
  }
  return hyp;
}

// Corpus WER under a config: total edits over total reference tokens.
// Documents are salted by index so the streams are document-independent.
inline double measure_corpus_wer(const std::vector<std::vector<std::string>>& corpus,
                                 const ChannelConfig& cfg, const ConfusionModel& confusions) {
  std::size_t edits = 0, ref_tokens = 0;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    std::vector<std::string> ref_lower;
    ref_lower.reserve(corpus[d].size());
    for (const std::string& t : corpus[d]) ref_lower.push_back(to_lower(t));
    std::vector<std::string> hyp = corrupt(corpus[d], cfg, confusions, d);
    edits += edit_distance(ref_lower, hyp);
    ref_tokens += corpus[d].size();
  }
  if (ref_tokens == 0) raise(ErrorCode::EmptyReference, "corpus has no tokens");
  return static_cast<double>(edits) / static_cast<double>(ref_tokens);
}

// Finds channel rates hitting a target corpus WER. The sub:del:ins mix is
// held at 7:2:1 and a single scale is bisected until the measured WER lands
// within +/-0.01 of the target.
inline ChannelConfig calibrate(double target_wer, const std::vector<std::vector<std::string>>& corpus,
                               const ChannelConfig& cfg_template, const ConfusionModel& confusions,
                               int max_iterations = 30) {
  if (target_wer < 0.0 || target_wer >= 1.0)
    raise(ErrorCode::InvalidConfig, "target WER must lie in [0,1)");
  std::size_t total = 0;
  for (const auto& doc : corpus) total += doc.size();
  if (total < 5000)
    raise(ErrorCode::InvalidConfig, "calibration corpus must have at least 5000 tokens");

  constexpr double kSub = 0.7, kDel = 0.2, kIns = 0.1;
  auto with_scale = [&](double s) {
    ChannelConfig cfg = cfg_template;
    cfg.sub_rate = kSub * s;
    cfg.del_rate = kDel * s;
    cfg.ins_rate = kIns * s;
    cfg.target_wer = target_wer;
    return cfg;
  };

  constexpr double kTolerance = 0.01;
  if (target_wer == 0.0) return with_scale(0.0);

  const double scale_max = 1.0 / (kSub + kDel);
  double lo = 0.0, hi = scale_max;
  double f_hi = measure_corpus_wer(corpus, with_scale(hi), confusions);
  if (f_hi < target_wer - kTolerance)
    raise(ErrorCode::Unreachable, "target WER " + std::to_string(target_wer) +
                                      " above channel maximum " + std::to_string(f_hi));

  double best_scale = hi, best_err = std::abs(f_hi - target_wer);
  for (int it = 0; it < max_iterations && best_err > kTolerance / 2.0; ++it) {
    double mid = 0.5 * (lo + hi);
    double f = measure_corpus_wer(corpus, with_scale(mid), confusions);
    double err = std::abs(f - target_wer);
    if (err < best_err) {
      best_err = err;
      best_scale = mid;
    }
    if (f < target_wer)
      lo = mid;
    else
      hi = mid;
  }
  if (best_err > kTolerance)
    raise(ErrorCode::Unreachable,
          "bisection did not reach target WER " + std::to_string(target_wer));
  return with_scale(best_scale);
}

}  // namespace sqa

#endif  // SQA_CHANNEL_HPP
