#ifndef SQA_CHECKPOINT_HPP
#define SQA_CHECKPOINT_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqa/errors.hpp"
#include "sqa/model.hpp"

namespace sqa {

// Checkpoint layout:
//   bytes 0..7   magic "SQAMDL01"
//   bytes 8..15  header length (little-endian u64)
//   header       JSON: config, vocabulary, named parameter blocks with shapes
//   payload      concatenated parameter values, little-endian f64
inline constexpr char kCheckpointMagic[8] = {'S', 'Q', 'A', 'M', 'D', 'L', '0', '1'};

namespace detail {

inline nlohmann::json subword_config_to_json(const std::optional<SubwordConfig>& cfg) {
  if (!cfg) return nullptr;
  return nlohmann::json{{"dim", cfg->dim}, {"k", cfg->k}, {"n_filters", cfg->n_filters}};
}

inline std::optional<SubwordConfig> subword_config_from_json(const nlohmann::json& j,
                                                             SubwordUnit unit) {
  if (j.is_null()) return std::nullopt;
  SubwordConfig cfg = SubwordConfig::defaults(unit);
  cfg.dim = j.at("dim").get<std::size_t>();
  cfg.k = j.at("k").get<std::size_t>();
  cfg.n_filters = j.at("n_filters").get<std::size_t>();
  return cfg;
}

inline void write_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t read_u64_le(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

inline void write_f64_le(std::ostream& out, const std::vector<double>& values) {
  for (double d : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_u64_le(out, bits);
  }
}

inline void read_f64_le(std::istream& in, std::vector<double>& values) {
  for (double& d : values) {
    std::uint64_t bits = read_u64_le(in);
    std::memcpy(&d, &bits, 8);
  }
}

}  // namespace detail

inline void save_checkpoint(SpanModel& model, const std::string& path,
                            const nlohmann::json& extra = nlohmann::json::object()) {
  const ModelConfig& cfg = model.config();
  const Vocabulary& vocab = model.vocabulary();

  nlohmann::json params = nlohmann::json::array();
  for (Param* p : model.parameters())
    params.push_back({{"name", p->name}, {"rows", p->rows}, {"cols", p->cols}});

  nlohmann::json header{
      {"version", 1},
      {"config",
       {{"word_dim", cfg.embeddings.word_dim},
        {"hidden_dim", cfg.hidden_dim},
        {"phoneme", detail::subword_config_to_json(cfg.embeddings.phoneme)},
        {"syllable", detail::subword_config_to_json(cfg.embeddings.syllable)},
        {"char", detail::subword_config_to_json(cfg.embeddings.chars)}}},
      {"vocabulary",
       {{"words", vocab.words},
        {"syllables", vocab.syllables},
        {"chars", vocab.chars},
        {"phonemes", vocab.phonemes}}},
      {"params", std::move(params)},
      {"extra", extra}};

  std::string header_str = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot open for writing: " + path);
  out.write(kCheckpointMagic, 8);
  detail::write_u64_le(out, header_str.size());
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (Param* p : model.parameters()) detail::write_f64_le(out, p->value);
  if (!out) raise(ErrorCode::IoError, "write failed: " + path);
}

struct LoadedCheckpoint {
  std::unique_ptr<SpanModel> model;
  nlohmann::json extra;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path,
                                        const PronunciationLexicon* lexicon,
                                        const SyllablePatterns* patterns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    raise(ErrorCode::MalformedInput, path + ": not a model checkpoint");
  std::uint64_t header_len = detail::read_u64_le(in);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) raise(ErrorCode::MalformedInput, path + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedInput, path + ": bad header: " + e.what());
  }

  try {
    const auto& cj = header.at("config");
    ModelConfig cfg;
    cfg.embeddings.word_dim = cj.at("word_dim").get<std::size_t>();
    cfg.hidden_dim = cj.at("hidden_dim").get<std::size_t>();
    cfg.embeddings.phoneme = detail::subword_config_from_json(cj.at("phoneme"), SubwordUnit::Phoneme);
    cfg.embeddings.syllable =
        detail::subword_config_from_json(cj.at("syllable"), SubwordUnit::Syllable);
    cfg.embeddings.chars = detail::subword_config_from_json(cj.at("char"), SubwordUnit::Chars);

    Vocabulary vocab;
    const auto& vj = header.at("vocabulary");
    vocab.words = vj.at("words").get<std::vector<std::string>>();
    vocab.syllables = vj.at("syllables").get<std::vector<std::string>>();
    vocab.chars = vj.at("chars").get<std::vector<std::string>>();
    vocab.phonemes = vj.at("phonemes").get<std::vector<std::string>>();
    vocab.rebuild_indices();

    if (cfg.embeddings.phoneme && lexicon &&
        vocab.phonemes.size() != lexicon->inventory().size())
      raise(ErrorCode::VocabularyMismatch,
            "checkpoint phoneme inventory (" + std::to_string(vocab.phonemes.size()) +
                ") differs from lexicon inventory (" +
                std::to_string(lexicon->inventory().size()) + ")");

    LoadedCheckpoint out;
    out.model = std::make_unique<SpanModel>(cfg, std::move(vocab), lexicon, patterns);
    out.extra = header.value("extra", nlohmann::json::object());

    const auto& pj = header.at("params");
    std::vector<Param*> params = out.model->parameters();
    if (pj.size() != params.size())
      raise(ErrorCode::MalformedInput, path + ": parameter block count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (pj[i].at("name").get<std::string>() != params[i]->name ||
          pj[i].at("rows").get<std::size_t>() != params[i]->rows ||
          pj[i].at("cols").get<std::size_t>() != params[i]->cols)
        raise(ErrorCode::MalformedInput,
              path + ": parameter block '" + params[i]->name + "' shape mismatch");
      detail::read_f64_le(in, params[i]->value);
    }
    if (!in) raise(ErrorCode::MalformedInput, path + ": truncated payload");
    return out;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedInput, path + ": bad header field: " + e.what());
  }
}

}  // namespace sqa

#endif  // SQA_CHECKPOINT_HPP
