// sqabench: spoken question answering benchmark pipeline.
// Subcommands: fixture, synthesize, filter, calibrate, train, evaluate,
// experiment, report. Errors print one machine-readable JSON record on
// stderr and exit nonzero.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sqa/channel.hpp"
#include "sqa/checkpoint.hpp"
#include "sqa/corpus.hpp"
#include "sqa/errors.hpp"
#include "sqa/experiment.hpp"
#include "sqa/fixture.hpp"
#include "sqa/metrics.hpp"
#include "sqa/model.hpp"
#include "sqa/spoken.hpp"
#include "sqa/subword.hpp"
#include "sqa/train.hpp"

namespace {

sqa::QADataset load_dataset_any(const std::string& path, const std::string& split) {
  nlohmann::json j = sqa::load_json_file(path);
  if (j.is_object() && j.contains("format") &&
      j.at("format").get<std::string>() == "sqa-dataset")
    return sqa::dataset_from_json(j);
  if (j.is_object() && j.contains("data")) {
    std::stringstream ss;
    ss << j.dump();
    return sqa::parse_squad(ss, split);
  }
  sqa::raise(sqa::ErrorCode::MalformedInput, path + ": neither a dataset nor a qa corpus");
}

sqa::PronunciationLexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) sqa::raise(sqa::ErrorCode::IoError, "cannot open lexicon: " + path);
  return sqa::PronunciationLexicon::parse(in);
}

sqa::SyllablePatterns load_patterns(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) sqa::raise(sqa::ErrorCode::IoError, "cannot open patterns: " + path);
  return sqa::SyllablePatterns::parse(in);
}

std::vector<std::vector<std::string>> spoken_view_docs(const sqa::QADataset& dataset) {
  std::vector<std::vector<std::string>> out;
  for (const sqa::Document& d : dataset.documents) {
    std::vector<std::string> texts;
    for (const sqa::Token& t : d.tokens)
      if (sqa::is_speakable(t.text)) texts.push_back(sqa::to_lower(t.text));
    out.push_back(std::move(texts));
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spoken question answering benchmark toolkit"};
  app.require_subcommand(1);

  // ---- fixture ----------------------------------------------------------
  auto* fix = app.add_subcommand("fixture", "generate a synthetic qa corpus");
  std::string fix_out;
  std::size_t fix_docs = 250, fix_sentences = 8;
  std::uint64_t fix_seed = 1;
  fix->add_option("--out", fix_out, "output json path")->required();
  fix->add_option("--docs", fix_docs, "number of documents");
  fix->add_option("--sentences", fix_sentences, "sentences per document");
  fix->add_option("--seed", fix_seed, "generator seed");

  // ---- synthesize -------------------------------------------------------
  auto* synth = app.add_subcommand("synthesize", "corrupt a corpus into a spoken-corpus artifact");
  std::string syn_dataset, syn_lexicon, syn_tier, syn_out;
  double syn_target = -1.0, syn_pps = sqa::kDefaultPhonesPerSecond;
  double syn_sub = -1.0, syn_del = -1.0, syn_ins = -1.0;
  std::uint64_t syn_seed = 0;
  std::size_t syn_pool = 5;
  synth->add_option("--dataset", syn_dataset, "qa corpus (source layout or canonical)")->required();
  synth->add_option("--lexicon", syn_lexicon, "pronouncing dictionary")->required();
  synth->add_option("--tier", syn_tier, "clean-ref | wer-<percent>");
  synth->add_option("--target-wer", syn_target, "target corpus WER as a fraction");
  synth->add_option("--sub-rate", syn_sub, "explicit substitution rate");
  synth->add_option("--del-rate", syn_del, "explicit deletion rate");
  synth->add_option("--ins-rate", syn_ins, "explicit insertion rate");
  synth->add_option("--seed", syn_seed, "channel seed");
  synth->add_option("--pool", syn_pool, "confusion pool size");
  synth->add_option("--pps", syn_pps, "phones per second for timestamps");
  synth->add_option("--out", syn_out, "output artifact path")->required();

  // ---- filter -----------------------------------------------------------
  auto* filt = app.add_subcommand("filter", "drop pairs whose answer is lost in the transcript");
  std::string filt_dataset, filt_corpus, filt_out;
  filt->add_option("--dataset", filt_dataset, "qa corpus")->required();
  filt->add_option("--corpus", filt_corpus, "spoken-corpus artifact")->required();
  filt->add_option("--out", filt_out, "output canonical dataset path")->required();

  // ---- calibrate --------------------------------------------------------
  auto* cal = app.add_subcommand("calibrate", "find channel rates for a target WER");
  std::string cal_dataset, cal_lexicon, cal_out;
  double cal_target = 0.0;
  std::uint64_t cal_seed = 0;
  std::size_t cal_pool = 5;
  cal->add_option("--dataset", cal_dataset, "qa corpus used for measurement")->required();
  cal->add_option("--lexicon", cal_lexicon, "pronouncing dictionary")->required();
  cal->add_option("--target-wer", cal_target, "target corpus WER as a fraction")->required();
  cal->add_option("--seed", cal_seed, "channel seed");
  cal->add_option("--pool", cal_pool, "confusion pool size");
  cal->add_option("--out", cal_out, "optional output config json");

  // ---- train ------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train the extractive span model");
  std::string tr_dataset, tr_lexicon, tr_patterns, tr_embeddings = "word", tr_side = "text";
  std::string tr_corpus, tr_out, tr_curve;
  std::uint64_t tr_seed = 0;
  std::size_t tr_epochs = 10, tr_batch = 16, tr_word_dim = 24, tr_hidden = 16;
  double tr_lr = 0.5, tr_dropout = 0.1;
  tr->add_option("--dataset", tr_dataset, "qa corpus")->required();
  tr->add_option("--lexicon", tr_lexicon, "pronouncing dictionary")->required();
  tr->add_option("--patterns", tr_patterns, "hyphenation patterns");
  tr->add_option("--embeddings", tr_embeddings, "comma list, e.g. word,phoneme");
  tr->add_option("--train-side", tr_side, "text | speech");
  tr->add_option("--corpus", tr_corpus, "spoken-corpus artifact (speech side)");
  tr->add_option("--seed", tr_seed, "training seed");
  tr->add_option("--epochs", tr_epochs, "epochs");
  tr->add_option("--batch", tr_batch, "batch size");
  tr->add_option("--lr", tr_lr, "learning rate");
  tr->add_option("--dropout", tr_dropout, "dropout rate on word representations");
  tr->add_option("--word-dim", tr_word_dim, "word embedding size");
  tr->add_option("--hidden", tr_hidden, "encoder hidden size");
  tr->add_option("--out", tr_out, "checkpoint path")->required();
  tr->add_option("--loss-curve", tr_curve, "optional loss curve json");

  // ---- evaluate ---------------------------------------------------------
  auto* ev = app.add_subcommand("evaluate", "score a checkpoint on a spoken corpus");
  std::string ev_model, ev_corpus, ev_dataset, ev_lexicon, ev_patterns, ev_out;
  ev->add_option("--model", ev_model, "checkpoint path")->required();
  ev->add_option("--corpus", ev_corpus, "spoken-corpus artifact")->required();
  ev->add_option("--dataset", ev_dataset, "qa corpus with the questions")->required();
  ev->add_option("--lexicon", ev_lexicon, "pronouncing dictionary")->required();
  ev->add_option("--patterns", ev_patterns, "hyphenation patterns");
  ev->add_option("--out", ev_out, "output directory")->required();

  // ---- experiment -------------------------------------------------------
  auto* ex = app.add_subcommand("experiment", "train/evaluate grid with a comparison table");
  std::string ex_train_dataset, ex_test_dataset, ex_lexicon, ex_patterns, ex_out;
  std::string ex_side = "text", ex_tiers = "clean-ref,wer-22.73", ex_seeds = "1,2,3";
  std::vector<std::string> ex_embeddings;
  double ex_dropout = 0.0, ex_lr = 0.5;
  std::size_t ex_epochs = 12, ex_batch = 16, ex_word_dim = 24, ex_hidden = 16, ex_pool = 5;
  ex->add_option("--dataset", ex_train_dataset, "training qa corpus")->required();
  ex->add_option("--test-dataset", ex_test_dataset, "testing qa corpus")->required();
  ex->add_option("--lexicon", ex_lexicon, "pronouncing dictionary")->required();
  ex->add_option("--patterns", ex_patterns, "hyphenation patterns");
  ex->add_option("--tier", ex_tiers, "comma list of tiers");
  ex->add_option("--embeddings", ex_embeddings, "embedding set (repeatable)")
      ->take_all();
  ex->add_option("--train-side", ex_side, "text | speech");
  ex->add_option("--seed", ex_seeds, "comma list of seeds");
  ex->add_option("--dropout", ex_dropout, "dropout rate");
  ex->add_option("--lr", ex_lr, "learning rate");
  ex->add_option("--epochs", ex_epochs, "epochs");
  ex->add_option("--batch", ex_batch, "batch size");
  ex->add_option("--word-dim", ex_word_dim, "word embedding size");
  ex->add_option("--hidden", ex_hidden, "encoder hidden size");
  ex->add_option("--pool", ex_pool, "confusion pool size");
  ex->add_option("--out", ex_out, "output directory")->required();

  // ---- report -----------------------------------------------------------
  auto* rep = app.add_subcommand("report", "re-render tables from an experiment report");
  std::string rep_in, rep_out;
  rep->add_option("--in", rep_in, "report.json or run_record.json")->required();
  rep->add_option("--out", rep_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fix) {
      sqa::FixtureConfig cfg;
      cfg.num_docs = fix_docs;
      cfg.sentences_per_doc = fix_sentences;
      cfg.seed = fix_seed;
      sqa::save_json_file(sqa::generate_fixture_squad_json(cfg), fix_out);
      std::cout << "wrote " << fix_out << " (" << fix_docs << " docs)\n";
    } else if (*synth) {
      sqa::QADataset dataset = load_dataset_any(syn_dataset, "test");
      sqa::PronunciationLexicon lexicon = load_lexicon(syn_lexicon);
      sqa::ConfusionModel confusions(lexicon, sqa::dataset_vocabulary(dataset), syn_pool);

      sqa::ChannelConfig cfg;
      cfg.seed = syn_seed;
      cfg.confusion_pool_size = syn_pool;
      if (syn_sub >= 0.0 || syn_del >= 0.0 || syn_ins >= 0.0) {
        cfg.sub_rate = std::max(0.0, syn_sub);
        cfg.del_rate = std::max(0.0, syn_del);
        cfg.ins_rate = std::max(0.0, syn_ins);
        cfg.validate();
      } else {
        double target = syn_target;
        if (!syn_tier.empty()) target = sqa::parse_tier(syn_tier).target_wer;
        if (target < 0.0)
          sqa::raise(sqa::ErrorCode::InvalidConfig,
                     "need --tier, --target-wer, or explicit rates");
        if (target > 0.0)
          cfg = sqa::calibrate(target, spoken_view_docs(dataset), cfg, confusions);
        else
          cfg.target_wer = 0.0;
      }
      sqa::SpokenCorpus corpus =
          sqa::build_spoken_corpus(dataset, cfg, confusions, lexicon, syn_pps);
      sqa::save_json_file(sqa::spoken_corpus_to_json(corpus), syn_out);
      std::cout << "wrote " << syn_out << " corpus_wer=" << corpus.corpus_wer << "\n";
    } else if (*filt) {
      sqa::QADataset dataset = load_dataset_any(filt_dataset, "train");
      sqa::SpokenCorpus corpus = sqa::spoken_corpus_from_json(sqa::load_json_file(filt_corpus));
      sqa::FilterResult result = sqa::filter_answerable(dataset, corpus.by_id());
      sqa::save_json_file(sqa::dataset_to_json(result.dataset), filt_out);
      std::cout << "retained " << result.dataset.pairs.size() << " removed " << result.removed
                << "\n";
    } else if (*cal) {
      sqa::QADataset dataset = load_dataset_any(cal_dataset, "train");
      sqa::PronunciationLexicon lexicon = load_lexicon(cal_lexicon);
      sqa::ConfusionModel confusions(lexicon, sqa::dataset_vocabulary(dataset), cal_pool);
      sqa::ChannelConfig tmpl;
      tmpl.seed = cal_seed;
      tmpl.confusion_pool_size = cal_pool;
      sqa::ChannelConfig cfg =
          sqa::calibrate(cal_target, spoken_view_docs(dataset), tmpl, confusions);
      double measured = sqa::measure_corpus_wer(spoken_view_docs(dataset), cfg, confusions);
      nlohmann::json out = sqa::detail::channel_to_json(cfg);
      out["measured_wer"] = measured;
      if (!cal_out.empty()) sqa::save_json_file(out, cal_out);
      std::cout << out.dump(1) << "\n";
    } else if (*tr) {
      sqa::QADataset dataset = load_dataset_any(tr_dataset, "train");
      sqa::PronunciationLexicon lexicon = load_lexicon(tr_lexicon);
      sqa::SyllablePatterns patterns = load_patterns(tr_patterns);

      std::vector<sqa::TrainingExample> examples;
      if (tr_side == "speech") {
        if (tr_corpus.empty())
          sqa::raise(sqa::ErrorCode::InvalidConfig, "--train-side speech needs --corpus");
        sqa::SpokenCorpus corpus = sqa::spoken_corpus_from_json(sqa::load_json_file(tr_corpus));
        examples = sqa::training_examples_from_speech(dataset, corpus);
      } else if (tr_side == "text") {
        examples = sqa::training_examples_from_text(dataset);
      } else {
        sqa::raise(sqa::ErrorCode::InvalidConfig, "train side must be text or speech");
      }

      sqa::ModelConfig mc;
      mc.embeddings = sqa::EmbeddingConfig::parse(tr_embeddings, tr_word_dim);
      mc.hidden_dim = tr_hidden;
      sqa::Vocabulary vocab =
          sqa::build_vocabulary(sqa::token_sequences(examples), lexicon, patterns);
      sqa::SpanModel model(mc, std::move(vocab), &lexicon, &patterns);

      sqa::TrainConfig tc;
      tc.learning_rate = tr_lr;
      tc.epochs = tr_epochs;
      tc.batch_size = tr_batch;
      tc.dropout = tr_dropout;
      tc.seed = tr_seed;
      sqa::TrainResult result = sqa::train(model, examples, tc);

      nlohmann::json extra{{"train_side", tr_side},
                           {"embeddings", tr_embeddings},
                           {"seed", tr_seed},
                           {"epochs", tr_epochs},
                           {"batch_size", tr_batch},
                           {"learning_rate", tr_lr},
                           {"dropout", tr_dropout},
                           {"examples", examples.size()},
                           {"final_loss", result.epoch_losses.back()}};
      sqa::save_checkpoint(model, tr_out, extra);
      if (!tr_curve.empty())
        sqa::save_json_file(nlohmann::json{{"epoch_losses", result.epoch_losses}}, tr_curve);
      std::cout << "trained on " << examples.size() << " examples, final loss "
                << result.epoch_losses.back() << ", wrote " << tr_out << "\n";
    } else if (*ev) {
      sqa::PronunciationLexicon lexicon = load_lexicon(ev_lexicon);
      sqa::SyllablePatterns patterns = load_patterns(ev_patterns);
      sqa::LoadedCheckpoint loaded = sqa::load_checkpoint(ev_model, &lexicon, &patterns);
      sqa::SpokenCorpus corpus = sqa::spoken_corpus_from_json(sqa::load_json_file(ev_corpus));
      sqa::QADataset dataset = load_dataset_any(ev_dataset, "test");

      sqa::EvalOutput eval = sqa::evaluate_model(*loaded.model, corpus, dataset);
      std::filesystem::create_directories(ev_out);
      sqa::save_json_file(sqa::metric_report_to_json(eval.report),
                          (std::filesystem::path(ev_out) / "metrics.json").string());
      std::ofstream csv(std::filesystem::path(ev_out) / "metrics.csv", std::ios::binary);
      csv << sqa::metric_report_to_csv(eval.report);
      nlohmann::json preds = nlohmann::json::array();
      for (const sqa::Prediction& p : eval.predictions) {
        preds.push_back({{"id", p.id},
                         {"question", p.question},
                         {"gold", p.gold},
                         {"predicted", p.predicted_text},
                         {"span", {p.span_start, p.span_end}},
                         {"em", p.em},
                         {"f1", p.f1},
                         {"aos", p.aos}});
      }
      sqa::save_json_file(nlohmann::json{{"predictions", std::move(preds)}},
                          (std::filesystem::path(ev_out) / "predictions.json").string());
      std::cout << "EM " << sqa::detail::fmt("%.2f", eval.report.mean_em_pct) << " F1 "
                << sqa::detail::fmt("%.2f", eval.report.mean_f1_pct) << " AOS "
                << sqa::detail::fmt("%.4f", eval.report.mean_aos) << " (evaluated "
                << eval.report.records.size() << ", skipped " << eval.skipped << ")\n";
    } else if (*ex) {
      sqa::QADataset train_set = load_dataset_any(ex_train_dataset, "train");
      sqa::QADataset test_set = load_dataset_any(ex_test_dataset, "test");
      sqa::PronunciationLexicon lexicon = load_lexicon(ex_lexicon);
      sqa::SyllablePatterns patterns = load_patterns(ex_patterns);

      sqa::ExperimentSpec spec;
      spec.train_side = ex_side;
      std::stringstream tiers_ss(ex_tiers);
      std::string tier_name;
      while (std::getline(tiers_ss, tier_name, ','))
        if (!tier_name.empty()) spec.tiers.push_back(sqa::parse_tier(tier_name));
      spec.embedding_sets = ex_embeddings.empty() ? std::vector<std::string>{"word"} : ex_embeddings;
      spec.dropout = ex_dropout;
      spec.seeds = parse_seed_list(ex_seeds);
      spec.word_dim = ex_word_dim;
      spec.hidden_dim = ex_hidden;
      spec.learning_rate = ex_lr;
      spec.epochs = ex_epochs;
      spec.batch_size = ex_batch;
      spec.confusion_pool_size = ex_pool;

      sqa::RunRecord record = sqa::run_experiment(spec, train_set, test_set, lexicon, patterns);
      sqa::write_experiment_outputs(record, ex_out);
      std::cout << sqa::render_table(record);
      std::cout << "wrote " << ex_out << "\n";
    } else if (*rep) {
      nlohmann::json j = sqa::load_json_file(rep_in);
      sqa::RunRecord record;
      const auto& spec_j = j.at("spec");
      record.spec.train_side = spec_j.at("train_side").get<std::string>();
      for (const auto& tj : spec_j.at("tiers"))
        record.spec.tiers.push_back(
            sqa::Tier{tj.at("name").get<std::string>(), tj.at("target_wer").get<double>()});
      record.spec.embedding_sets = spec_j.at("embedding_sets").get<std::vector<std::string>>();
      record.spec.dropout = spec_j.at("dropout").get<double>();
      record.spec.seeds = spec_j.at("seeds").get<std::vector<std::uint64_t>>();
      for (const auto& cj : j.at("cells")) {
        sqa::CellAggregate c;
        c.embeddings = cj.at("embeddings").get<std::string>();
        c.tier = cj.at("tier").get<std::string>();
        c.em = cj.at("mean").at("em_pct").get<double>();
        c.f1 = cj.at("mean").at("f1_pct").get<double>();
        c.aos = cj.at("mean").at("aos").get<double>();
        for (const auto& s : cj.at("per_seed")) c.per_seed.push_back(s);
        record.cells.push_back(std::move(c));
      }
      record.qualitative = j.value("qualitative", nlohmann::json());
      record.config_hash = j.value("config_hash", "");
      std::filesystem::create_directories(rep_out);
      std::ofstream table(std::filesystem::path(rep_out) / "table.txt", std::ios::binary);
      table << sqa::render_table(record);
      std::ofstream qual(std::filesystem::path(rep_out) / "qualitative.txt", std::ios::binary);
      qual << sqa::render_qualitative(record.qualitative);
      std::string csv = "embeddings,tier,em_pct,f1_pct,aos\n";
      for (const sqa::CellAggregate& c : record.cells)
        csv += c.embeddings + "," + c.tier + "," + sqa::detail::fmt("%.4f", c.em) + "," +
               sqa::detail::fmt("%.4f", c.f1) + "," + sqa::detail::fmt("%.6f", c.aos) + "\n";
      std::ofstream csv_out(std::filesystem::path(rep_out) / "report.csv", std::ios::binary);
      csv_out << csv;
      std::cout << sqa::render_table(record);
    }
  } catch (const sqa::Error& e) {
    nlohmann::json err{{"error", e.code_name()}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", "Internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
