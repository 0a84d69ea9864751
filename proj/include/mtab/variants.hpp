#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mtab/adapt.hpp"
#include "mtab/corpus_ops.hpp"
#include "mtab/metrics.hpp"
#include "mtab/records.hpp"
#include "mtab/tokenizer.hpp"
#include "mtab/train.hpp"

namespace mtab {

enum class ModelKind { Baseline, MtabNoTl, Mtab };

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "baseline") return ModelKind::Baseline;
  if (s == "mtab_no_tl") return ModelKind::MtabNoTl;
  if (s == "mtab") return ModelKind::Mtab;
  throw ConfigError("unknown model kind '" + s + "'");
}

inline std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::Baseline: return "baseline";
    case ModelKind::MtabNoTl: return "mtab_no_tl";
    default: return "mtab";
  }
}

struct VariantSpec {
  ModelKind model = ModelKind::Baseline;
  bool adversarial = false;
  std::vector<LanguageTag> target_langs;

  std::string id() const {
    return to_string(model) + (adversarial ? "_adv" : "");
  }

  void validate() const {
    if (target_langs.empty())
      throw ConfigError("variant needs at least one target language");
    for (const auto& lang : target_langs)
      if (!LanguageTag::valid(lang.str()))
        throw ConfigError("invalid target language tag");
  }
};

// The canonical six rows of the experiment matrix.
inline std::vector<VariantSpec> all_variant_specs(
    const std::vector<LanguageTag>& target_langs) {
  std::vector<VariantSpec> specs;
  for (ModelKind m :
       {ModelKind::Baseline, ModelKind::MtabNoTl, ModelKind::Mtab})
    for (bool adv : {false, true})
      specs.push_back({m, adv, target_langs});
  return specs;
}

struct PipelineConfig {
  EncoderConfig encoder;  // vocab_size is filled from the built tokenizer
  TrainConfig train;
  AdaptationConfig adapt;
  int vocab_min_freq = 1;
  double dev_fraction = 0.15;
  double init_std = 0.02;
  std::uint64_t seed = 7;
};

struct VariantResult {
  VariantSpec spec;
  Tokenizer tokenizer;
  EncoderParams encoder;        // step-1 encoder (post-adaptation for baseline_adv)
  ClassifierParams classifier;  // likewise
  std::map<std::string, EncoderParams> adapted;  // per-language target encoders
  std::map<std::string, AdaptationState> adaptation_logs;
  TrainLog train_log;
  std::map<std::string, MetricsReport> reports;
  double average_macro_f1 = 0.0;
};

namespace detail {

// Step-1 output; shareable between variants that train on the same corpus
// (joint vs split bookkeeping does not change the update math).
struct Step1Model {
  Tokenizer tokenizer;
  EncoderParams encoder;
  ClassifierParams classifier;
  TrainLog log;
  Dataset source_pool;  // untranslated originals, used as the adversarial source side
};

inline Dataset original_subset(const Dataset& d) {
  std::vector<TweetRecord> records;
  for (const auto& r : d.records())
    if (r.origin != Origin::Translated) records.push_back(r);
  if (records.empty())
    throw EmptyCorpusError("no untranslated records in training data");
  return Dataset(d.name() + "-originals", std::move(records), d.provenance());
}

inline Step1Model train_step1(
    ModelKind model, const Dataset& train_data,
    const std::map<std::string, Dataset>& unlabeled_targets,
    const PipelineConfig& cfg) {
  Dataset originals = original_subset(train_data);
  if (originals.languages().size() > 1)
    throw PreconditionError("untranslated training records span languages");
  Dataset corpus = model == ModelKind::Mtab ? train_data : originals;
  if (model == ModelKind::Mtab && corpus.size() == originals.size())
    throw PreconditionError(
        "mtab variant requires translation-augmented training data");

  std::vector<const Dataset*> vocab_sources = {&corpus};
  for (const auto& [lang, pool] : unlabeled_targets)
    vocab_sources.push_back(&pool);
  Tokenizer tok =
      build_vocab(vocab_sources, cfg.vocab_min_freq, cfg.encoder.max_len);

  Rng master(cfg.seed);
  const std::uint64_t split_seed = master.fork(1);
  const std::uint64_t enc_seed = master.fork(2);
  const std::uint64_t cls_seed = master.fork(3);
  const std::uint64_t train_seed = master.fork(4);

  Split sp = split(corpus, cfg.dev_fraction, split_seed);

  EncoderConfig ecfg = cfg.encoder;
  ecfg.vocab_size = tok.vocab_size();

  Step1Model m{std::move(tok),
               EncoderParams::init(ecfg, enc_seed, cfg.init_std),
               ClassifierParams::init(ecfg.d_model, cls_seed, cfg.init_std),
               {},
               std::move(originals)};
  TrainConfig tcfg = cfg.train;
  tcfg.seed = train_seed;
  m.log = train_supervised(
      m.encoder, m.classifier, m.tokenizer, sp.train, &sp.dev, tcfg,
      model == ModelKind::Baseline ? TrainMode::Joint : TrainMode::Split);
  return m;
}

}  // namespace detail

// Runs Step 2 (if adversarial) and Step 3 for a variant, starting from a
// trained Step-1 model. `jobs` bounds per-language adaptation threads; the
// result is identical for any jobs >= 1.
inline VariantResult finish_variant(
    const VariantSpec& spec, detail::Step1Model step1,
    const std::map<std::string, Dataset>& unlabeled_targets,
    const std::map<std::string, Dataset>& tests, const PipelineConfig& cfg,
    int jobs = 1) {
  spec.validate();
  for (const auto& lang : spec.target_langs) {
    if (tests.find(lang.str()) == tests.end())
      throw MissingArtifactError("no test set for language " + lang.str());
    if (spec.adversarial &&
        unlabeled_targets.find(lang.str()) == unlabeled_targets.end())
      throw MissingArtifactError("no unlabeled pool for language " +
                                 lang.str());
  }

  VariantResult res;
  res.spec = spec;
  res.tokenizer = std::move(step1.tokenizer);
  res.encoder = std::move(step1.encoder);
  res.classifier = std::move(step1.classifier);
  res.train_log = std::move(step1.log);

  Rng master(cfg.seed);
  if (spec.adversarial) {
    if (spec.model == ModelKind::Baseline) {
      // Single shared model: adapt encoder+classifier per language in turn.
      AdaptationConfig acfg = cfg.adapt;
      acfg.update_scope = UpdateScope::EncoderAndClassifier;
      for (const auto& lang : spec.target_langs) {
        acfg.seed = master.fork(fnv1a64(lang.str()));
        auto out = adapt_target_encoder(res.encoder, res.classifier,
                                        res.tokenizer,
                                        unlabeled_targets.at(lang.str()),
                                        step1.source_pool, acfg);
        res.encoder = std::move(out.tgt_enc);
        res.adaptation_logs[lang.str()] = std::move(out.state);
      }
    } else {
      // One adapted target encoder per language; classifier frozen.
      AdaptationConfig acfg = cfg.adapt;
      acfg.update_scope = UpdateScope::TargetEncoderOnly;
      std::vector<std::string> langs;
      for (const auto& lang : spec.target_langs) langs.push_back(lang.str());
      std::vector<std::uint64_t> seeds;
      for (const auto& lang : langs) seeds.push_back(master.fork(fnv1a64(lang)));

      std::vector<AdaptationResult> outs(langs.size());
      std::exception_ptr failure;
      std::mutex failure_mu;
      auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < langs.size(); i += step) {
          try {
            AdaptationConfig local = acfg;
            local.seed = seeds[i];
            outs[i] = adapt_target_encoder(
                res.encoder, res.classifier, res.tokenizer,
                unlabeled_targets.at(langs[i]), step1.source_pool, local);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      };
      const int threads =
          std::max(1, std::min<int>(jobs, static_cast<int>(langs.size())));
      if (threads == 1) {
        work(0, 1);
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
          pool.emplace_back(work, static_cast<std::size_t>(t),
                            static_cast<std::size_t>(threads));
        for (auto& th : pool) th.join();
      }
      if (failure) std::rethrow_exception(failure);
      for (std::size_t i = 0; i < langs.size(); ++i) {
        res.adapted.emplace(langs[i], std::move(outs[i].tgt_enc));
        res.adaptation_logs[langs[i]] = std::move(outs[i].state);
      }
    }
  }

  double sum = 0.0;
  for (const auto& lang : spec.target_langs) {
    const Dataset& test = tests.at(lang.str());
    const EncoderParams* enc = &res.encoder;
    auto it = res.adapted.find(lang.str());
    if (it != res.adapted.end()) enc = &it->second;
    std::vector<StanceLabel> gold, pred;
    for (const auto& r : test.records()) {
      if (!r.label)
        throw PreconditionError("test record '" + r.id + "' is unlabeled");
      gold.push_back(*r.label);
    }
    for (const auto& p :
         predict(*enc, res.classifier, res.tokenizer, test.records()))
      pred.push_back(p.label);
    MetricsReport rep =
        MetricsReport::from_pairs(gold, pred, spec.id(), lang.str());
    sum += rep.macro;
    res.reports.emplace(lang.str(), std::move(rep));
  }
  res.average_macro_f1 = sum / static_cast<double>(spec.target_langs.size());
  return res;
}

inline VariantResult run_variant(
    const VariantSpec& spec, const Dataset& train_data,
    const std::map<std::string, Dataset>& unlabeled_targets,
    const std::map<std::string, Dataset>& tests, const PipelineConfig& cfg,
    int jobs = 1) {
  spec.validate();
  return finish_variant(
      spec, detail::train_step1(spec.model, train_data, unlabeled_targets, cfg),
      unlabeled_targets, tests, cfg, jobs);
}

struct MatrixResult {
  std::vector<VariantResult> variants;  // canonical spec order
};

// All six variants. Step-1 models are trained once per corpus flavour
// (original-only vs augmented) and copied into each variant, which yields
// bit-identical results to running each variant standalone.
inline MatrixResult run_matrix(
    const Dataset& train_data,
    const std::map<std::string, Dataset>& unlabeled_targets,
    const std::map<std::string, Dataset>& tests,
    const std::vector<LanguageTag>& target_langs, const PipelineConfig& cfg,
    int jobs = 1) {
  MatrixResult out;
  std::map<bool, detail::Step1Model> cache;  // key: uses augmented corpus
  for (const auto& spec : all_variant_specs(target_langs)) {
    const bool augmented = spec.model == ModelKind::Mtab;
    auto it = cache.find(augmented);
    if (it == cache.end())
      it = cache
               .emplace(augmented, detail::train_step1(
                                       spec.model, train_data,
                                       unlabeled_targets, cfg))
               .first;
    out.variants.push_back(finish_variant(spec, it->second, unlabeled_targets,
                                          tests, cfg, jobs));
  }
  return out;
}

}  // namespace mtab
