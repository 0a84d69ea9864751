// mtab command-line front end: corpus preparation, translation augmentation,
// supervised training, adversarial language adaptation, evaluation, report
// rendering, synthetic benchmark generation, and the full variant matrix.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mtab/mtab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// configuration layering: file < environment < flags

std::optional<std::string> env_string(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

long long parse_integer(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw mtab::ConfigError(what + " is not an integer: '" + s + "'");
  }
}

// Typed config-file field access; type mismatches become input errors rather
// than uncaught json exceptions.
template <typename T>
T get_field(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw mtab::ConfigError(std::string("config field '") + key +
                            "': " + e.what());
  }
}

struct CommonFlags {
  std::string config;
  std::string out;
  long long seed = 0;
  int jobs = 0;
  CLI::App* cmd = nullptr;

  void attach(CLI::App* c) {
    cmd = c;
    c->add_option("--config", config, "JSON config file");
    c->add_option("--seed", seed, "master RNG seed");
    c->add_option("--out", out, "output directory");
    c->add_option("--jobs", jobs, "parallel adaptation thread limit");
  }
  bool has(const std::string& flag) const { return cmd->count(flag) > 0; }
};

struct Resolved {
  json file = json::object();  // config file content, {} when absent
  fs::path config_path;
  std::uint64_t seed = 7;
  fs::path out;
  int jobs = 1;
};

Resolved resolve_common(const CommonFlags& f) {
  Resolved r;
  if (!f.config.empty()) {
    r.config_path = f.config;
    const std::string text = mtab::read_text_file(r.config_path);
    r.file = json::parse(text, nullptr, false);
    if (r.file.is_discarded() || !r.file.is_object())
      throw mtab::ParseError("config file " + f.config +
                             " is not a JSON object");
  }
  r.seed = get_field<std::uint64_t>(r.file, "seed", r.seed);
  if (auto e = env_string("MTAB_SEED"))
    r.seed = static_cast<std::uint64_t>(parse_integer(*e, "MTAB_SEED"));
  if (f.has("--seed")) r.seed = static_cast<std::uint64_t>(f.seed);

  r.out = get_field<std::string>(r.file, "out", {});
  if (auto e = env_string("MTAB_OUT")) r.out = *e;
  if (f.has("--out")) r.out = f.out;

  r.jobs = get_field<int>(r.file, "jobs", r.jobs);
  if (auto e = env_string("MTAB_JOBS"))
    r.jobs = static_cast<int>(parse_integer(*e, "MTAB_JOBS"));
  if (f.has("--jobs")) r.jobs = f.jobs;

  if (r.jobs < 1) throw mtab::ConfigError("jobs must be >= 1");
  if (r.out.empty())
    throw mtab::ConfigError(
        "no output directory (use --out, MTAB_OUT, or the config file)");
  return r;
}

// ---------------------------------------------------------------------------
// config sections

mtab::TrainConfig train_config_from(const json& file, std::uint64_t seed) {
  mtab::TrainConfig t;
  const json j = file.is_object() ? file.value("train", json::object())
                                  : json::object();
  t.epochs = get_field(j, "epochs", t.epochs);
  t.batch_size = get_field(j, "batch_size", t.batch_size);
  t.learning_rate = get_field(j, "learning_rate", t.learning_rate);
  t.weight_decay = get_field(j, "weight_decay", t.weight_decay);
  t.optimizer = mtab::optimizer_from_string(
      get_field<std::string>(j, "optimizer", mtab::to_string(t.optimizer)));
  t.seed = seed;
  return t;
}

json train_config_json(const mtab::TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"optimizer", mtab::to_string(t.optimizer)},
          {"weight_decay", t.weight_decay}};
}

mtab::AdaptationConfig adapt_config_from(const json& file,
                                         std::uint64_t seed) {
  mtab::AdaptationConfig a;
  const json j = file.is_object() ? file.value("adapt", json::object())
                                  : json::object();
  a.epochs = get_field(j, "epochs", a.epochs);
  a.lr_discriminator = get_field(j, "lr_discriminator", a.lr_discriminator);
  a.lr_generator = get_field(j, "lr_generator", a.lr_generator);
  a.batch_size = get_field(j, "batch_size", a.batch_size);
  a.distill_weight = get_field(j, "distill_weight", a.distill_weight);
  a.distill_temperature =
      get_field(j, "distill_temperature", a.distill_temperature);
  a.d_steps_per_batch = get_field(j, "d_steps_per_batch", a.d_steps_per_batch);
  a.g_steps_per_batch = get_field(j, "g_steps_per_batch", a.g_steps_per_batch);
  a.update_scope = mtab::update_scope_from_string(
      get_field<std::string>(j, "update_scope", mtab::to_string(a.update_scope)));
  a.probe_size = get_field(j, "probe_size", a.probe_size);
  a.seed = seed;
  return a;
}

json adapt_config_json(const mtab::AdaptationConfig& a) {
  return {{"epochs", a.epochs},
          {"lr_discriminator", a.lr_discriminator},
          {"lr_generator", a.lr_generator},
          {"batch_size", a.batch_size},
          {"distill_weight", a.distill_weight},
          {"distill_temperature", a.distill_temperature},
          {"d_steps_per_batch", a.d_steps_per_batch},
          {"g_steps_per_batch", a.g_steps_per_batch},
          {"update_scope", mtab::to_string(a.update_scope)},
          {"probe_size", a.probe_size}};
}

mtab::EncoderConfig encoder_config_from(const json& file) {
  mtab::EncoderConfig c;  // vocab_size stays 0; it is filled from data
  const json j = file.is_object() ? file.value("encoder", json::object())
                                  : json::object();
  c.d_model = get_field(j, "d_model", c.d_model);
  c.n_layers = get_field(j, "n_layers", c.n_layers);
  c.n_heads = get_field(j, "n_heads", c.n_heads);
  c.d_ff = get_field(j, "d_ff", c.d_ff);
  c.dropout = get_field(j, "dropout", c.dropout);
  c.max_len = get_field(j, "max_len", c.max_len);
  return c;
}

json encoder_section_json(const mtab::EncoderConfig& c) {
  // vocab_size is derived from the corpus, not configuration
  return {{"d_model", c.d_model}, {"n_layers", c.n_layers},
          {"n_heads", c.n_heads}, {"d_ff", c.d_ff},
          {"dropout", c.dropout}, {"max_len", c.max_len}};
}

mtab::PipelineConfig pipeline_config_from(const json& file,
                                          std::uint64_t seed) {
  mtab::PipelineConfig p;
  p.encoder = encoder_config_from(file);
  p.train = train_config_from(file, seed);
  p.adapt = adapt_config_from(file, seed);
  const json j = file.is_object() ? file.value("pipeline", json::object())
                                  : json::object();
  p.vocab_min_freq = get_field(j, "vocab_min_freq", p.vocab_min_freq);
  p.dev_fraction = get_field(j, "dev_fraction", p.dev_fraction);
  p.init_std = get_field(j, "init_std", p.init_std);
  p.seed = seed;
  return p;
}

json pipeline_config_json(const mtab::PipelineConfig& p) {
  return {{"encoder", encoder_section_json(p.encoder)},
          {"train", train_config_json(p.train)},
          {"adapt", adapt_config_json(p.adapt)},
          {"pipeline",
           {{"vocab_min_freq", p.vocab_min_freq},
            {"dev_fraction", p.dev_fraction},
            {"init_std", p.init_std}}}};
}

mtab::SynthConfig synth_config_from(const json& file, std::uint64_t seed) {
  mtab::SynthConfig s;
  const json j = file.is_object() ? file.value("synth", json::object())
                                  : json::object();
  s.filler_vocab = get_field(j, "filler_vocab", s.filler_vocab);
  s.cues_per_class = get_field(j, "cues_per_class", s.cues_per_class);
  s.min_len = get_field(j, "min_len", s.min_len);
  s.max_len = get_field(j, "max_len", s.max_len);
  s.train_size = get_field(j, "train_size", s.train_size);
  s.unlabeled_size = get_field(j, "unlabeled_size", s.unlabeled_size);
  s.test_size = get_field(j, "test_size", s.test_size);
  s.balance = mtab::synth_balance_from_string(
      get_field<std::string>(j, "balance", mtab::to_string(s.balance)));
  if (j.is_object() && j.contains("targets")) {
    s.targets.clear();
    try {
      for (const auto& t : j.at("targets")) {
        const std::string lang = t.at("lang").get<std::string>();
        s.targets.emplace_back(lang, mtab::order_rule_from_json(t));
      }
    } catch (const json::exception& e) {
      throw mtab::ConfigError(std::string("config field 'synth.targets': ") +
                              e.what());
    }
  }
  s.seed = seed;
  return s;
}

json synth_config_json(const mtab::SynthConfig& s) {
  json targets = json::array();
  for (const auto& [lang, rule] : s.targets) {
    json t = mtab::order_rule_to_json(rule);
    t["lang"] = lang;
    targets.push_back(t);
  }
  return {{"filler_vocab", s.filler_vocab},
          {"cues_per_class", s.cues_per_class},
          {"min_len", s.min_len},
          {"max_len", s.max_len},
          {"train_size", s.train_size},
          {"unlabeled_size", s.unlabeled_size},
          {"test_size", s.test_size},
          {"balance", mtab::to_string(s.balance)},
          {"targets", targets}};
}

// ---------------------------------------------------------------------------
// output tracking: files written by a failed run are removed again

class OutputGuard {
 public:
  void track_file(const fs::path& p) { files_.push_back(p); }
  void track_dir(const fs::path& p) { dirs_.push_back(p); }
  void commit() { armed_ = false; }

  ~OutputGuard() {
    if (!armed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it)
      if (fs::exists(*it, ec) && fs::is_empty(*it, ec)) fs::remove(*it, ec);
  }

 private:
  bool armed_ = true;
  std::vector<fs::path> files_;
  std::vector<fs::path> dirs_;
};

// Per-command workspace: creates the output directory, tracks written files
// for cleanup on failure, and accumulates the manifest's input/output lists.
struct Workspace {
  Resolved r;
  OutputGuard guard;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;

  explicit Workspace(Resolved resolved) : r(std::move(resolved)) {
    std::vector<fs::path> missing;
    for (fs::path p = r.out; !p.empty() && !fs::exists(p);
         p = p.parent_path()) {
      missing.push_back(p);
      if (p.parent_path() == p) break;
    }
    for (auto it = missing.rbegin(); it != missing.rend(); ++it) {
      fs::create_directory(*it);
      guard.track_dir(*it);
    }
  }

  const fs::path& out() const { return r.out; }
  void input(const fs::path& p) { inputs.push_back(p); }

  void write_text(const fs::path& p, const std::string& text) {
    guard.track_file(p);
    mtab::write_text_file(p, text);
    outputs.push_back(p);
  }
  void write_corpus(const fs::path& p, const mtab::Dataset& d) {
    guard.track_file(p);
    mtab::save_corpus(d, p);
    outputs.push_back(p);
  }
  void write_checkpoint(const fs::path& p, const mtab::EncoderParams& enc,
                        const mtab::ClassifierParams& cls) {
    guard.track_file(p);
    mtab::save_checkpoint(p, enc, cls);
    outputs.push_back(p);
  }
  void write_tokenizer(const fs::path& p, const mtab::Tokenizer& tok) {
    guard.track_file(p);
    tok.save(p);
    outputs.push_back(p);
  }

  // The manifest itself is written last and is not part of the output list.
  void finish(const std::string& command, json resolved_config) {
    resolved_config["seed"] = r.seed;
    resolved_config["out"] = r.out.generic_string();
    resolved_config["jobs"] = r.jobs;
    const json manifest =
        mtab::build_manifest(command, resolved_config, r.seed, inputs, outputs);
    const fs::path mp = out() / "manifest.json";
    guard.track_file(mp);
    mtab::write_manifest(mp, manifest);
    guard.commit();
  }
};

// ---------------------------------------------------------------------------
// shared helpers

mtab::Dataset load_corpus_checked(const fs::path& p) {
  if (!fs::exists(p))
    throw mtab::MissingArtifactError("corpus file not found: " + p.string());
  return mtab::load_corpus(p);
}

json parse_json_file(const fs::path& p, const char* what) {
  const std::string text = mtab::read_text_file(p);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw mtab::ParseError(std::string("malformed ") + what + ": " +
                           p.string());
  return j;
}

std::vector<mtab::LanguageTag> parse_target_list(const std::string& csv) {
  std::vector<mtab::LanguageTag> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.emplace_back(item);
  if (out.empty()) throw mtab::ConfigError("no target languages given");
  return out;
}

std::map<std::string, mtab::PseudoLanguageSpec> load_pseudo_specs(
    const fs::path& p) {
  const json j = parse_json_file(p, "pseudo-language spec file");
  if (!j.is_object() || !j.contains("languages"))
    throw mtab::ParseError("spec file " + p.string() +
                           " has no 'languages' object");
  std::map<std::string, mtab::PseudoLanguageSpec> specs;
  try {
    for (const auto& [lang, spec] : j.at("languages").items())
      specs.emplace(lang, mtab::pseudo_spec_from_json(spec));
  } catch (const json::exception& e) {
    throw mtab::ParseError("spec file " + p.string() + ": " + e.what());
  }
  return specs;
}

void print_stats(const mtab::StatsTable& t) {
  auto row = [](const mtab::StatsTable::Row& r) {
    std::printf("%-8s %9zu %9zu %9zu %10zu %8zu\n", r.lang.c_str(),
                r.by_label[0], r.by_label[1], r.by_label[2], r.unlabeled,
                r.total);
  };
  std::printf("%-8s %9s %9s %9s %10s %8s\n", "lang", "positive", "negative",
              "neutral", "unlabeled", "total");
  for (const auto& r : t.rows) row(r);
  row(t.totals);
}

json report_bundle_json(const std::vector<mtab::MetricsReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(mtab::metrics_to_json(r));
  return {{"schema", "mtab.report.v1"}, {"reports", arr}};
}

// Writes the standard report artifact set (metrics.json, results.csv, charts)
// through the workspace so every file is tracked.
void write_report_files(Workspace& ws,
                        const std::vector<mtab::MetricsReport>& reports) {
  ws.write_text(ws.out() / "metrics.json",
                report_bundle_json(reports).dump(2) + "\n");
  ws.write_text(ws.out() / "results.csv", mtab::results_csv(reports));
  for (const auto& r : reports) {
    ws.write_text(ws.out() / ("f1_" + r.variant_id + "_" + r.lang + ".svg"),
                  mtab::f1_bar_chart_svg(r));
    ws.write_text(
        ws.out() / ("errors_" + r.variant_id + "_" + r.lang + ".svg"),
        mtab::incorrect_heatmap_svg(r));
  }
}

std::vector<mtab::StanceLabel> gold_labels(const mtab::Dataset& d) {
  std::vector<mtab::StanceLabel> gold;
  gold.reserve(d.size());
  for (const auto& rec : d.records()) {
    if (!rec.label)
      throw mtab::PreconditionError("evaluation requires labeled records; '" +
                                    rec.id + "' is unlabeled");
    gold.push_back(*rec.label);
  }
  return gold;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mtab: zero-shot cross-lingual stance detection pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mtab::kVersion));

  // ---- prep ----
  auto* prep = app.add_subcommand("prep", "clean and harmonize a raw corpus");
  std::string prep_in, prep_labels;
  CommonFlags prep_common;
  prep->add_option("input", prep_in, "raw corpus (JSONL)")->required();
  prep->add_option("--labels", prep_labels,
                   "label harmonization map (JSON: {\"mapping\": {raw: "
                   "class}, \"unmapped\": \"drop\"|\"error\"})");
  prep_common.attach(prep);

  // ---- augment ----
  auto* augment =
      app.add_subcommand("augment", "add translated copies of a labeled corpus");
  std::string aug_in, aug_targets, aug_translator = "pseudo", aug_spec,
              aug_cache;
  CommonFlags aug_common;
  augment->add_option("input", aug_in, "labeled corpus (JSONL)")->required();
  augment->add_option("--targets", aug_targets,
                      "comma-separated target language tags");
  augment->add_option("--translator", aug_translator,
                      "translation backend: pseudo | cache-only");
  augment->add_option("--spec", aug_spec,
                      "pseudo-language spec file (required for pseudo)");
  augment->add_option("--cache", aug_cache, "persistent translation cache");
  aug_common.attach(augment);

  // ---- train ----
  auto* train = app.add_subcommand("train", "supervised encoder+classifier training");
  std::string train_in, train_mode = "joint";
  std::vector<std::string> train_pools;
  CommonFlags train_common;
  train->add_option("corpus", train_in, "labeled training corpus (JSONL)")
      ->required();
  train->add_option("--pool", train_pools,
                    "unlabeled vocabulary pool, lang=path (repeatable)");
  train->add_option("--mode", train_mode, "corpus bookkeeping: joint | split");
  train_common.attach(train);

  // ---- adapt ----
  auto* adapt = app.add_subcommand(
      "adapt", "adversarial adaptation of the encoder to a target language");
  std::string adapt_ckpt, adapt_target, adapt_source, adapt_scope;
  CommonFlags adapt_common;
  adapt->add_option("--checkpoint", adapt_ckpt, "trained model directory")
      ->required();
  adapt->add_option("--target", adapt_target, "unlabeled target-language corpus")
      ->required();
  adapt->add_option("--source", adapt_source, "source-language corpus")
      ->required();
  adapt->add_option("--scope", adapt_scope,
                    "update scope: target_encoder_only | encoder_and_classifier");
  adapt_common.attach(adapt);

  // ---- evaluate ----
  auto* evaluate = app.add_subcommand("evaluate", "score a model on a labeled test set");
  std::string eval_ckpt, eval_test, eval_variant = "model", eval_lang;
  CommonFlags eval_common;
  evaluate->add_option("--checkpoint", eval_ckpt, "model directory")->required();
  evaluate->add_option("--test", eval_test, "labeled test corpus (JSONL)")
      ->required();
  evaluate->add_option("--variant", eval_variant, "variant id for the report");
  evaluate->add_option("--lang", eval_lang,
                       "language tag for the report (default: from the data)");
  eval_common.attach(evaluate);

  // ---- report ----
  auto* report = app.add_subcommand("report", "merge metrics files into a results table and charts");
  std::vector<std::string> report_in;
  CommonFlags report_common;
  report->add_option("inputs", report_in, "metrics.json files")->required();
  report_common.attach(report);

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate the pseudo-language benchmark corpus");
  std::string synth_imbalance;
  CommonFlags synth_common;
  synth->add_option("--imbalance", synth_imbalance,
                    "test-set class balance: uniform | table1b");
  synth_common.attach(synth);

  // ---- run-matrix ----
  auto* matrix = app.add_subcommand("run-matrix", "train and evaluate all six pipeline variants");
  std::string matrix_data, matrix_targets;
  CommonFlags matrix_common;
  matrix->add_option("data", matrix_data,
                     "benchmark directory (train.jsonl, spec.json, "
                     "unlabeled_*/test_* per language)")
      ->required();
  matrix->add_option("--targets", matrix_targets,
                     "comma-separated target languages (default: all in spec)");
  matrix_common.attach(matrix);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(prep)) {
      Workspace ws(resolve_common(prep_common));
      ws.input(prep_in);
      const mtab::Dataset raw = load_corpus_checked(prep_in);

      mtab::LabelMap labels = mtab::LabelMap::defaults();
      labels.set_policy(mtab::LabelMap::UnmappedPolicy::Drop);
      std::string policy = "drop";
      if (!prep_labels.empty()) {
        ws.input(prep_labels);
        const json j = parse_json_file(prep_labels, "label map");
        std::map<std::string, mtab::StanceLabel> mapping;
        for (const auto& [raw_label, cls] :
             get_field<std::map<std::string, std::string>>(
                 j, "mapping", {})) {
          const auto parsed = mtab::label_from_string(cls);
          if (!parsed)
            throw mtab::ConfigError("label map value '" + cls +
                                    "' is not a stance class");
          mapping.emplace(raw_label, *parsed);
        }
        policy = get_field<std::string>(j, "unmapped", policy);
        if (policy != "drop" && policy != "error")
          throw mtab::ConfigError("label map policy must be drop or error");
        labels = mtab::LabelMap(mapping,
                                policy == "drop"
                                    ? mtab::LabelMap::UnmappedPolicy::Drop
                                    : mtab::LabelMap::UnmappedPolicy::Error);
      }

      const auto harmonized = mtab::harmonize_dataset(raw, labels);
      const auto cleaned = mtab::clean_dataset(harmonized.dataset);
      ws.write_corpus(ws.out() / "corpus.jsonl", cleaned.dataset);
      const auto stats = mtab::dataset_stats(cleaned.dataset);
      ws.write_text(ws.out() / "stats.csv", mtab::stats_to_csv(stats));

      print_stats(stats);
      std::cout << "dropped " << harmonized.dropped
                << " unmapped-label records, removed " << cleaned.removed_empty
                << " empty-after-cleaning records\n";
      ws.finish("prep", {{"input", prep_in},
                         {"labels", prep_labels.empty() ? "builtin-defaults"
                                                        : prep_labels},
                         {"unmapped_policy", policy}});

    } else if (app.got_subcommand(augment)) {
      Workspace ws(resolve_common(aug_common));
      ws.input(aug_in);
      const mtab::Dataset d = load_corpus_checked(aug_in);

      std::string targets_csv = aug_targets;
      if (targets_csv.empty())
        targets_csv = get_field<std::string>(
            ws.r.file.value("augment", json::object()), "targets", {});
      const auto targets = parse_target_list(targets_csv);

      std::unique_ptr<mtab::Translator> translator;
      if (aug_translator == "pseudo") {
        if (aug_spec.empty())
          throw mtab::ConfigError("pseudo translator needs --spec");
        ws.input(aug_spec);
        translator =
            std::make_unique<mtab::PseudoTranslator>(load_pseudo_specs(aug_spec));
      } else if (aug_translator == "cache-only") {
        translator = std::make_unique<mtab::CacheOnlyTranslator>();
      } else {
        throw mtab::ConfigError("unknown translator '" + aug_translator + "'");
      }

      const bool cache_preexisted = !aug_cache.empty() && fs::exists(aug_cache);
      mtab::TranslationCache cache =
          aug_cache.empty() ? mtab::TranslationCache()
                            : mtab::TranslationCache(aug_cache);
      if (!aug_cache.empty() && !cache_preexisted)
        ws.guard.track_file(aug_cache);

      const mtab::Dataset augmented =
          mtab::augment_with_translations(d, targets, *translator, cache);
      ws.write_corpus(ws.out() / "corpus.jsonl", augmented);

      std::cout << "augmented " << d.size() << " records x " << targets.size()
                << " targets -> " << augmented.size() << " records\n";
      ws.finish("augment", {{"input", aug_in},
                            {"targets", targets_csv},
                            {"translator", aug_translator},
                            {"spec", aug_spec},
                            {"cache", aug_cache}});

    } else if (app.got_subcommand(train)) {
      Workspace ws(resolve_common(train_common));
      const mtab::PipelineConfig pcfg = pipeline_config_from(ws.r.file, ws.r.seed);
      const mtab::TrainMode mode = mtab::train_mode_from_string(train_mode);

      ws.input(train_in);
      const mtab::Dataset data = load_corpus_checked(train_in);
      std::map<std::string, mtab::Dataset> pools;
      for (const auto& spec : train_pools) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
          throw mtab::ConfigError("--pool expects lang=path, got '" + spec + "'");
        const std::string lang = spec.substr(0, eq);
        const fs::path path = spec.substr(eq + 1);
        if (!mtab::LanguageTag::valid(lang))
          throw mtab::ConfigError("invalid pool language tag '" + lang + "'");
        ws.input(path);
        pools.emplace(lang, load_corpus_checked(path));
      }

      std::vector<const mtab::Dataset*> vocab_sources = {&data};
      for (const auto& [lang, pool] : pools) vocab_sources.push_back(&pool);
      const mtab::Tokenizer tok = mtab::build_vocab(
          vocab_sources, pcfg.vocab_min_freq, pcfg.encoder.max_len);

      mtab::Rng master(pcfg.seed);
      const std::uint64_t split_seed = master.fork(1);
      const std::uint64_t enc_seed = master.fork(2);
      const std::uint64_t cls_seed = master.fork(3);
      const std::uint64_t train_seed = master.fork(4);

      std::optional<mtab::Split> sp;
      if (pcfg.dev_fraction > 0.0)
        sp = mtab::split(data, pcfg.dev_fraction, split_seed);
      const mtab::Dataset& train_set = sp ? sp->train : data;
      const mtab::Dataset* dev = sp && sp->dev.size() > 0 ? &sp->dev : nullptr;

      mtab::EncoderConfig ecfg = pcfg.encoder;
      ecfg.vocab_size = tok.vocab_size();
      mtab::EncoderParams enc =
          mtab::EncoderParams::init(ecfg, enc_seed, pcfg.init_std);
      mtab::ClassifierParams cls =
          mtab::ClassifierParams::init(ecfg.d_model, cls_seed, pcfg.init_std);
      mtab::TrainConfig tcfg = pcfg.train;
      tcfg.seed = train_seed;
      const mtab::TrainLog log =
          mtab::train_supervised(enc, cls, tok, train_set, dev, tcfg, mode);

      ws.write_tokenizer(ws.out() / "tokenizer.json", tok);
      ws.write_checkpoint(ws.out() / "checkpoint.json", enc, cls);
      json epochs = json::array();
      for (const auto& e : log.epochs)
        epochs.push_back({{"epoch", e.epoch},
                          {"mean_loss", e.mean_loss},
                          {"dev_macro_f1", e.dev_macro_f1}});
      ws.write_text(ws.out() / "train_log.json",
                    json{{"schema", "mtab.trainlog.v1"}, {"epochs", epochs}}
                            .dump(2) +
                        "\n");

      if (!log.epochs.empty()) {
        const auto& last = log.epochs.back();
        std::cout << "epoch " << last.epoch << ": loss " << last.mean_loss;
        if (last.dev_macro_f1 >= 0)
          std::cout << ", dev macro F1 " << last.dev_macro_f1;
        std::cout << "\n";
      }
      json rc = pipeline_config_json(pcfg);
      rc["corpus"] = train_in;
      rc["mode"] = mtab::to_string(mode);
      rc["pools"] = train_pools;
      ws.finish("train", rc);

    } else if (app.got_subcommand(adapt)) {
      Workspace ws(resolve_common(adapt_common));
      mtab::AdaptationConfig acfg = adapt_config_from(ws.r.file, ws.r.seed);
      if (!adapt_scope.empty())
        acfg.update_scope = mtab::update_scope_from_string(adapt_scope);

      const fs::path ckpt_path = fs::path(adapt_ckpt) / "checkpoint.json";
      const fs::path tok_path = fs::path(adapt_ckpt) / "tokenizer.json";
      ws.input(ckpt_path);
      ws.input(tok_path);
      const mtab::Checkpoint ck = mtab::load_checkpoint(ckpt_path);
      const mtab::Tokenizer tok = mtab::Tokenizer::load(tok_path);
      ws.input(adapt_target);
      ws.input(adapt_source);
      const mtab::Dataset target = load_corpus_checked(adapt_target);
      const mtab::Dataset source = load_corpus_checked(adapt_source);

      mtab::ClassifierParams cls = ck.classifier;
      const mtab::AdaptationResult res =
          mtab::adapt_target_encoder(ck.encoder, cls, tok, target, source, acfg);

      ws.write_checkpoint(ws.out() / "checkpoint.json", res.tgt_enc, cls);
      ws.write_tokenizer(ws.out() / "tokenizer.json", tok);
      ws.write_text(ws.out() / "adaptation_log.json",
                    mtab::adaptation_state_to_json(res.state).dump(2) + "\n");
      ws.write_text(ws.out() / "adaptation_log.csv",
                    mtab::adaptation_state_to_csv(res.state));

      std::cout << "probe accuracy " << res.state.probe_pre << " -> "
                << (res.state.epochs.empty()
                        ? res.state.probe_pre
                        : res.state.epochs.back().probe_accuracy)
                << " over " << res.state.epochs.size() << " epochs\n";
      json rc = adapt_config_json(acfg);
      ws.finish("adapt", {{"adapt", rc},
                          {"checkpoint", adapt_ckpt},
                          {"target", adapt_target},
                          {"source", adapt_source}});

    } else if (app.got_subcommand(evaluate)) {
      Workspace ws(resolve_common(eval_common));
      const fs::path ckpt_path = fs::path(eval_ckpt) / "checkpoint.json";
      const fs::path tok_path = fs::path(eval_ckpt) / "tokenizer.json";
      ws.input(ckpt_path);
      ws.input(tok_path);
      const mtab::Checkpoint ck = mtab::load_checkpoint(ckpt_path);
      const mtab::Tokenizer tok = mtab::Tokenizer::load(tok_path);
      ws.input(eval_test);
      const mtab::Dataset test = load_corpus_checked(eval_test);

      const auto gold = gold_labels(test);
      const auto preds =
          mtab::predict(ck.encoder, ck.classifier, tok, test.records());
      std::vector<mtab::StanceLabel> pred;
      pred.reserve(preds.size());
      for (const auto& p : preds) pred.push_back(p.label);

      std::string lang = eval_lang;
      if (lang.empty()) {
        const auto langs = test.languages();
        lang = langs.size() == 1 ? langs.front().str() : "all";
      }
      const auto rep =
          mtab::MetricsReport::from_pairs(gold, pred, eval_variant, lang);

      std::string lines;
      for (std::size_t i = 0; i < test.size(); ++i) {
        json row = {{"id", test[i].id},
                    {"gold", mtab::to_string(gold[i])},
                    {"predicted", mtab::to_string(pred[i])},
                    {"probs", preds[i].probs}};
        lines += row.dump() + "\n";
      }
      ws.write_text(ws.out() / "predictions.jsonl", lines);
      ws.write_text(ws.out() / "metrics.json",
                    report_bundle_json({rep}).dump(2) + "\n");

      std::cout << "variant " << rep.variant_id << " lang " << rep.lang
                << ": macro F1 " << rep.macro << ", accuracy " << rep.micro
                << " on " << test.size() << " records\n";
      ws.finish("evaluate", {{"checkpoint", eval_ckpt},
                             {"test", eval_test},
                             {"variant", eval_variant},
                             {"lang", lang}});

    } else if (app.got_subcommand(report)) {
      Workspace ws(resolve_common(report_common));
      std::vector<mtab::MetricsReport> reports;
      for (const auto& in : report_in) {
        ws.input(in);
        if (!fs::exists(in))
          throw mtab::MissingArtifactError("metrics file not found: " + in);
        const json j = parse_json_file(in, "metrics file");
        if (get_field<std::string>(j, "schema", {}) != "mtab.report.v1")
          throw mtab::ParseError("metrics file " + in +
                                 " is not a report bundle");
        try {
          for (const auto& r : j.at("reports"))
            reports.push_back(mtab::metrics_from_json(r));
        } catch (const json::exception& e) {
          throw mtab::ParseError("metrics file " + in + ": " + e.what());
        }
      }
      write_report_files(ws, reports);
      std::cout << mtab::results_csv(reports);
      ws.finish("report", {{"inputs", report_in}});

    } else if (app.got_subcommand(synth)) {
      Workspace ws(resolve_common(synth_common));
      mtab::SynthConfig scfg = synth_config_from(ws.r.file, ws.r.seed);
      if (!synth_imbalance.empty())
        scfg.balance = mtab::synth_balance_from_string(synth_imbalance);
      const mtab::SynthBundle bundle = mtab::generate_synthetic_corpus(scfg);

      ws.write_corpus(ws.out() / "train.jsonl", bundle.source);
      for (const auto& [lang, pool] : bundle.unlabeled)
        ws.write_corpus(ws.out() / ("unlabeled_" + lang + ".jsonl"), pool);
      for (const auto& [lang, test] : bundle.tests)
        ws.write_corpus(ws.out() / ("test_" + lang + ".jsonl"), test);
      ws.write_text(ws.out() / "spec.json",
                    mtab::synth_spec_to_json(bundle).dump(2) + "\n");

      std::cout << "train " << bundle.source.size() << " records";
      for (const auto& [lang, pool] : bundle.unlabeled)
        std::cout << ", " << lang << " pool " << pool.size() << " / test "
                  << bundle.tests.at(lang).size();
      std::cout << "\n";
      ws.finish("synth", {{"synth", synth_config_json(scfg)}});

    } else if (app.got_subcommand(matrix)) {
      Workspace ws(resolve_common(matrix_common));
      const mtab::PipelineConfig pcfg = pipeline_config_from(ws.r.file, ws.r.seed);
      const fs::path data = matrix_data;

      const fs::path spec_path = data / "spec.json";
      if (!fs::exists(spec_path))
        throw mtab::MissingArtifactError("spec file not found: " +
                                         spec_path.string());
      ws.input(spec_path);
      auto specs = load_pseudo_specs(spec_path);

      std::vector<mtab::LanguageTag> targets;
      if (!matrix_targets.empty()) {
        targets = parse_target_list(matrix_targets);
        for (const auto& t : targets)
          if (!specs.count(t.str()))
            throw mtab::MissingArtifactError(
                "no pseudo-language spec for target '" + t.str() + "'");
      } else {
        for (const auto& [lang, spec] : specs) targets.emplace_back(lang);
      }

      ws.input(data / "train.jsonl");
      const mtab::Dataset train_data = load_corpus_checked(data / "train.jsonl");
      std::map<std::string, mtab::Dataset> unlabeled, tests;
      for (const auto& t : targets) {
        const fs::path pool = data / ("unlabeled_" + t.str() + ".jsonl");
        const fs::path test = data / ("test_" + t.str() + ".jsonl");
        ws.input(pool);
        ws.input(test);
        unlabeled.emplace(t.str(), load_corpus_checked(pool));
        tests.emplace(t.str(), load_corpus_checked(test));
      }

      mtab::PseudoTranslator translator(specs);
      mtab::TranslationCache cache;  // in-memory
      const mtab::Dataset augmented =
          mtab::augment_with_translations(train_data, targets, translator, cache);

      const mtab::MatrixResult res = mtab::run_matrix(
          augmented, unlabeled, tests, targets, pcfg, ws.r.jobs);

      std::vector<mtab::MetricsReport> reports;
      json adaptation_logs = json::object();
      json summary = json::array();
      for (const auto& v : res.variants) {
        for (const auto& [lang, rep] : v.reports) reports.push_back(rep);
        if (!v.adaptation_logs.empty()) {
          json per_lang = json::object();
          for (const auto& [lang, state] : v.adaptation_logs)
            per_lang[lang] = mtab::adaptation_state_to_json(state);
          adaptation_logs[v.spec.id()] = per_lang;
        }
        summary.push_back({{"id", v.spec.id()},
                           {"average_macro_f1", v.average_macro_f1}});
      }
      write_report_files(ws, reports);
      ws.write_text(ws.out() / "adaptation_logs.json",
                    adaptation_logs.dump(2) + "\n");
      ws.write_text(ws.out() / "summary.json",
                    json{{"schema", "mtab.matrix.v1"}, {"variants", summary}}
                            .dump(2) +
                        "\n");

      std::cout << mtab::results_csv(reports);
      json rc = pipeline_config_json(pcfg);
      rc["data"] = matrix_data;
      json tj = json::array();
      for (const auto& t : targets) tj.push_back(t.str());
      rc["targets"] = tj;
      ws.finish("run-matrix", rc);
    }
    return 0;
  } catch (const mtab::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mtab::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mtab::MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const mtab::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
