#pragma once

// End-to-end run: acoustic branch (GMM words -> tf-idf -> LDA -> pooled
// features), text branch (transcripts -> tf-idf -> LDA -> features), optional
// metadata systems, one-vs-rest SVMs per system and axis, fusion trained on
// out-of-fold scores, and evaluation reports. Every artifact lands under the
// work directory.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mediatopic/eval.hpp"
#include "mediatopic/stages.hpp"

namespace mediatopic {

struct PipelineConfig {
  std::filesystem::path corpus;
  std::filesystem::path work_dir;
  std::uint64_t seed = 0;
  std::size_t gmm_components = 256;
  std::size_t gmm_iterations = 10;
  std::size_t acoustic_k = 8;
  std::size_t text_k = 8;
  std::optional<double> lda_alpha;  // default 1/K
  PoolingMode featurize_mode = PoolingMode::hard;
  double svm_c = 1.0;
  std::size_t fusion_folds = 5;
  // Any of: acoustic, acoustic+metadata, text, text+metadata, metadata.
  std::vector<std::string> systems = {"acoustic", "text"};
  std::size_t threads = 0;

  void validate() const {
    if (acoustic_k < 1 || text_k < 1) throw UsageError("K must be >= 1");
    if (systems.empty()) throw UsageError("systems list is empty");
    for (const auto& s : systems)
      if (s != "acoustic" && s != "acoustic+metadata" && s != "text" && s != "text+metadata" &&
          s != "metadata")
        throw UsageError(fmt::format("unknown system '{}'", s));
    if (!(svm_c > 0.0)) throw UsageError("svm_c must be positive");
  }
};

// Key/value TSV. Relative paths resolve against the config file's directory.
inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  const auto kv = read_key_values(path);
  PipelineConfig c;
  const auto base = path.parent_path();
  auto require = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) throw UsageError(fmt::format("missing field: {}", key));
    return it->second;
  };
  c.corpus = base / require("corpus");
  c.work_dir = base / require("work_dir");
  const std::string where = path.string();
  c.seed = parse_index(require("seed"), where + ": seed");
  for (const auto& [key, value] : kv) {
    const std::string at = where + ": " + key;
    if (key == "corpus" || key == "work_dir" || key == "seed") continue;
    else if (key == "gmm_components") c.gmm_components = parse_index(value, at);
    else if (key == "gmm_iterations") c.gmm_iterations = parse_index(value, at);
    else if (key == "acoustic_k") c.acoustic_k = parse_index(value, at);
    else if (key == "text_k") c.text_k = parse_index(value, at);
    else if (key == "lda_alpha") c.lda_alpha = parse_double(value, at);
    else if (key == "featurize_mode") c.featurize_mode = parse_pooling_mode(value);
    else if (key == "svm_c") c.svm_c = parse_double(value, at);
    else if (key == "fusion_folds") c.fusion_folds = parse_index(value, at);
    else if (key == "threads") c.threads = parse_index(value, at);
    else if (key == "systems") {
      c.systems.clear();
      for (const auto& s : split(value, ','))
        if (!trim(s).empty()) c.systems.emplace_back(trim(s));
    } else throw UsageError(fmt::format("{}: unknown pipeline key '{}'", where, key));
  }
  c.validate();
  return c;
}

struct PipelineOutcome {
  std::string axis;
  std::string system;
  double accuracy = 0.0;
  std::filesystem::path report;
};

namespace detail {

// Re-throws with the stage name prefixed, keeping usage errors distinguishable.
template <class Fn>
auto run_stage(std::string_view name, Fn&& fn) {
  spdlog::info("stage {}", name);
  try {
    return fn();
  } catch (const UsageError& e) {
    throw UsageError(fmt::format("stage {}: {}", name, e.what()));
  } catch (const Error& e) {
    throw Error(fmt::format("stage {}: {}", name, e.what()));
  } catch (const std::exception& e) {
    throw Error(fmt::format("stage {}: {}", name, e.what()));
  }
}

// Topic-posterior features for one modality, written under `dir`.
inline std::vector<ShowFeature> lda_branch(const Corpus& corpus, const std::vector<DocumentRecord>& docs,
                                           std::size_t vocabulary_size, std::size_t k,
                                           PoolingMode mode, const PipelineConfig& config,
                                           const std::filesystem::path& dir, const std::string& name) {
  const auto idf = run_stage(name + "/build-idf", [&] { return stage_build_idf(docs, vocabulary_size); });
  save_model(dir / "idf.archive", idf);
  const auto weighted = run_stage(name + "/weight", [&] {
    auto wc = weight_documents(docs, idf);
    save_weighted_corpus(dir / "weighted", wc);
    return wc;
  });
  const auto lda = run_stage(name + "/train-lda", [&] {
    LdaTrainConfig lc;
    lc.alpha = config.lda_alpha;
    lc.seed = derive_seed(config.seed, name + "-lda");
    lc.threads = config.threads;
    return stage_train_lda(weighted, k, lc);
  });
  save_model(dir / "lda.archive", lda);
  const auto gammas = run_stage(name + "/infer", [&] {
    auto g = stage_infer(lda, weighted, {}, config.threads);
    save_gammas(dir / "gammas.tsv", g);
    return g;
  });
  return run_stage(name + "/featurize", [&] {
    auto f = stage_featurize(corpus, gammas, {mode, false, false});
    save_features(dir / "features.tsv", f);
    return f;
  });
}

inline std::vector<ShowFeature> with_metadata(const Corpus& corpus, std::vector<ShowFeature> features) {
  std::map<std::string, const ShowRecord*> shows;
  for (const auto& s : corpus.shows) shows[s.show_id] = &s;
  for (auto& f : features) {
    const ShowRecord* s = shows.at(f.show_id);
    f.values = append_metadata(f.values, s->channel, time_chunk(s->broadcast_hour));
  }
  return features;
}

}  // namespace detail

inline std::vector<PipelineOutcome> run_pipeline(const PipelineConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  const fs::path work = config.work_dir;
  fs::create_directories(work);
  const Corpus corpus = detail::run_stage("load-corpus", [&] { return load_corpus(config.corpus); });

  auto wants = [&](std::string_view prefix) {
    for (const auto& s : config.systems)
      if (s.rfind(prefix, 0) == 0) return true;
    return false;
  };

  std::map<std::string, std::vector<ShowFeature>> system_features;
  if (wants("acoustic")) {
    const fs::path dir = work / "acoustic";
    const auto gmm = detail::run_stage("acoustic/train-gmm", [&] {
      GmmTrainConfig gc;
      gc.em_iterations = config.gmm_iterations;
      gc.threads = config.threads;
      return stage_train_gmm(corpus, config.gmm_components, gc);
    });
    save_model(dir / "gmm.archive", gmm);
    detail::run_stage("acoustic/quantize", [&] {
      stage_quantize(gmm, corpus, dir / "words", config.threads);
      return 0;
    });
    const DocumentUnit unit =
        config.featurize_mode == PoolingMode::whole ? DocumentUnit::show : DocumentUnit::segment;
    const auto docs = detail::run_stage("acoustic/documents",
                                        [&] { return acoustic_documents(corpus, dir / "words", unit); });
    auto features = detail::lda_branch(corpus, docs, gmm.num_components(), config.acoustic_k,
                                       config.featurize_mode, config, dir, "acoustic");
    system_features["acoustic+metadata"] = detail::with_metadata(corpus, features);
    system_features["acoustic"] = std::move(features);
  }
  if (wants("text")) {
    const fs::path dir = work / "text";
    const auto vocab = detail::run_stage("text/vocabulary", [&] { return build_text_vocabulary(corpus); });
    vocab.save(dir / "vocab.tsv");
    const auto docs = detail::run_stage("text/documents", [&] { return text_documents(corpus, vocab); });
    auto features = detail::lda_branch(corpus, docs, vocab.size(), config.text_k, PoolingMode::whole,
                                       config, dir, "text");
    system_features["text+metadata"] = detail::with_metadata(corpus, features);
    system_features["text"] = std::move(features);
  }
  if (wants("metadata"))
    system_features["metadata"] = stage_featurize(corpus, {}, {PoolingMode::whole, false, true});

  std::vector<PipelineOutcome> outcomes;
  const fs::path reports = work / "reports";
  for (ClassAxis axis : {ClassAxis::genre, ClassAxis::show}) {
    const std::string axis_name(to_string(axis));
    const LabelMap labels = corpus_labels(corpus, axis);
    const std::size_t n_classes = class_count(corpus.manifest, axis);
    const auto& names = class_names(corpus.manifest, axis);
    std::vector<ScoreTable> cv_tables, test_tables;
    auto report = [&](const std::string& system, const ScoreTable& test) {
      std::vector<std::size_t> truth;
      for (const auto& id : test.ids) truth.push_back(labels.at(id));
      const auto r = make_report(test.predicted, truth, names, axis_name, system);
      const fs::path path = reports / fmt::format("{}_{}.tsv", axis_name, system);
      save_report(path, r);
      spdlog::info("{} {} accuracy {}", axis_name, system, format_double(r.accuracy));
      outcomes.push_back({axis_name, system, r.accuracy, path});
    };
    for (const auto& system : config.systems) {
      const std::string stage = fmt::format("{}/{}", system, axis_name);
      const fs::path dir = work / "systems" / system / axis_name;
      const auto& all = system_features.at(system);
      const auto train = select_split(all, corpus, Split::train);
      const auto test = select_split(all, corpus, Split::test);
      SvmTrainConfig sc;
      sc.c = config.svm_c;
      sc.seed = derive_seed(config.seed, stage + "-svm");
      sc.threads = config.threads;
      const auto train_labels = labels_for(train, labels);
      const auto model = detail::run_stage(stage + "/train-svm", [&] {
        return train_svm(feature_values(train), train_labels, n_classes, sc);
      });
      save_model(dir / "svm.archive", model);
      const auto test_scores = score_svm(model, test);
      save_scores(dir / "scores_test.tsv", test_scores);
      report(system, test_scores);
      if (config.systems.size() >= 2) {
        auto cv = detail::run_stage(stage + "/cross-validate", [&] {
          return cross_validated_scores(train, train_labels, n_classes, config.fusion_folds, sc);
        });
        save_scores(dir / "scores_cv.tsv", cv);
        cv_tables.push_back(std::move(cv));
        test_tables.push_back(test_scores);
      }
    }
    if (cv_tables.size() >= 2) {
      const fs::path dir = work / "fusion" / axis_name;
      const auto fusion = detail::run_stage("fusion/" + axis_name, [&] {
        return stage_train_fusion(cv_tables, labels);
      });
      save_model(dir / "fusion.archive", fusion);
      const auto fused = fuse_tables(fusion, test_tables);
      save_scores(dir / "scores_test.tsv", fused);
      report("fused", fused);
    }
  }

  std::string summary = "axis\tsystem\taccuracy\n";
  for (const auto& o : outcomes)
    summary += fmt::format("{}\t{}\t{}\n", o.axis, o.system, format_double(o.accuracy));
  write_text_file(reports / "summary.tsv", summary);
  return outcomes;
}

}  // namespace mediatopic
