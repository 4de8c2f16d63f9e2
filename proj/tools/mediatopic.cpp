// mediatopic: command-line front end. Every pipeline stage is a subcommand;
// `pipeline` chains them from a config file.
//
// Exit codes: 0 success, 1 computation error, 2 usage or configuration error.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mediatopic/mediatopic.hpp"

namespace fs = std::filesystem;
using namespace mediatopic;

namespace {

// Writes to `path`, or to standard output when the path is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) std::fwrite(text.data(), 1, text.size(), stdout);
  else write_text_file(path, text);
}

std::optional<Split> split_filter(const std::string& name) {
  if (name == "all") return std::nullopt;
  return parse_split(name);
}

template <class T>
void write_trace_tsv(const std::string& path, const std::string& header, const std::vector<T>& rows,
                     const std::function<std::string(const T&)>& line) {
  if (path.empty()) return;
  std::string text = header + '\n';
  for (const auto& r : rows) text += line(r) + '\n';
  write_text_file(path, text);
}

struct Options {
  std::string corpus, out, out_dir, gmm, words_dir, vocab, idf, weighted, lda, gammas, features;
  std::string svm, fusion, labels, pred, truth, map, model, spec, config, trace, cv_scores, labels_out;
  std::string axis = "genre", unit = "segment", mass_mode = "fractional", mode = "hard";
  std::string split = "test", predict_split = "all";
  std::vector<std::string> scores;
  std::size_t components = 256, iterations = 10, k = 8, max_iterations = 50, folds = 5, max_epochs = 1000;
  std::size_t threads = 0, vocab_size = 0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> seed_override;
  std::optional<double> alpha;
  double smoothing = 0.01, c = 1.0;
  bool text = false, average = false, map_to_genres = false, with_metadata = false;
  bool metadata_only = false, balance = false;
};

CLI::App* add_threads(CLI::App* cmd, Options& o) {
  cmd->add_option("--threads", o.threads, "Worker threads (0 = hardware concurrency)");
  return cmd;
}

void add_documents_source(CLI::App* cmd, Options& o) {
  cmd->add_option("--corpus", o.corpus, "Corpus manifest")->required();
  cmd->add_option("--words-dir", o.words_dir, "Acoustic word files from quantize");
  cmd->add_flag("--text", o.text, "Use transcripts instead of acoustic words (whole-show documents)");
  cmd->add_option("--unit", o.unit, "Acoustic document unit: show or segment")
      ->check(CLI::IsMember({"show", "segment"}));
}

std::vector<DocumentRecord> load_documents(const Options& o, const Corpus& corpus,
                                           const TextVocabulary* vocab) {
  if (o.text) return text_documents(corpus, *vocab);
  if (o.words_dir.empty()) throw UsageError("either --words-dir or --text is required");
  return acoustic_documents(corpus, o.words_dir, parse_document_unit(o.unit));
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("mediatopic"));
  spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");

  CLI::App app{"Genre and show identification with acoustic and text topic models"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  Options o;
  std::function<void()> action;

  // ---- vq
  {
    auto* cmd = app.add_subcommand("train-gmm", "Train the acoustic-word GMM on training-split frames");
    cmd->add_option("--corpus", o.corpus, "Corpus manifest")->required();
    cmd->add_option("--components", o.components, "Mixture components (power of two)");
    cmd->add_option("--iterations", o.iterations, "EM iterations per mix-up level");
    cmd->add_option("--out", o.out, "Output GMM archive")->required();
    cmd->add_option("--trace", o.trace, "Optional TSV of per-iteration log-likelihoods");
    add_threads(cmd, o);
    cmd->callback([&] {
      action = [&] {
        const auto corpus = load_corpus(o.corpus);
        GmmTrainConfig config;
        config.em_iterations = o.iterations;
        config.threads = o.threads;
        std::vector<EmIterationRecord> trace;
        const auto model = stage_train_gmm(corpus, o.components, config, &trace);
        save_model(o.out, model);
        write_trace_tsv<EmIterationRecord>(
            o.trace, "components\titeration\tlog_likelihood\tfloor_active\trescued", trace,
            [](const EmIterationRecord& r) {
              return fmt::format("{}\t{}\t{}\t{}\t{}", r.components, r.iteration,
                                 format_double(r.log_likelihood), int(r.floor_active), int(r.rescued));
            });
      };
    });
  }
  {
    auto* cmd = app.add_subcommand("quantize", "Write one acoustic-word file per show");
    cmd->add_option("--gmm", o.gmm, "GMM archive")->required();
    cmd->add_option("--corpus", o.corpus, "Corpus manifest")->required();
    cmd->add_option("--out-dir", o.out_dir, "Output directory")->required();
    add_threads(cmd, o);
    cmd->callback([&] {
      action = [&] { stage_quantize(load_model<GmmModel>(o.gmm), load_corpus(o.corpus), o.out_dir, o.threads); };
    });
  }

  // ---- gmm-baseline
  {
    auto* cmd = app.add_subcommand("baseline-train", "Train one GMM per class on pooled frames");
    cmd->add_option("--corpus", o.corpus, "Corpus manifest")->required();
    cmd->add_option("--axis", o.axis, "Class axis: genre or show")->check(CLI::IsMember({"genre", "show"}));
    cmd->add_option("--components", o.components, "Mixture components per class (power of two)");
    cmd->add_option("--iterations", o.iterations, "EM iterations per mix-up level");
    cmd->add_option("--out", o.out, "Output bank archive")->required();
    add_threads(cmd, o);
    cmd->callback([&] {
      action = [&] {
        GmmTrainConfig config;
        config.em_iterations = o.iterations;
        config.threads = o.threads;
        save_model(o.out, train_class_gmms(load_corpus(o.corpus), parse_axis(o.axis), o.components, config));
      };
    });
  }
  {
    auto* cmd = app.add_subcommand("baseline-classify", "Classify shows by class-GMM log-likelihood");
    cmd->add_option("--model", o.model, "Class GMM bank archive")->required();
    cmd->add_option("--corpus", o.corpus, "Corpus manifest")->required();
    cmd->add_option("--axis", o.axis, "Axis the bank was trained on: genre or show")
        ->check(CLI::IsMember({"genre", "show"}));
    cmd->add_option("--split", o.split, "Shows to classify: train, test or all")
        ->check(CLI::IsMember({"train", "test", "all"}));
    cmd->add_flag("--average", o.average, "Score by per-frame average log-likelihood");
    cmd->add_flag("--map-shows-to-genres", o.map_to_genres,
                  "Map show predictions to genres (show-axis bank only)");
    cmd->add_option("--out", o.out, "Output scores TSV (default: standard output)");
    cmd->callback([&] {
      action = [&] {
        const auto corpus = load_corpus(o.corpus);
        const auto bank = load_model<ClassGmmBank>(o.model);
        if (bank.axis != parse_axis(o.axis))
          throw UsageError(fmt::format("bank was trained on the {} axis", to_string(bank.axis)));
        if (o.map_to_genres && bank.axis != ClassAxis::show)
          throw UsageError("--map-shows-to-genres needs a show-axis bank");
        const auto filter = split_filter(o.split);
        ScoreTable t;
        t.scores = Matrix(0, o.map_to_genres ? 0 : bank.num_classes());
        for (const auto& show : corpus.shows) {
          if (filter && show.split != *filter) continue;
          auto d = classify_loglik(bank, load_feature_matrix(show.features_path), o.average);
          t.ids.push_back(show.show_id);
          t.predicted.push_back(d.label);
          if (!o.map_to_genres) t.scores.append_row(d.scores);
        }
        if (o.map_to_genres) t.predicted = map_show_to_genre(t.predicted, corpus.manifest.show_to_genre);
        emit(o.out, format_scores(t));
      };
    });
  }

  // ---- weighting
  {
    auto* cmd = app.add_subcommand("build-idf", "Build the idf table from training documents");
    add_documents_source(cmd, o);
    cmd->add_option("--gmm", o.gmm, "GMM archive supplying the acoustic vocabulary size");
    cmd->add_option("--vocab-size", o.vocab_size, "Acoustic vocabulary size (0 = take it from --gmm)");
    cmd->add_option("--vocab-out", o.vocab, "Text vocabulary output (with --text)");
    cmd->add_option("--out", o.out, "Output idf archive")->required();
    cmd->callback([&] {
      action = [&] {
        const auto corpus = load_corpus(o.corpus);
        if (o.text) {
          if (o.vocab.empty()) throw UsageError("--text needs --vocab-out");
          const auto vocab = build_text_vocabulary(corpus);
          vocab.save(o.vocab);
          save_model(o.out, stage_build_idf(text_documents(corpus, vocab), vocab.size()));
          return;
        }
        std::size_t v = o.vocab_size;
        if (v == 0 && !o.gmm.empty()) v = load_model<GmmModel>(o.gmm).num_components();
        if (v == 0) throw UsageError("acoustic build-idf needs --vocab-size or --gmm");
        save_model(o.out, stage_build_idf(load_documents(o, corpus, nullptr), v));
      };
    });
  }
  {
    auto* cmd = app.add_subcommand("weight", "Write tf-idf weighted documents");
    add_documents_source(cmd, o);
    cmd->add_option("--idf", o.idf, "Idf archive")->required();
    cmd->add_option("--vocab", o.vocab, "Text vocabulary (with --text)");
    cmd->add_option("--mass-mode", o.mass_mode, "fractional or rounded")
        ->check(CLI::IsMember({"fractional", "rounded"}));
    cmd->add_option("--out-dir", o.out_dir, "Output directory")->required();
    cmd->callback([&] {
      action = [&] {
        MassMode mode;
        if (o.mass_mode == "fractional") mode = MassMode::fractional;
        else if (o.mass_mode == "rounded") mode = MassMode::rounded;
        else throw UsageError("--mass-mode must be fractional or rounded");
        const auto corpus = load_corpus(o.corpus);
        std::optional<TextVocabulary> vocab;
        if (o.text) {
          if (o.vocab.empty()) throw UsageError("--text needs --vocab");
          vocab = TextVocabulary::load(o.vocab);
        }
        const auto docs = load_documents(o, corpus, vocab ? &*vocab : nullptr);
        save_weighted_corpus(o.out_dir, weight_documents(docs, load_model<IdfTable>(o.idf), mode));
      };
    });
  }

  // ---- lda
  {
    auto* cmd = app.add_subcommand("train-lda", "Train LDA by variational EM on training documents");
    cmd->add_option("--weighted", o.weighted, "Weighted document directory")->required();
    cmd->add_option("--k", o.k, "Number of topics");
    cmd->add_option("--alpha", o.alpha, "Symmetric Dirichlet concentration (default 1/K)");
    cmd->add_option("--seed", o.seed, "Initialization seed");
    cmd->add_option("--smoothing", o.smoothing, "Pseudo-mass per topic and type in the M-step");
    cmd->add_option("--max-iterations", o.max_iterations, "Maximum EM iterations");
    cmd->add_option("--out", o.out, "Output LDA archive")->required();
    cmd->add_option("--trace", o.trace, "Optional TSV of per-iteration bounds");
    add_threads(cmd, o);
    cmd->callback([&] {
      action = [&] {
        LdaTrainConfig config;
        config.alpha = o.alpha;
        config.seed = o.seed;
        config.smoothing = o.smoothing;
        config.max_em_iterations = o.max_iterations;
        config.threads = o.threads;
        std::vector<LdaTrainRecord> trace;
        save_model(o.out, stage_train_lda(load_weighted_corpus(o.weighted), o.k, config, &trace));
        write_trace_tsv<LdaTrainRecord>(o.trace, "iteration\telbo\tobjective", trace,
                                        [](const LdaTrainRecord& r) {
                                          return fmt::format("{}\t{}\t{}", r.iteration,
                                                             format_double(r.elbo),
                                                             format_double(r.objective));
                                        });
      };
    });
  }
  {
    auto* cmd = app.add_subcommand("infer", "Write per-document posterior Dirichlet parameters");
    cmd->add_option("--lda", o.lda, "LDA archive")->required();
    cmd->add_option("--weighted", o.weighted, "Weighted document directory")->required();
    cmd->add_option("--out", o.out, "Output gammas TSV (default: standard output)");
    add_threads(cmd, o);
    cmd->callback([&] {
      action = [&] {
        const auto rows = stage_infer(load_model<LdaModel>(o.lda), load_weighted_corpus(o.weighted), {}, o.threads);
        emit(o.out, format_gammas(rows));
      };
    });
  }

  // ---- featurize
  {
    auto* cmd = app.add_subcommand("featurize", "Pool posteriors into one feature row per show");
    cmd->add_option("--corpus", o.corpus, "Corpus manifest")->required();
    cmd->add_option("--gammas", o.gammas, "Gammas TSV from infer");
    cmd->add_option("--mode", o.mode, "whole, soft or hard")->check(CLI::IsMember({"whole", "soft", "hard"}));
    cmd->add_flag("--with-metadata", o.with_metadata, "Append channel and time-chunk one-hots");
    cmd->add_flag("--metadata-only", o.metadata_only, "Emit only the channel and time-chunk one-hots");
    cmd->add_option("--out", o.out, "Output features TSV")->required();
    cmd->callback([&] {
      action = [&] {
        const auto corpus = load_corpus(o.corpus);
        std::vector<GammaRow> gammas;
        if (!o.metadata_only) {
          if (o.gammas.empty()) throw UsageError("--gammas is required unless --metadata-only");
          gammas = load_gammas(o.gammas);
        }
        save_features(o.out, stage_featurize(corpus, gammas,
                                             {parse_pooling_mode(o.mode), o.with_metadata, o.metadata_only}));
      };
    });
  }

  // ---- classify
  {
    auto* cmd = app.add_subcommand("train-svm", "Train one-vs-rest linear SVMs on training-split shows");
    cmd->add_option("--features", o.features, "Features TSV")->required();
    cmd->add_option("--corpus", o.corpus, "Corpus manifest (labels and splits)")->required();
    cmd->add_option("--axis", o.axis, "genre or show")->check(CLI::IsMember({"genre", "show"}));
    cmd->add_option("--c", o.c, "Regularization parameter C");
    cmd->add_option("--seed", o.seed, "Coordinate-descent shuffling seed");
    cmd->add_option("--max-epochs", o.max_epochs, "Maximum passes over the data");
    cmd->add_flag("--balance", o.balance, "Scale C by inverse class frequency");
    cmd->add_option("--out", o.out, "Output SVM archive")->required();
    cmd->add_option("--cv-scores", o.cv_scores, "Also write out-of-fold training scores here");
    cmd->add_option("--folds", o.folds, "Cross-validation folds for --cv-scores");
    cmd->add_option("--labels-out", o.labels_out, "Also write training labels (for train-fusion)");
    add_threads(cmd, o);
    cmd->callback([&] {
      action = [&] {
        const auto corpus = load_corpus(o.corpus);
        const ClassAxis axis = parse_axis(o.axis);
        const auto train = select_split(load_features(o.features), corpus, Split::train);
        const auto labels = corpus_labels(corpus, axis);
        const auto y = labels_for(train, labels);
        SvmTrainConfig config;
        config.c = o.c;
        config.seed = o.seed;
        config.max_epochs = o.max_epochs;
        config.balance_classes = o.balance;
        config.threads = o.threads;
        const std::size_t n_classes = class_count(corpus.manifest, axis);
        save_model(o.out, train_svm(feature_values(train), y, n_classes, config));
        if (!o.cv_scores.empty())
          save_scores(o.cv_scores, cross_validated_scores(train, y, n_classes, o.folds, config));
        if (!o.labels_out.empty()) {
          std::vector<std::string> ids;
          for (const auto& f : train) ids.push_back(f.show_id);
          save_labels(o.labels_out, ids, labels);
        }
      };
    });
  }
  {
    auto* cmd = app.add_subcommand("predict", "Score shows with a trained SVM");
    cmd->add_option("--svm", o.svm, "SVM archive")->required();
    cmd->add_option("--features", o.features, "Features TSV")->required();
    cmd->add_option("--corpus", o.corpus, "Corpus manifest (needed with --split train|test)");
    cmd->add_option("--split", o.predict_split, "Shows to score: train, test or all")
        ->check(CLI::IsMember({"train", "test", "all"}));
    cmd->add_option("--out", o.out, "Output scores TSV (default: standard output)");
    cmd->callback([&] {
      action = [&] {
        auto features = load_features(o.features);
        if (const auto filter = split_filter(o.predict_split)) {
          if (o.corpus.empty()) throw UsageError("--split train|test needs --corpus");
          features = select_split(features, load_corpus(o.corpus), *filter);
        }
        emit(o.out, format_scores(score_svm(load_model<SvmModel>(o.svm), features)));
      };
    });
  }

  // ---- fusion
  {
    auto* cmd = app.add_subcommand("train-fusion", "Train logistic-regression score fusion");
    cmd->add_option("--scores", o.scores, "One scores TSV per system")->required()->expected(1, -1);
    cmd->add_option("--labels", o.labels, "Labels TSV (show_id, class)")->required();
    cmd->add_option("--out", o.out, "Output fusion archive")->required();
    cmd->callback([&] {
      action = [&] {
        std::vector<ScoreTable> tables;
        for (const auto& s : o.scores) tables.push_back(load_scores(s));
        save_model(o.out, stage_train_fusion(tables, load_labels(o.labels)));
      };
    });
  }
  {
    auto* cmd = app.add_subcommand("fuse", "Apply a fusion model to per-system scores");
    cmd->add_option("--fusion", o.fusion, "Fusion archive")->required();
    cmd->add_option("--scores", o.scores, "One scores TSV per system, in training order")
        ->required()
        ->expected(1, -1);
    cmd->add_option("--out", o.out, "Output scores TSV (default: standard output)");
    cmd->callback([&] {
      action = [&] {
        std::vector<ScoreTable> tables;
        for (const auto& s : o.scores) tables.push_back(load_scores(s));
        emit(o.out, format_scores(fuse_tables(load_model<FusionModel>(o.fusion), tables)));
      };
    });
  }

  // ---- eval-harness
  {
    auto* cmd = app.add_subcommand("eval", "Accuracy, per-class precision/recall and confusion matrix");
    cmd->add_option("--pred", o.pred, "Predictions (scores TSV or show_id, class)")->required();
    cmd->add_option("--truth", o.truth, "Truth labels (show_id, class)")->required();
    cmd->add_option("--map", o.map, "Map predicted show indices to genres before scoring");
    cmd->add_option("--corpus", o.corpus, "Corpus manifest supplying class names");
    cmd->add_option("--axis", o.axis, "Axis of the truth labels, for class names")
        ->check(CLI::IsMember({"genre", "show"}));
    cmd->add_option("--out", o.out, "Output report (default: standard output)");
    cmd->callback([&] {
      action = [&] {
        std::vector<std::string> order;
        const auto predictions = load_labels(o.pred, &order);
        const auto truth = load_labels(o.truth);
        std::vector<std::size_t> p, t;
        for (const auto& id : order) {
          const auto it = truth.find(id);
          if (it == truth.end()) throw ValidationError(fmt::format("no truth label for '{}'", id));
          p.push_back(predictions.at(id));
          t.push_back(it->second);
        }
        if (!o.map.empty()) p = map_show_to_genre(p, load_index_map(o.map));
        std::vector<std::string> names;
        if (!o.corpus.empty()) {
          names = class_names(load_corpus(o.corpus).manifest, parse_axis(o.axis));
        } else {
          std::size_t n = 0;
          for (std::size_t i = 0; i < p.size(); ++i) n = std::max({n, p[i] + 1, t[i] + 1});
          for (std::size_t c = 0; c < n; ++c) names.push_back(std::to_string(c));
        }
        emit(o.out, format_report(make_report(p, t, names, o.axis, fs::path(o.pred).stem().string())));
      };
    });
  }
  {
    auto* cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
    cmd->add_option("--spec", o.spec, "Synth spec TSV (default: built-in desk-scale spec)");
    cmd->add_option("--seed", o.seed_override, "Override the synth spec's seed");
    cmd->add_option("--out", o.out, "Output directory")->required();
    cmd->callback([&] {
      action = [&] {
        SynthSpec spec = o.spec.empty() ? SynthSpec{} : load_synth_spec(o.spec);
        if (o.seed_override) spec.seed = *o.seed_override;
        const auto manifest = generate_synthetic_corpus(spec, o.out);
        std::cout << manifest.string() << '\n';
      };
    });
  }

  // ---- cli
  {
    auto* cmd = app.add_subcommand("pipeline", "Run every stage end to end from a config file");
    cmd->add_option("--config", o.config, "Pipeline config TSV")->required();
    cmd->callback([&] {
      action = [&] {
        for (const auto& r : run_pipeline(load_pipeline_config(o.config)))
          std::cout << fmt::format("{}\t{}\t{}\n", r.axis, r.system, format_double(r.accuracy));
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);
  try {
    action();
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
