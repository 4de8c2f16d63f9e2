#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "mediatopic/binary_io.hpp"
#include "mediatopic/pipeline.hpp"
#include "mediatopic/synth.hpp"
#include "test_support.hpp"

using namespace mediatopic;
namespace fs = std::filesystem;
using mediatopic::testing::TempDir;

TEST(StratifiedFolds, BalancedPerClassAndDeterministic) {
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < 10; ++i) labels.push_back(c);
  const auto folds = stratified_folds(labels, 5, 3);
  EXPECT_EQ(folds, stratified_folds(labels, 5, 3));
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> count;
  for (std::size_t i = 0; i < labels.size(); ++i) ++count[{labels[i], folds[i]}];
  for (const auto& [key, n] : count) EXPECT_EQ(n, 2u);
  EXPECT_THROW(stratified_folds(labels, 1, 3), ArgumentError);
  EXPECT_THROW(stratified_folds(std::vector<std::size_t>{0, 1}, 3, 3), ArgumentError);
}

TEST(CrossValidatedScores, EveryItemScoredOutOfFold) {
  std::vector<ShowFeature> features;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 12; ++i) {
    const std::size_t c = i % 3;
    features.push_back({fmt::format("s{}", i), {c == 0 ? 1.0 : 0.0, c == 1 ? 1.0 : 0.0}});
    labels.push_back(c);
  }
  const auto t = cross_validated_scores(features, labels, 3, 4, {});
  ASSERT_EQ(t.ids.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(t.ids[i], features[i].show_id);
    EXPECT_EQ(t.predicted[i], labels[i]);
  }
}

TEST(StageFiles, ScoresFeaturesGammasAndLabelsRoundTrip) {
  TempDir dir;
  ScoreTable t;
  t.ids = {"a", "b"};
  t.predicted = {1, 0};
  t.scores = mediatopic::testing::rows({{-0.25, 0.125}, {3.0, -1e-17}});
  save_scores(dir / "s.tsv", t);
  const auto back = load_scores(dir / "s.tsv");
  EXPECT_EQ(back.ids, t.ids);
  EXPECT_EQ(back.predicted, t.predicted);
  EXPECT_EQ(back.scores, t.scores);
  const std::vector<std::string> order{"b", "a"};
  const Matrix aligned = align_scores(back, order, "test");
  EXPECT_EQ(aligned(0, 0), 3.0);
  EXPECT_THROW(align_scores(back, std::vector<std::string>{"zzz"}, "test"), ValidationError);

  const std::vector<ShowFeature> f{{"a", {0.1, 1.0 / 3.0}}, {"b", {0.0, 1.0}}};
  save_features(dir / "f.tsv", f);
  const auto fb = load_features(dir / "f.tsv");
  ASSERT_EQ(fb.size(), 2u);
  EXPECT_EQ(fb[0].show_id, "a");
  EXPECT_EQ(fb[0].values, f[0].values);

  const std::vector<GammaRow> g{{"a.s000", "a", 25, Split::train, {0.7, 2.0 / 7.0}},
                                {"b.s001", "b", 5, Split::test, {1.0, 1.5}}};
  save_gammas(dir / "g.tsv", g);
  const auto gb = load_gammas(dir / "g.tsv");
  ASSERT_EQ(gb.size(), 2u);
  EXPECT_EQ(gb[1].doc_id, "b.s001");
  EXPECT_EQ(gb[1].split, Split::test);
  EXPECT_EQ(gb[0].gamma, g[0].gamma);

  save_labels(dir / "l.tsv", {"b", "a"}, LabelMap{{"a", 2}, {"b", 0}});
  std::vector<std::string> ids;
  EXPECT_EQ(load_labels(dir / "l.tsv", &ids), (LabelMap{{"a", 2}, {"b", 0}}));
  EXPECT_EQ(ids, order);
  // The scores format doubles as a label file through its predicted column.
  EXPECT_EQ(load_labels(dir / "s.tsv"), (LabelMap{{"a", 1}, {"b", 0}}));
}

TEST(StageParsing, UnitsAndSplits) {
  EXPECT_EQ(parse_document_unit("segment"), DocumentUnit::segment);
  EXPECT_THROW(parse_document_unit("episode"), UsageError);
  EXPECT_EQ(parse_split("test"), Split::test);
  EXPECT_THROW(parse_split("dev"), ParseError);
  EXPECT_EQ(segment_doc_id("ep001_02", 7), "ep001_02.s007");
}

TEST(PipelineConfig, MissingFieldsAndUnknownKeys) {
  TempDir dir;
  write_text_file(dir / "c.tsv", "work_dir\tw\nseed\t3\n");
  try {
    load_pipeline_config(dir / "c.tsv");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("missing field: corpus"), std::string::npos);
  }
  write_text_file(dir / "d.tsv", "corpus\tx.manifest\nwork_dir\tw\nseed\t3\nflavour\tmint\n");
  EXPECT_THROW(load_pipeline_config(dir / "d.tsv"), UsageError);
  write_text_file(dir / "e.tsv", "corpus\tx.manifest\nwork_dir\tw\nseed\t3\nsystems\ttext, metadata\n");
  const auto c = load_pipeline_config(dir / "e.tsv");
  EXPECT_EQ(c.corpus, dir.path() / "x.manifest");
  EXPECT_EQ(c.systems, (std::vector<std::string>{"text", "metadata"}));
  write_text_file(dir / "f.tsv", "corpus\tx\nwork_dir\tw\nseed\t3\nsystems\tvideo\n");
  EXPECT_THROW(load_pipeline_config(dir / "f.tsv"), UsageError);
}

TEST(Pipeline, SmallEndToEndRunIsReproducible) {
  TempDir dir;
  SynthSpec spec;
  spec.genres = 2;
  spec.shows = 4;
  spec.episodes_per_show = 4;
  spec.topics = 4;
  spec.acoustic_vocab = 16;
  spec.text_vocab = 40;
  spec.feature_dim = 3;
  spec.segments_per_show = 4;
  spec.tokens_per_segment = 20;
  PipelineConfig config;
  config.corpus = generate_synthetic_corpus(spec, dir / "corpus");
  config.seed = 5;
  config.gmm_components = 16;
  config.acoustic_k = 4;
  config.text_k = 4;
  config.fusion_folds = 3;
  config.systems = {"acoustic", "text", "metadata"};
  config.work_dir = dir / "run1";
  const auto first = run_pipeline(config);
  config.work_dir = dir / "run2";
  const auto second = run_pipeline(config);

  // Three systems plus the fused one, on both axes.
  ASSERT_EQ(first.size(), 8u);
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_EQ(first[i].accuracy, second[i].accuracy);
    EXPECT_EQ(read_file_bytes(first[i].report), read_file_bytes(second[i].report));
    EXPECT_GE(first[i].accuracy, 0.0);
    EXPECT_LE(first[i].accuracy, 1.0);
  }
  for (const char* artifact : {"acoustic/gmm.archive", "acoustic/lda.archive", "acoustic/gammas.tsv",
                               "text/vocab.tsv", "text/features.tsv", "systems/text/genre/svm.archive",
                               "systems/metadata/show/scores_cv.tsv", "fusion/genre/fusion.archive",
                               "reports/summary.tsv"})
    EXPECT_TRUE(fs::exists(dir / "run1" / artifact)) << artifact;
}

TEST(Pipeline, StageErrorsNameTheStage) {
  TempDir dir;
  PipelineConfig config;
  config.corpus = dir / "absent.manifest";
  config.work_dir = dir / "w";
  try {
    run_pipeline(config);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("stage load-corpus"), std::string::npos);
  }
}
