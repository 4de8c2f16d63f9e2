#include <random>

#include <gtest/gtest.h>

#include "mediatopic/baseline.hpp"
#include "mediatopic/binary_io.hpp"
#include "mediatopic/eval.hpp"
#include "test_support.hpp"

using namespace mediatopic;
using V = std::vector<std::size_t>;

TEST(Accuracy, Examples) {
  EXPECT_EQ(accuracy(V{0, 1, 2}, V{0, 1, 2}), 1.0);
  EXPECT_EQ(accuracy(V{0, 1, 0, 1}, V{0, 1, 1, 0}), 0.5);
  EXPECT_EQ(accuracy(V{1, 0}, V{0, 1}), 0.0);
  EXPECT_THROW(accuracy(V{}, V{}), ArgumentError);
  EXPECT_THROW(accuracy(V{0}, V{0, 1}), DimensionError);
}

TEST(Confusion, Examples) {
  const auto perfect = confusion(V{0, 1, 1, 2}, V{0, 1, 1, 2}, 3);
  EXPECT_EQ(perfect, (ConfusionMatrix{{1, 0, 0}, {0, 2, 0}, {0, 0, 1}}));
  EXPECT_THROW(confusion(V{}, V{}, 2), ArgumentError);
  EXPECT_EQ(confusion(V{1}, V{0}, 2), (ConfusionMatrix{{0, 1}, {0, 0}}));
  EXPECT_THROW(confusion(V{2}, V{0}, 2), ArgumentError);
}

TEST(Confusion, TraceAndRowSumsAgreeWithAccuracy) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = 2 + trial % 6, n = 1 + trial % 40;
    std::uniform_int_distribution<std::size_t> d(0, c - 1);
    V p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = d(rng), t[i] = d(rng);
    const auto m = confusion(p, t, c);
    std::size_t trace = 0;
    for (std::size_t i = 0; i < c; ++i) {
      trace += m[i][i];
      std::size_t row = 0;
      for (auto v : m[i]) row += v;
      EXPECT_EQ(row, static_cast<std::size_t>(std::count(t.begin(), t.end(), i)));
    }
    EXPECT_DOUBLE_EQ(accuracy(p, t), static_cast<double>(trace) / static_cast<double>(n));
  }
}

TEST(MappedAccuracy, GenreAccuracyAtLeastShowAccuracy) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t shows = 2 + trial % 10, genres = 1 + trial % 4, n = 1 + trial % 30;
    std::uniform_int_distribution<std::size_t> sd(0, shows - 1), gd(0, genres - 1);
    V show_to_genre(shows);
    for (auto& g : show_to_genre) g = gd(rng);
    V pred(n), truth(n), genre_truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = sd(rng);
      pred[i] = rng() % 2 ? truth[i] : sd(rng);
      genre_truth[i] = show_to_genre[truth[i]];
    }
    EXPECT_GE(accuracy(map_show_to_genre(pred, show_to_genre), genre_truth), accuracy(pred, truth));
  }
}

TEST(Report, PrecisionRecallAndFormat) {
  const auto r = make_report(V{0, 1, 1, 1}, V{0, 1, 0, 1}, {"news", "drama", "comedy"}, "genre", "text");
  EXPECT_EQ(r.accuracy, 0.75);
  EXPECT_EQ(r.precision, (std::vector<double>{1.0, 2.0 / 3.0, 0.0}));
  EXPECT_EQ(r.recall, (std::vector<double>{0.5, 1.0, 0.0}));
  const auto text = format_report(r);
  EXPECT_NE(text.find("accuracy\t0.75\n"), std::string::npos);
  EXPECT_NE(text.find("news\t1\t0.5\t1,1,0\n"), std::string::npos);
  EXPECT_NE(text.find("# genre ID, text system: 75.00% accuracy (3 of 4 correct)"), std::string::npos);

  mediatopic::testing::TempDir dir;
  save_report(dir / "r.tsv", r);
  EXPECT_EQ(read_file_bytes(dir / "r.tsv"), text);
}
