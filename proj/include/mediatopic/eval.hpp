#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mediatopic/errors.hpp"
#include "mediatopic/tsv.hpp"

namespace mediatopic {

inline double accuracy(std::span<const std::size_t> predictions,
                       std::span<const std::size_t> truths) {
  if (predictions.size() != truths.size())
    throw DimensionError("prediction and truth lists differ in length");
  if (truths.empty()) throw ArgumentError("accuracy of an empty list");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) correct += predictions[i] == truths[i];
  return static_cast<double>(correct) / static_cast<double>(truths.size());
}

// counts[truth][prediction]
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

inline ConfusionMatrix confusion(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> truths, std::size_t num_classes) {
  if (predictions.size() != truths.size())
    throw DimensionError("prediction and truth lists differ in length");
  if (truths.empty()) throw ArgumentError("confusion matrix of an empty list");
  ConfusionMatrix m(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] >= num_classes || predictions[i] >= num_classes)
      throw ArgumentError(fmt::format("label outside {} classes at position {}", num_classes, i));
    ++m[truths[i]][predictions[i]];
  }
  return m;
}

struct EvalReport {
  std::string axis;
  std::string system;
  std::vector<std::string> class_names;
  double accuracy = 0.0;
  std::vector<double> precision;  // 0 for classes never predicted
  std::vector<double> recall;     // 0 for classes absent from the truth
  ConfusionMatrix confusion;
  std::size_t total = 0;
};

inline EvalReport make_report(std::span<const std::size_t> predictions,
                              std::span<const std::size_t> truths,
                              std::vector<std::string> class_names, std::string axis,
                              std::string system) {
  EvalReport r;
  r.axis = std::move(axis);
  r.system = std::move(system);
  const std::size_t n = class_names.size();
  r.class_names = std::move(class_names);
  r.accuracy = accuracy(predictions, truths);
  r.confusion = confusion(predictions, truths, n);
  r.total = truths.size();
  r.precision.assign(n, 0.0);
  r.recall.assign(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < n; ++j) {
      row += r.confusion[c][j];
      col += r.confusion[j][c];
    }
    if (col) r.precision[c] = static_cast<double>(r.confusion[c][c]) / static_cast<double>(col);
    if (row) r.recall[c] = static_cast<double>(r.confusion[c][c]) / static_cast<double>(row);
  }
  return r;
}

// TSV body followed by a '#'-prefixed human-readable summary block.
inline std::string format_report(const EvalReport& r) {
  std::string out;
  out += fmt::format("axis\t{}\nsystem\t{}\naccuracy\t{}\ntotal\t{}\n", r.axis, r.system,
                     format_double(r.accuracy), r.total);
  out += "class\tprecision\trecall\tconfusion_row\n";
  for (std::size_t c = 0; c < r.class_names.size(); ++c) {
    std::string row;
    for (std::size_t j = 0; j < r.confusion[c].size(); ++j)
      row += (j ? "," : "") + std::to_string(r.confusion[c][j]);
    out += fmt::format("{}\t{}\t{}\t{}\n", r.class_names[c], format_double(r.precision[c]),
                       format_double(r.recall[c]), row);
  }
  std::size_t correct = 0;
  for (std::size_t c = 0; c < r.confusion.size(); ++c) correct += r.confusion[c][c];
  out += fmt::format("# {} ID, {} system: {:.2f}% accuracy ({} of {} correct)\n", r.axis,
                     r.system, 100.0 * r.accuracy, correct, r.total);
  return out;
}

inline void save_report(const std::filesystem::path& path, const EvalReport& r) {
  write_text_file(path, format_report(r));
}

}  // namespace mediatopic
