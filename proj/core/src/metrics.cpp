#include "recnn/metrics.hpp"

#include <cstdio>
#include <iostream>

#include "recnn/error.hpp"

namespace recnn {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw ValidationError("confusion matrix needs at least one class");
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::size_t ConfusionMatrix::row_total(std::size_t c) const {
  std::size_t t = 0;
  for (std::size_t j = 0; j < classes_; ++j) t += (*this)(c, j);
  return t;
}

std::size_t ConfusionMatrix::column_total(std::size_t c) const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < classes_; ++i) t += (*this)(i, c);
  return t;
}

void ConfusionMatrix::add(std::size_t reference, std::size_t predicted, std::size_t count) {
  if (reference >= classes_ || predicted >= classes_) {
    throw ValidationError("label pair (" + std::to_string(reference) + ", " +
                          std::to_string(predicted) + ") outside " + std::to_string(classes_) +
                          " classes");
  }
  counts_[reference * classes_ + predicted] += count;
}

void ConfusionMatrix::accumulate(std::span<const std::size_t> reference,
                                 std::span<const std::size_t> predicted) {
  if (reference.size() != predicted.size()) {
    throw DimensionError(std::to_string(reference.size()) + " reference labels but " +
                         std::to_string(predicted.size()) + " predictions");
  }
  for (std::size_t i = 0; i < reference.size(); ++i) add(reference[i], predicted[i]);
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw DimensionError("merging confusion matrices of different size");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::size_t>>& rows) {
  ConfusionMatrix cm(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw DimensionError("confusion matrix must be square");
    for (std::size_t j = 0; j < rows.size(); ++j) cm.add(i, j, rows[i][j]);
  }
  return cm;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw ValidationError("overall accuracy of an empty confusion matrix");
  std::size_t diag = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) diag += cm(c, c);
  return static_cast<double>(diag) / static_cast<double>(total);
}

double kappa(const ConfusionMatrix& cm) {
  const double po = overall_accuracy(cm);
  const double total = static_cast<double>(cm.total());
  double pe = 0.0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    pe += static_cast<double>(cm.row_total(c)) * static_cast<double>(cm.column_total(c));
  }
  pe /= total * total;
  if (pe >= 1.0) {
    std::cerr << "warning: chance agreement is 1 (single class); kappa reported as 0\n";
    return 0.0;
  }
  return (po - pe) / (1.0 - pe);
}

std::vector<std::optional<double>> per_class_accuracy(const ConfusionMatrix& cm) {
  std::vector<std::optional<double>> out(cm.classes());
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const std::size_t row = cm.row_total(c);
    if (row) out[c] = static_cast<double>(cm(c, c)) / static_cast<double>(row);
  }
  return out;
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::vector<std::string> default_class_names(std::size_t classes) {
  if (classes == 2) return {"unchanged", "changed"};
  std::vector<std::string> names;
  for (std::size_t c = 0; c < classes; ++c) names.push_back("class_" + std::to_string(c));
  return names;
}

void write_metrics_csv(std::ostream& out, const ConfusionMatrix& cm,
                       const std::vector<std::string>& class_names) {
  if (class_names.size() != cm.classes()) {
    throw DimensionError("need one name per class");
  }
  out << "metric,value\n";
  const auto acc = per_class_accuracy(cm);
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    out << "accuracy_" << class_names[c] << ',' << (acc[c] ? fixed6(*acc[c]) : "NA") << '\n';
  }
  out << "overall_accuracy," << fixed6(overall_accuracy(cm)) << '\n';
  out << "kappa," << fixed6(kappa(cm)) << '\n';
  out << "samples," << cm.total() << '\n';
}

}  // namespace recnn
