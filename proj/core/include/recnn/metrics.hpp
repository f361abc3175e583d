#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace recnn {

/// Rows are reference classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);

  std::size_t classes() const { return classes_; }
  std::size_t operator()(std::size_t reference, std::size_t predicted) const {
    return counts_[reference * classes_ + predicted];
  }
  std::size_t total() const;
  std::size_t row_total(std::size_t c) const;
  std::size_t column_total(std::size_t c) const;

  void add(std::size_t reference, std::size_t predicted, std::size_t count = 1);
  void accumulate(std::span<const std::size_t> reference, std::span<const std::size_t> predicted);
  void merge(const ConfusionMatrix& other);

  static ConfusionMatrix from_rows(const std::vector<std::vector<std::size_t>>& rows);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

double overall_accuracy(const ConfusionMatrix& cm);
/// Cohen's kappa; 0 (with a warning on stderr) when chance agreement is 1.
double kappa(const ConfusionMatrix& cm);
/// Diagonal over row total; nothing for classes absent from the reference.
std::vector<std::optional<double>> per_class_accuracy(const ConfusionMatrix& cm);

/// CSV: metric,value rows (per-class accuracy named by `class_names`,
/// then overall_accuracy, kappa, samples) with 6 decimals and NA for
/// undefined values.
void write_metrics_csv(std::ostream& out, const ConfusionMatrix& cm,
                       const std::vector<std::string>& class_names);
std::vector<std::string> default_class_names(std::size_t classes);

}  // namespace recnn
