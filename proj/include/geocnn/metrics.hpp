#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace geocnn {

// counts[t][p]: items of true class t predicted as class p.
struct ConfusionMatrix {
  std::vector<std::vector<std::size_t>> counts;

  std::size_t classes() const { return counts.size(); }
  std::size_t total() const;
  std::size_t trace() const;
};

ConfusionMatrix confusion_matrix(const std::vector<std::size_t>& y_true,
                                 const std::vector<std::size_t>& y_pred, std::size_t num_classes);

// trace / total * 100.
double accuracy_percent(const ConfusionMatrix& cm);
// (tp + tn) / (tp + tn + fp + fn) * 100.
double accuracy_binary(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn);

struct ClassScores {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassificationReport {
  std::vector<ClassScores> classes;
  ClassScores macro_avg;
  ClassScores weighted_avg;
  double accuracy = 0.0;  // fraction
  std::size_t total = 0;
  // Set when some precision/recall/f1 was 0/0 and reported as 0.
  bool zero_division = false;
};

ClassificationReport classification_report(const ConfusionMatrix& cm,
                                           const std::vector<std::string>& class_names);

// class,precision,recall,f1,support rows plus accuracy / macro_avg /
// weighted_avg rows; rates with 6 decimals.
std::string report_to_csv(const ClassificationReport& report);
// Fixed-width table with 2 decimals.
std::string report_to_text(const ClassificationReport& report);
// Header "true\pred,<names>", one row per true class.
std::string confusion_to_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names);

}  // namespace geocnn
