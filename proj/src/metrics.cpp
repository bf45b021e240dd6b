#include "geocnn/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "geocnn/errors.hpp"

namespace geocnn {
namespace {

double safe_ratio(double num, double den, bool& zero_division) {
  if (den == 0.0) {
    zero_division = true;
    return 0.0;
  }
  return num / den;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
  return n;
}

ConfusionMatrix confusion_matrix(const std::vector<std::size_t>& y_true,
                                 const std::vector<std::size_t>& y_pred, std::size_t num_classes) {
  if (y_true.size() != y_pred.size()) {
    throw ShapeError("confusion matrix: " + std::to_string(y_true.size()) + " labels vs " +
                     std::to_string(y_pred.size()) + " predictions");
  }
  if (num_classes == 0) throw ShapeError("confusion matrix needs at least one class");
  ConfusionMatrix cm;
  cm.counts.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] >= num_classes || y_pred[i] >= num_classes) {
      throw ShapeError("class id out of range at position " + std::to_string(i));
    }
    cm.counts[y_true[i]][y_pred[i]]++;
  }
  return cm;
}

double accuracy_percent(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw ShapeError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total) * 100.0;
}

double accuracy_binary(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
  const std::size_t total = tp + tn + fp + fn;
  if (total == 0) throw ShapeError("accuracy of zero samples");
  return static_cast<double>(tp + tn) / static_cast<double>(total) * 100.0;
}

ClassificationReport classification_report(const ConfusionMatrix& cm,
                                           const std::vector<std::string>& class_names) {
  const std::size_t k = cm.classes();
  if (class_names.size() != k) {
    throw ShapeError("report: " + std::to_string(class_names.size()) + " names for " +
                     std::to_string(k) + " classes");
  }
  ClassificationReport rep;
  rep.total = cm.total();
  rep.accuracy = rep.total ? static_cast<double>(cm.trace()) / static_cast<double>(rep.total) : 0.0;
  rep.macro_avg.name = "macro_avg";
  rep.weighted_avg.name = "weighted_avg";
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0, support = 0;
    for (std::size_t j = 0; j < k; ++j) {
      predicted += cm.counts[j][c];
      support += cm.counts[c][j];
    }
    const double tp = static_cast<double>(cm.counts[c][c]);
    ClassScores s;
    s.name = class_names[c];
    s.support = support;
    s.precision = safe_ratio(tp, static_cast<double>(predicted), rep.zero_division);
    s.recall = safe_ratio(tp, static_cast<double>(support), rep.zero_division);
    s.f1 = safe_ratio(2.0 * s.precision * s.recall, s.precision + s.recall, rep.zero_division);
    rep.classes.push_back(s);

    const double w = static_cast<double>(support);
    rep.macro_avg.precision += s.precision / static_cast<double>(k);
    rep.macro_avg.recall += s.recall / static_cast<double>(k);
    rep.macro_avg.f1 += s.f1 / static_cast<double>(k);
    rep.weighted_avg.precision += s.precision * w;
    rep.weighted_avg.recall += s.recall * w;
    rep.weighted_avg.f1 += s.f1 * w;
  }
  rep.macro_avg.support = rep.weighted_avg.support = rep.total;
  if (rep.total > 0) {
    const double t = static_cast<double>(rep.total);
    rep.weighted_avg.precision /= t;
    rep.weighted_avg.recall /= t;
    rep.weighted_avg.f1 /= t;
  }
  return rep;
}

std::string report_to_csv(const ClassificationReport& report) {
  std::string out = "class,precision,recall,f1,support\n";
  auto row = [&](const ClassScores& s) {
    out += s.name + "," + fmt("%.6f", s.precision) + "," + fmt("%.6f", s.recall) + "," +
           fmt("%.6f", s.f1) + "," + std::to_string(s.support) + "\n";
  };
  for (const auto& s : report.classes) row(s);
  out += "accuracy,,," + fmt("%.6f", report.accuracy) + "," + std::to_string(report.total) + "\n";
  row(report.macro_avg);
  row(report.weighted_avg);
  return out;
}

std::string report_to_text(const ClassificationReport& report) {
  std::size_t width = 12;
  for (const auto& s : report.classes) width = std::max(width, s.name.size());
  char buf[256];
  std::string out;
  const int w = static_cast<int>(width);
  std::snprintf(buf, sizeof buf, "%*s %9s %9s %9s %9s\n\n", w, "", "precision", "recall",
                "f1-score", "support");
  out += buf;
  auto row = [&](const ClassScores& s) {
    std::snprintf(buf, sizeof buf, "%*s %9.2f %9.2f %9.2f %9zu\n", w, s.name.c_str(), s.precision,
                  s.recall, s.f1, s.support);
    out += buf;
  };
  for (const auto& s : report.classes) row(s);
  out += "\n";
  std::snprintf(buf, sizeof buf, "%*s %9s %9s %9.2f %9zu\n", w, "accuracy", "", "",
                report.accuracy, report.total);
  out += buf;
  ClassScores macro = report.macro_avg, weighted = report.weighted_avg;
  macro.name = "macro avg";
  weighted.name = "weighted avg";
  row(macro);
  row(weighted);
  if (report.zero_division) {
    out += "\n* some scores were 0/0 (class never predicted or absent) and are reported as 0\n";
  }
  return out;
}

std::string confusion_to_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names) {
  if (class_names.size() != cm.classes()) throw ShapeError("confusion csv: name count mismatch");
  std::string out = "true\\pred";
  for (const auto& n : class_names) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    out += class_names[i];
    for (std::size_t v : cm.counts[i]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

}  // namespace geocnn
