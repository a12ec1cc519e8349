#pragma once

// Classifier quality measurement: accuracy, confusion, per-SNR breakdown, macro
// F1/recall, one-vs-rest ROC AUC, deterministic text reports, and feature export.

#include <cstddef>
#include <string>
#include <vector>

#include "signet/dataset.hpp"
#include "signet/models.hpp"
#include "signet/tensor.hpp"

namespace signet {

struct EvalReport {
    std::size_t sample_count = 0;
    double accuracy = 0.0;
    Tensor confusion;  // C x C counts; row = true class, column = predicted
    std::vector<std::pair<int, double>> per_snr;  // (snr_db, accuracy), ascending snr
    double macro_f1 = 0.0;
    double macro_recall = 0.0;
    std::vector<double> per_class_auc;  // NaN for classes excluded from AUC
    double macro_auc = 0.0;
    std::vector<int> auc_excluded;  // class indices lacking positives or negatives
};

// Softmax class scores, one row per index, computed in eval mode.
Tensor model_scores(Model& model, const SignalDataset& ds,
                    const std::vector<std::size_t>& indices, std::size_t batch_size = 64);

// Row-wise argmax; ties resolve to the lowest class index.
std::vector<int> argmax_labels(const Tensor& scores);

// Report assembly from plain score rows (testable without a model).
EvalReport report_from_scores(const Tensor& scores, const std::vector<int>& labels,
                              const std::vector<int>& snrs, std::size_t num_classes);

EvalReport evaluate(Model& model, const SignalDataset& ds,
                    const std::vector<std::size_t>& indices, std::size_t batch_size = 64);

// Macro-averaged scores over a confusion matrix of counts. A class whose
// precision + recall is zero contributes an F1 of zero.
double macro_f1(const Tensor& confusion);
double macro_recall(const Tensor& confusion);

struct AucResult {
    std::vector<double> per_class;  // NaN where excluded
    double macro = 0.0;             // mean over included classes
    std::vector<int> excluded;
};

// One-vs-rest ROC AUC via the rank-sum statistic with midranks for ties, so
// any strictly monotone transform of the scores leaves every value unchanged.
// Classes without both a positive and a negative sample are excluded (warning
// on stderr).
AucResult roc_auc_ovr(const Tensor& scores, const std::vector<int>& labels);

// Confusion matrix with each row scaled to sum to 1; all-zero rows stay zero.
Tensor normalize_rows(const Tensor& counts);

// Deterministic text serialization: key=value header plus CSV blocks. Equal
// reports render to byte-identical strings.
std::string report_text(const EvalReport& report, const std::vector<std::string>& class_names);

void write_report(const EvalReport& report, const std::vector<std::string>& class_names,
                  const std::string& path);

// Penultimate-layer activations as CSV (index, label, snr, f0..fD-1) with 12
// significant digits per value.
void export_features(Model& model, const SignalDataset& ds,
                     const std::vector<std::size_t>& indices, const std::string& path,
                     std::size_t batch_size = 64);

}  // namespace signet
