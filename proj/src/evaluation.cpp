#include "signet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

namespace signet {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void append_csv_row(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    out += '\n';
}

}  // namespace

Tensor model_scores(Model& model, const SignalDataset& ds,
                    const std::vector<std::size_t>& indices, std::size_t batch_size) {
    if (batch_size == 0) throw ContractError("model_scores: batch_size must be positive");
    if (indices.empty()) throw DegenerateInputError("model_scores: no samples requested");
    const std::size_t n = indices.size();
    const std::size_t classes = model.config().num_classes;
    Tensor scores({n, classes});
    for (std::size_t at = 0; at < n; at += batch_size) {
        const std::size_t count = std::min(batch_size, n - at);
        std::vector<std::size_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(at),
                                       indices.begin() + static_cast<std::ptrdiff_t>(at + count));
        Tape tape;
        ForwardResult fwd = model.forward(tape, model.assemble_input(ds, chunk), NormMode::Eval);
        const Tensor probs = softmax_rows(tape.value(fwd.logits));
        std::copy(probs.data(), probs.data() + probs.size(), scores.data() + at * classes);
    }
    return scores;
}

std::vector<int> argmax_labels(const Tensor& scores) {
    if (scores.rank() != 2) {
        throw ShapeError("argmax_labels: expected [n x classes], got " + scores.shape_str());
    }
    const std::size_t n = scores.dim(0);
    const std::size_t c = scores.dim(1);
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (scores.at(i, j) > scores.at(i, best)) best = j;
        }
        out[i] = static_cast<int>(best);
    }
    return out;
}

double macro_recall(const Tensor& confusion) {
    const std::size_t c = confusion.dim(0);
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        double row = 0.0;
        for (std::size_t j = 0; j < c; ++j) row += confusion.at(k, j);
        total += row > 0.0 ? confusion.at(k, k) / row : 0.0;
    }
    return total / static_cast<double>(c);
}

double macro_f1(const Tensor& confusion) {
    const std::size_t c = confusion.dim(0);
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        double row = 0.0, col = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            row += confusion.at(k, j);
            col += confusion.at(j, k);
        }
        const double tp = confusion.at(k, k);
        const double precision = col > 0.0 ? tp / col : 0.0;
        const double recall = row > 0.0 ? tp / row : 0.0;
        total += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    return total / static_cast<double>(c);
}

AucResult roc_auc_ovr(const Tensor& scores, const std::vector<int>& labels) {
    if (scores.rank() != 2 || scores.dim(0) != labels.size()) {
        throw ShapeError("roc_auc_ovr: scores " + scores.shape_str() + " do not match " +
                         std::to_string(labels.size()) + " labels");
    }
    const std::size_t n = scores.dim(0);
    const std::size_t classes = scores.dim(1);
    AucResult result;
    result.per_class.assign(classes, std::numeric_limits<double>::quiet_NaN());

    std::vector<std::size_t> order(n);
    double macro_sum = 0.0;
    std::size_t included = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        std::size_t positives = 0;
        for (int label : labels) positives += label == static_cast<int>(c) ? 1 : 0;
        const std::size_t negatives = n - positives;
        if (positives == 0 || negatives == 0) {
            std::fprintf(stderr,
                         "warning: class %zu has no %s samples, excluded from AUC\n", c,
                         positives == 0 ? "positive" : "negative");
            result.excluded.push_back(static_cast<int>(c));
            continue;
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return scores.at(a, c) < scores.at(b, c);
        });
        // midranks: tied scores all receive the mean of the ranks they span
        double positive_rank_sum = 0.0;
        std::size_t at = 0;
        while (at < n) {
            std::size_t end = at + 1;
            while (end < n && scores.at(order[end], c) == scores.at(order[at], c)) ++end;
            const double midrank = 0.5 * static_cast<double>(at + 1 + end);  // 1-based
            for (std::size_t r = at; r < end; ++r) {
                if (labels[order[r]] == static_cast<int>(c)) positive_rank_sum += midrank;
            }
            at = end;
        }
        const double p = static_cast<double>(positives);
        const double auc =
            (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
        result.per_class[c] = auc;
        macro_sum += auc;
        ++included;
    }
    result.macro = included > 0 ? macro_sum / static_cast<double>(included)
                                : std::numeric_limits<double>::quiet_NaN();
    return result;
}

Tensor normalize_rows(const Tensor& counts) {
    Tensor out = counts;
    const std::size_t rows = counts.dim(0);
    const std::size_t cols = counts.dim(1);
    for (std::size_t i = 0; i < rows; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < cols; ++j) total += counts.at(i, j);
        if (total == 0.0) continue;
        for (std::size_t j = 0; j < cols; ++j) out.at(i, j) = counts.at(i, j) / total;
    }
    return out;
}

EvalReport report_from_scores(const Tensor& scores, const std::vector<int>& labels,
                              const std::vector<int>& snrs, std::size_t num_classes) {
    if (labels.size() != snrs.size() || scores.dim(0) != labels.size()) {
        throw ShapeError("report_from_scores: scores, labels and snrs must align");
    }
    if (labels.empty()) throw DegenerateInputError("report_from_scores: no samples");
    for (int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
            throw ContractError("report_from_scores: label " + std::to_string(label) +
                                " outside [0, " + std::to_string(num_classes) + ")");
        }
    }

    EvalReport report;
    report.sample_count = labels.size();
    report.confusion = Tensor::zeros({num_classes, num_classes});

    const std::vector<int> predicted = argmax_labels(scores);
    std::map<int, std::pair<std::size_t, std::size_t>> by_snr;  // snr -> (correct, total)
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        report.confusion.at(static_cast<std::size_t>(labels[i]),
                            static_cast<std::size_t>(predicted[i])) += 1.0;
        auto& cell = by_snr[snrs[i]];
        cell.second += 1;
        if (predicted[i] == labels[i]) {
            ++correct;
            cell.first += 1;
        }
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
    for (const auto& [snr, cell] : by_snr) {
        report.per_snr.emplace_back(snr, static_cast<double>(cell.first) /
                                             static_cast<double>(cell.second));
    }
    report.macro_f1 = macro_f1(report.confusion);
    report.macro_recall = macro_recall(report.confusion);

    AucResult auc = roc_auc_ovr(scores, labels);
    report.per_class_auc = std::move(auc.per_class);
    report.macro_auc = auc.macro;
    report.auc_excluded = std::move(auc.excluded);
    return report;
}

EvalReport evaluate(Model& model, const SignalDataset& ds,
                    const std::vector<std::size_t>& indices, std::size_t batch_size) {
    const Tensor scores = model_scores(model, ds, indices, batch_size);
    std::vector<int> labels, snrs;
    labels.reserve(indices.size());
    snrs.reserve(indices.size());
    for (std::size_t idx : indices) {
        labels.push_back(ds.samples.at(idx).label);
        snrs.push_back(ds.samples.at(idx).snr_db);
    }
    return report_from_scores(scores, labels, snrs, model.config().num_classes);
}

std::string report_text(const EvalReport& report, const std::vector<std::string>& class_names) {
    const std::size_t classes = report.confusion.dim(0);
    if (class_names.size() != classes) {
        throw ContractError("report_text: " + std::to_string(class_names.size()) +
                            " class names for " + std::to_string(classes) + " classes");
    }
    std::string out;
    out += "sample_count=" + std::to_string(report.sample_count) + '\n';
    out += "accuracy=" + fmt(report.accuracy) + '\n';
    out += "macro_f1=" + fmt(report.macro_f1) + '\n';
    out += "macro_recall=" + fmt(report.macro_recall) + '\n';
    out += "macro_auc=" + fmt(report.macro_auc) + '\n';
    out += "auc_excluded=";
    for (std::size_t i = 0; i < report.auc_excluded.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(report.auc_excluded[i]);
    }
    out += '\n';

    out += "[per_snr]\nsnr,accuracy\n";
    for (const auto& [snr, acc] : report.per_snr) {
        append_csv_row(out, {std::to_string(snr), fmt(acc)});
    }

    out += "[per_class_auc]\nclass,name,auc\n";
    for (std::size_t c = 0; c < classes; ++c) {
        append_csv_row(out, {std::to_string(c), class_names[c], fmt(report.per_class_auc[c])});
    }

    out += "[confusion]\n";
    for (std::size_t i = 0; i < classes; ++i) {
        std::vector<std::string> row;
        for (std::size_t j = 0; j < classes; ++j) {
            row.push_back(std::to_string(
                static_cast<long long>(std::llround(report.confusion.at(i, j)))));
        }
        append_csv_row(out, row);
    }

    const Tensor norm = normalize_rows(report.confusion);
    out += "[confusion_row_normalized]\n";
    for (std::size_t i = 0; i < classes; ++i) {
        std::vector<std::string> row;
        for (std::size_t j = 0; j < classes; ++j) row.push_back(fmt(norm.at(i, j)));
        append_csv_row(out, row);
    }
    return out;
}

void write_report(const EvalReport& report, const std::vector<std::string>& class_names,
                  const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ContainerError(ContainerError::Fault::Io, "cannot open '" + path + "'");
    out << report_text(report, class_names);
    if (!out) throw ContainerError(ContainerError::Fault::Io, "short write to '" + path + "'");
}

void export_features(Model& model, const SignalDataset& ds,
                     const std::vector<std::size_t>& indices, const std::string& path,
                     std::size_t batch_size) {
    if (batch_size == 0) throw ContractError("export_features: batch_size must be positive");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ContainerError(ContainerError::Fault::Io, "cannot open '" + path + "'");

    out << "index,label,snr";
    for (std::size_t f = 0; f < model.feature_dim(); ++f) out << ",f" << f;
    out << '\n';

    const std::size_t n = indices.size();
    for (std::size_t at = 0; at < n; at += batch_size) {
        const std::size_t count = std::min(batch_size, n - at);
        std::vector<std::size_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(at),
                                       indices.begin() + static_cast<std::ptrdiff_t>(at + count));
        Tape tape;
        ForwardResult fwd = model.forward(tape, model.assemble_input(ds, chunk), NormMode::Eval);
        const Tensor& features = tape.value(fwd.features);
        for (std::size_t r = 0; r < count; ++r) {
            const IQSample& sample = ds.samples.at(chunk[r]);
            out << chunk[r] << ',' << sample.label << ',' << sample.snr_db;
            for (std::size_t f = 0; f < features.dim(1); ++f) {
                out << ',' << fmt(features.at(r, f));
            }
            out << '\n';
        }
    }
    if (!out) throw ContainerError(ContainerError::Fault::Io, "short write to '" + path + "'");
}

}  // namespace signet
