#include "signet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include "signet/evaluation.hpp"
#include "signet/rng.hpp"

namespace signet {

namespace {

constexpr double kPi = 3.14159265358979323846;

// cell key: (label, snr index in the dataset grid)
std::map<std::pair<int, int>, std::vector<std::size_t>> group_cells(
    const SignalDataset& ds, const std::vector<std::size_t>& indices) {
    std::map<std::pair<int, int>, std::vector<std::size_t>> cells;
    for (std::size_t idx : indices) {
        const IQSample& s = ds.samples.at(idx);
        cells[{s.label, s.snr_db}].push_back(idx);
    }
    return cells;
}

std::string cell_name(const SignalDataset& ds, int label, int snr) {
    const std::string cls = label >= 0 && static_cast<std::size_t>(label) < ds.class_names.size()
                                ? ds.class_names[label]
                                : std::to_string(label);
    return cls + " at " + std::to_string(snr) + " dB";
}

}  // namespace

DatasetSplit split_dataset(const SignalDataset& ds, const SplitSpec& spec) {
    if (spec.train_frac <= 0.0 || spec.val_frac < 0.0 || spec.test_frac < 0.0) {
        throw ConfigError("split fractions must be positive (train) and non-negative");
    }
    if (spec.train_frac + spec.val_frac + spec.test_frac > 1.0 + 1e-9) {
        throw ConfigError("split fractions sum to more than 1");
    }
    if (ds.samples.empty()) throw DegenerateInputError("split_dataset: dataset is empty");

    std::vector<std::size_t> all(ds.samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto cells = group_cells(ds, all);

    // every grid cell must be populated, or stratification is impossible
    for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
        for (int snr : ds.snr_grid) {
            if (!cells.count({static_cast<int>(c), snr})) {
                throw DegenerateInputError("split_dataset: no samples for " +
                                           cell_name(ds, static_cast<int>(c), snr));
            }
        }
    }

    DatasetSplit split;
    for (auto& [key, members] : cells) {
        Rng rng = Rng::keyed(spec.seed, 0x73706c6974ULL, static_cast<std::uint64_t>(key.first),
                             static_cast<std::uint64_t>(static_cast<std::int64_t>(key.second)));
        rng.shuffle(members);
        const std::size_t total = members.size();
        // the epsilon keeps fractions meant as exact per-cell counts (say 67/334)
        // from flooring one short after rounding in the product
        const std::size_t n_train = static_cast<std::size_t>(
            std::floor(spec.train_frac * static_cast<double>(total) + 1e-9));
        const std::size_t n_val = static_cast<std::size_t>(
            std::floor(spec.val_frac * static_cast<double>(total) + 1e-9));
        if (n_train + n_val > total) {
            throw DegenerateInputError("split_dataset: cell " +
                                       cell_name(ds, key.first, key.second) +
                                       " is too small for the requested fractions");
        }
        const std::size_t n_test = spec.test_frac > 0.0 ? total - n_train - n_val : 0;
        if (n_train == 0 || (spec.val_frac > 0.0 && n_val == 0) ||
            (spec.test_frac > 0.0 && n_test == 0)) {
            throw DegenerateInputError("split_dataset: cell " +
                                       cell_name(ds, key.first, key.second) + " with " +
                                       std::to_string(total) +
                                       " samples cannot give every part at least one sample");
        }
        split.train.insert(split.train.end(), members.begin(), members.begin() + n_train);
        split.val.insert(split.val.end(), members.begin() + n_train,
                         members.begin() + n_train + n_val);
        split.test.insert(split.test.end(), members.begin() + n_train + n_val,
                          members.begin() + n_train + n_val + n_test);
    }
    return split;
}

std::vector<std::size_t> subsample_training(const SignalDataset& ds,
                                            const std::vector<std::size_t>& train, double eta,
                                            std::uint64_t seed) {
    if (eta <= 0.0) throw ConfigError("subsample_training: eta must be positive");
    if (eta == 1.0) return train;

    auto cells = group_cells(ds, train);
    std::vector<std::size_t> out;
    for (auto& [key, members] : cells) {
        const double target = eta <= 1.0 ? eta * static_cast<double>(members.size()) : eta;
        const auto keep = static_cast<long long>(std::llround(target));
        if (keep < 1) {
            throw ConfigError("subsample_training: eta " + std::to_string(eta) +
                              " leaves no samples for " + cell_name(ds, key.first, key.second));
        }
        if (static_cast<std::size_t>(keep) > members.size()) {
            throw ConfigError("subsample_training: " + std::to_string(keep) +
                              " samples requested from " + cell_name(ds, key.first, key.second) +
                              " which has only " + std::to_string(members.size()));
        }
        Rng rng = Rng::keyed(seed, 0x737562ULL, static_cast<std::uint64_t>(key.first),
                             static_cast<std::uint64_t>(static_cast<std::int64_t>(key.second)));
        rng.shuffle(members);
        out.insert(out.end(), members.begin(), members.begin() + keep);
    }
    return out;
}

double lr_at(std::size_t step, const LrSchedule& schedule) {
    if (schedule.total_steps == 0) throw ConfigError("lr schedule needs total_steps > 0");
    if (schedule.warmup_steps >= schedule.total_steps) {
        throw ConfigError("lr schedule warmup must be shorter than the total");
    }
    if (step >= schedule.total_steps) return 0.0;
    if (step < schedule.warmup_steps) {
        return schedule.initial * static_cast<double>(step) /
               static_cast<double>(schedule.warmup_steps);
    }
    if (step == schedule.warmup_steps) return schedule.initial;  // cos(0), kept exact
    const double progress = static_cast<double>(step - schedule.warmup_steps) /
                            static_cast<double>(schedule.total_steps - schedule.warmup_steps);
    return schedule.initial * 0.5 * (1.0 + std::cos(kPi * progress));
}

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "adagrad") return OptimizerKind::Adagrad;
    if (name == "adadelta") return OptimizerKind::Adadelta;
    throw ConfigError("unknown optimizer '" + name +
                      "' (expected sgd, adam, adagrad or adadelta)");
}

std::string optimizer_name(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::Sgd: return "sgd";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::Adagrad: return "adagrad";
        case OptimizerKind::Adadelta: return "adadelta";
    }
    throw ConfigError("unknown optimizer id");
}

void Optimizer::step(ParameterStore& params, const std::map<std::string, Tensor>& grads,
                     double lr) {
    for (const auto& [name, grad] : grads) {
        if (!grad.all_finite()) {
            throw DivergenceError("non-finite gradient for parameter '" + name + "'");
        }
        Tensor& p = params.at(name);
        Tensor::check_same_shape(p, grad, "optimizer step");

        if (cfg_.weight_decay != 0.0) {
            const double shrink = 1.0 - lr * cfg_.weight_decay;
            for (std::size_t i = 0; i < p.size(); ++i) p[i] *= shrink;
        }

        Slot& slot = slots_[name];
        switch (cfg_.kind) {
            case OptimizerKind::Sgd: {
                if (cfg_.momentum == 0.0) {
                    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * grad[i];
                    break;
                }
                if (slot.a.empty()) slot.a = Tensor::zeros(p.shape());
                for (std::size_t i = 0; i < p.size(); ++i) {
                    slot.a[i] = cfg_.momentum * slot.a[i] + grad[i];
                    p[i] -= lr * slot.a[i];
                }
                break;
            }
            case OptimizerKind::Adam: {
                if (slot.a.empty()) {
                    slot.a = Tensor::zeros(p.shape());
                    slot.b = Tensor::zeros(p.shape());
                }
                slot.t += 1;
                const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(slot.t));
                const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(slot.t));
                for (std::size_t i = 0; i < p.size(); ++i) {
                    slot.a[i] = cfg_.beta1 * slot.a[i] + (1.0 - cfg_.beta1) * grad[i];
                    slot.b[i] = cfg_.beta2 * slot.b[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
                    const double m_hat = slot.a[i] / c1;
                    const double v_hat = slot.b[i] / c2;
                    p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
                }
                break;
            }
            case OptimizerKind::Adagrad: {
                if (slot.a.empty()) slot.a = Tensor::zeros(p.shape());
                for (std::size_t i = 0; i < p.size(); ++i) {
                    slot.a[i] += grad[i] * grad[i];
                    p[i] -= lr * grad[i] / (std::sqrt(slot.a[i]) + cfg_.eps);
                }
                break;
            }
            case OptimizerKind::Adadelta: {
                if (slot.a.empty()) {
                    slot.a = Tensor::zeros(p.shape());
                    slot.b = Tensor::zeros(p.shape());
                }
                for (std::size_t i = 0; i < p.size(); ++i) {
                    slot.a[i] = cfg_.rho * slot.a[i] + (1.0 - cfg_.rho) * grad[i] * grad[i];
                    const double dx = -std::sqrt(slot.b[i] + cfg_.adadelta_eps) /
                                      std::sqrt(slot.a[i] + cfg_.adadelta_eps) * grad[i];
                    slot.b[i] = cfg_.rho * slot.b[i] + (1.0 - cfg_.rho) * dx * dx;
                    p[i] += lr * dx;
                }
                break;
            }
        }
    }
}

double clip_gradients(std::map<std::string, Tensor>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& kv : grads) {
        const Tensor& g = kv.second;
        for (std::size_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto& kv : grads) kv.second *= scale;
    }
    return norm;
}

std::size_t best_epoch_index(const std::vector<double>& val_accs) {
    if (val_accs.empty()) throw ContractError("best_epoch_index: no epochs");
    std::size_t best = 0;
    for (std::size_t i = 1; i < val_accs.size(); ++i) {
        if (val_accs[i] > val_accs[best]) best = i;
    }
    return best;
}

namespace {

struct Snapshot {
    ParameterStore params;
    std::map<std::string, BatchNormState> norms;
};

double validation_accuracy(Model& model, const SignalDataset& ds,
                           const std::vector<std::size_t>& val_idx, std::size_t batch_size) {
    const Tensor scores = model_scores(model, ds, val_idx, batch_size);
    const std::vector<int> predicted = argmax_labels(scores);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < val_idx.size(); ++i) {
        correct += predicted[i] == ds.samples[val_idx[i]].label ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(val_idx.size());
}

void write_metrics_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ContainerError(ContainerError::Fault::Io, "cannot open '" + path + "'");
    out << "epoch,train_loss,train_acc,val_acc,lr,seconds\n";
    char buf[160];
    for (const EpochStats& e : history) {
        std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g,%.12g,%.12g,%.3f\n", e.epoch,
                      e.train_loss, e.train_acc, e.val_acc, e.lr, e.seconds);
        out << buf;
    }
}

void write_summary(const std::string& path, const TrainResult& result) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ContainerError(ContainerError::Fault::Io, "cannot open '" + path + "'");
    out << "epochs_run=" << result.history.size() << '\n';
    out << "steps=" << result.steps_taken << '\n';
    out << "best_epoch=" << result.best_epoch << '\n';
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", result.best_val_acc);
    out << "best_val_acc=" << buf << '\n';
    out << "diverged=" << (result.diverged ? 1 : 0) << '\n';
    if (result.diverged) out << "divergence_message=" << result.divergence_message << '\n';
}

}  // namespace

TrainResult train(Model& model, const SignalDataset& ds,
                  const std::vector<std::size_t>& train_idx,
                  const std::vector<std::size_t>& val_idx, const TrainConfig& cfg,
                  const std::string& run_dir) {
    if (cfg.batch_size == 0) throw ConfigError("train: batch_size must be positive");
    if (cfg.epochs == 0) throw ConfigError("train: epochs must be positive");
    if (train_idx.empty()) throw DegenerateInputError("train: no training samples");
    if (val_idx.empty()) throw DegenerateInputError("train: no validation samples");

    const std::size_t steps_per_epoch = (train_idx.size() + cfg.batch_size - 1) / cfg.batch_size;
    LrSchedule schedule;
    schedule.initial = cfg.initial_lr;
    schedule.total_steps = cfg.epochs * steps_per_epoch;
    schedule.warmup_steps =
        cfg.warmup_steps != TrainConfig::kDeriveWarmup
            ? cfg.warmup_steps
            : static_cast<std::size_t>(
                  std::llround(cfg.warmup_frac * static_cast<double>(schedule.total_steps)));
    if (schedule.warmup_steps >= schedule.total_steps) schedule.warmup_steps = 0;

    if (!run_dir.empty()) std::filesystem::create_directories(run_dir);

    Optimizer optimizer(cfg.optimizer);
    TrainResult result;
    Snapshot best{model.params(), model.norm_states()};

    std::vector<std::size_t> order = train_idx;
    for (std::size_t epoch = 1; epoch <= cfg.epochs && !result.diverged; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        Rng rng = Rng::keyed(cfg.seed, 0x65706f6368ULL, epoch);
        rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        double last_lr = 0.0;
        for (std::size_t at = 0; at < order.size() && !result.diverged; at += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - at);
            std::vector<std::size_t> chunk(order.begin() + static_cast<std::ptrdiff_t>(at),
                                           order.begin() +
                                               static_cast<std::ptrdiff_t>(at + count));
            std::vector<int> labels;
            labels.reserve(count);
            for (std::size_t idx : chunk) labels.push_back(ds.samples[idx].label);

            Tape tape;
            ForwardResult fwd = model.forward(tape, model.assemble_input(ds, chunk),
                                              NormMode::Train);
            Var loss = softmax_cross_entropy(fwd.logits, labels);
            const double loss_value = tape.value(loss)[0];
            if (!std::isfinite(loss_value)) {
                result.diverged = true;
                result.divergence_message =
                    "loss became non-finite at step " + std::to_string(result.steps_taken + 1);
                break;
            }

            const std::vector<int> predicted = argmax_labels(tape.value(fwd.logits));
            for (std::size_t i = 0; i < count; ++i) {
                correct += predicted[i] == labels[i] ? 1 : 0;
            }
            loss_sum += loss_value * static_cast<double>(count);

            tape.backward(loss);
            std::map<std::string, Tensor> grads;
            auto by_id = tape.parameter_gradients();
            for (const auto& [name, var] : fwd.params) grads[name] = std::move(by_id.at(var.id));
            if (cfg.clip_norm > 0.0) clip_gradients(grads, cfg.clip_norm);

            last_lr = lr_at(result.steps_taken, schedule);
            try {
                optimizer.step(model.params(), grads, last_lr);
            } catch (const DivergenceError& e) {
                result.diverged = true;
                result.divergence_message = e.what();
                break;
            }
            result.steps_taken += 1;
        }
        if (result.diverged) break;

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(order.size());
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
        stats.val_acc = validation_accuracy(model, ds, val_idx, cfg.eval_batch_size);
        stats.lr = last_lr;
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
                .count();
        result.history.push_back(stats);

        if (result.best_epoch == 0 || stats.val_acc > result.best_val_acc) {
            result.best_epoch = epoch;
            result.best_val_acc = stats.val_acc;
            best = Snapshot{model.params(), model.norm_states()};
        }
        if (stats.val_acc >= cfg.early_stop_val_acc) break;
    }

    // hand the caller the best-epoch weights (or the initial ones if nothing completed)
    model.params() = best.params;
    model.norm_states() = best.norms;

    if (!run_dir.empty()) {
        const std::filesystem::path dir(run_dir);
        write_metrics_csv((dir / "metrics.csv").string(), result.history);
        save_checkpoint(model, (dir / "best.sgck").string());
        write_summary((dir / "summary.txt").string(), result);
    }
    return result;
}

}  // namespace signet
