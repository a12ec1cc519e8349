#pragma once

// Stratified splitting, per-cell subsampling, the warmup+cosine learning-rate
// schedule, first-order optimizers, and the training loop with best-epoch
// checkpointing.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "signet/dataset.hpp"
#include "signet/models.hpp"
#include "signet/tensor.hpp"

namespace signet {

// Fractions of every (class, snr) cell. Train and validation take the floor of
// their share; test receives the remainder.
struct SplitSpec {
    double train_frac = 0.6;
    double val_frac = 0.2;
    double test_frac = 0.2;
    std::uint64_t seed = 1;
};

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

// Stratified split: every (class, snr) cell is shuffled under the seed and cut
// into train/val/test by the spec's fractions. Throws DegenerateInputError when
// a cell is empty or too small to give each requested part at least one sample.
DatasetSplit split_dataset(const SignalDataset& ds, const SplitSpec& spec);

// Per-cell reduction of a training index set. `eta` in (0, 1] keeps
// round(eta * cell_size) samples per cell (1.0 keeps everything); eta > 1 is an
// absolute per-cell count. Throws ConfigError when a cell would end up empty or
// asked for more samples than it has.
std::vector<std::size_t> subsample_training(const SignalDataset& ds,
                                            const std::vector<std::size_t>& train,
                                            double eta, std::uint64_t seed);

// Linear warmup to `initial` over warmup_steps, then cosine decay to zero at
// total_steps: lr(s) = initial * (s / warmup) for s < warmup, otherwise
// initial * 0.5 * (1 + cos(pi * (s - warmup) / (total - warmup))).
struct LrSchedule {
    double initial = 1e-3;
    std::size_t warmup_steps = 0;
    std::size_t total_steps = 1;
};

double lr_at(std::size_t step, const LrSchedule& schedule);

enum class OptimizerKind { Sgd, Adam, Adagrad, Adadelta };

OptimizerKind parse_optimizer(const std::string& name);
std::string optimizer_name(OptimizerKind kind);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double momentum = 0.9;       // sgd; 0 disables the buffer
    double beta1 = 0.9;          // adam
    double beta2 = 0.999;        // adam
    double eps = 1e-8;           // adam / adagrad
    double rho = 0.9;            // adadelta decay
    double adadelta_eps = 1e-6;  // adadelta conditioning
    double weight_decay = 0.0;   // decoupled, applied before the update
};

// First-order update rules over named parameter tensors. Stateful (momentum /
// moment estimates / accumulators live here), one slot per parameter name.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    const OptimizerConfig& config() const { return cfg_; }

    // Applies one update with the given learning rate. Throws DivergenceError
    // naming the parameter when a gradient is non-finite.
    void step(ParameterStore& params, const std::map<std::string, Tensor>& grads, double lr);

private:
    struct Slot {
        Tensor a;  // sgd momentum / adam m / adagrad accumulator / adadelta E[g^2]
        Tensor b;  // adam v / adadelta E[dx^2]
        std::size_t t = 0;
    };

    OptimizerConfig cfg_;
    std::map<std::string, Slot> slots_;
};

// Scales all gradients by min(1, max_norm / global_norm); returns the global
// norm before clipping. No-op when max_norm <= 0.
double clip_gradients(std::map<std::string, Tensor>& grads, double max_norm);

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    OptimizerConfig optimizer;
    double initial_lr = 1e-3;
    // warmup = round(warmup_frac * total_steps) unless warmup_steps is set explicitly
    double warmup_frac = 0.05;
    std::size_t warmup_steps = kDeriveWarmup;
    double clip_norm = 0.0;           // 0 disables clipping
    double early_stop_val_acc = 2.0;  // > 1 never triggers
    std::size_t eval_batch_size = 64;
    std::uint64_t seed = 1;

    static constexpr std::size_t kDeriveWarmup = static_cast<std::size_t>(-1);
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double lr = 0.0;  // learning rate of the epoch's last step
    double seconds = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;  // 1-based; 0 when no epoch completed
    double best_val_acc = 0.0;
    std::size_t steps_taken = 0;
    bool diverged = false;
    std::string divergence_message;
};

// Index of the best epoch: highest validation accuracy, earliest on ties.
std::size_t best_epoch_index(const std::vector<double>& val_accs);

// Trains the model in place. Every epoch shuffles the training indices under
// the run seed, steps the optimizer per batch, and measures validation
// accuracy; the parameters of the best epoch are restored into the model on
// return (divergence aborts the loop but still restores the last best state).
// When run_dir is non-empty, writes metrics.csv, best.sgck and summary.txt
// there.
TrainResult train(Model& model, const SignalDataset& ds,
                  const std::vector<std::size_t>& train_idx,
                  const std::vector<std::size_t>& val_idx, const TrainConfig& cfg,
                  const std::string& run_dir = "");

}  // namespace signet
