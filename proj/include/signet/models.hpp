#pragma once

// Differentiable classifier graphs over IQ samples:
//   signet_mini   — trainable two-channel S2M front end + residual 2D CNN
//   signet2_mini  — strided 1D conv front end + per-channel S2M + residual 2D back end
//   cnn1d         — residual 1D convolutional baseline on the raw 2 x N signal
//   cnn2d_narrow  — narrow 2D baseline reading the signal as a 2-row image
//   transform_cnn — frozen signal-to-image transform + the same residual 2D backbone
//
// Parameters live in a ParameterStore owned by the model; every batch builds a fresh
// tape, registers the parameters on it, and runs define-by-run forward.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "signet/dataset.hpp"
#include "signet/tape.hpp"
#include "signet/tensor.hpp"
#include "signet/transforms.hpp"

namespace signet {

enum class Arch { SignetMini, Signet2Mini, Cnn1d, Cnn2dNarrow, TransformCnn };

Arch parse_arch(const std::string& name);
std::string arch_name(Arch arch);

struct ModelConfig {
    Arch arch = Arch::SignetMini;
    std::size_t num_classes = 4;
    std::size_t input_length = 128;  // N
    std::size_t s2m_window = 3;      // k
    std::size_t s2m_stride = 1;      // h
    // widths[0] is the stem width for signet_mini/transform_cnn; the rest are residual
    // stage widths. signet2_mini and cnn1d use every entry as a stage width.
    std::vector<std::size_t> widths = {16, 16, 32, 64, 128};
    std::vector<std::size_t> blocks_per_stage = {1, 1, 1, 1};
    std::size_t frontend_stages = 2;  // signet2_mini 1D stages (stride 2 each)
    std::size_t frontend_width = 8;   // signet2_mini 1D channel count
    bool batch_norm = true;
    bool stem_pool = true;  // 2x2 max-pool after the stem (skipped when spatial < 4)
    TransformKind transform = TransformKind::Gram;  // transform_cnn input
    TransformParams transform_params;
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError
    std::map<std::string, std::string> to_key_values() const;
    static ModelConfig from_key_values(const std::map<std::string, std::string>& kv);
};

// Ordered, named parameter tensors. Iteration order == registration order.
class ParameterStore {
public:
    std::size_t add(const std::string& name, Tensor value);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const std::vector<std::string>& names() const { return names_; }
    std::size_t total_size() const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
    std::map<std::string, std::size_t> index_;
};

struct ForwardResult {
    Var logits;    // [B x num_classes]
    Var features;  // penultimate activations [B x F] (input of the final dense layer)
    std::map<std::string, Var> params;  // parameter name -> tape node
};

class Model {
public:
    explicit Model(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }

    // Batch-norm running statistics, keyed by layer name; mutated by Train-mode forwards.
    std::map<std::string, BatchNormState>& norm_states() { return norm_states_; }
    const std::map<std::string, BatchNormState>& norm_states() const { return norm_states_; }

    // Raw [B x 2 x N] channels for most architectures; transform_cnn applies its frozen
    // per-sample transform here, producing [B x C x H x W].
    Tensor assemble_input(const std::vector<const IQSample*>& batch) const;
    Tensor assemble_input(const SignalDataset& ds, const std::vector<std::size_t>& indices) const;

    ForwardResult forward(Tape& tape, const Tensor& input, NormMode mode);

    std::size_t parameter_count() const { return params_.total_size(); }
    std::size_t feature_dim() const { return feature_dim_; }
    std::uint64_t architecture_hash() const;

private:
    ModelConfig cfg_;
    ParameterStore params_;
    std::map<std::string, BatchNormState> norm_states_;
    std::size_t feature_dim_ = 0;

    void build();  // registers parameters; computes feature_dim_
};

// Checkpoint container `SGCK` v1: config echo + named f64 tensors (parameters and
// batch-norm buffers), CRC-protected. Refuses to load into a mismatched architecture.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

// Loads weights into an already-built model; throws ConfigError when the model's
// architecture hash differs from the checkpoint's.
void load_checkpoint_into(Model& model, const std::string& path);

}  // namespace signet
