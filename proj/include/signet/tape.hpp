#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <deque>
#include <vector>

#include "signet/tensor.hpp"

namespace signet {

using NodeId = std::int32_t;

class Tape;

// Handle to a node on a tape. Cheap to copy; ops below build new nodes.
struct Var {
    Tape* tape = nullptr;
    NodeId id = -1;
};

// Define-by-run reverse-mode tape. Nodes are appended in forward order and
// visited strictly in reverse during backward(), so parents always precede
// children. A tape lives for one forward/backward pass and is then dropped.
class Tape {
public:
    Var leaf(Tensor value, bool requires_grad = false);

    // leaf registered as a trainable parameter (always requires grad)
    Var param(Tensor value);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& value(Var v) const { return value(v.id); }

    bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }

    // gradient accumulator, allocated as zeros on first touch
    Tensor& grad(NodeId id);
    bool has_grad(NodeId id) const { return !nodes_[id].grad.empty(); }

    const std::vector<NodeId>& param_ids() const { return params_; }

    // Reverse sweep from a scalar loss. After this call every parameter node
    // holds its gradient; intermediate gradients are released as soon as
    // their node has been processed.
    void backward(Var loss);

    // {parameter node id -> gradient} for the last backward()
    std::map<NodeId, Tensor> parameter_gradients() const;

    std::size_t node_count() const { return nodes_.size(); }

    // Op implementation hook: appends a node whose backward_fn pushes
    // gradient to earlier nodes. backward_fn may be empty when no parent
    // requires grad.
    Var make_node(Tensor value, bool requires_grad, std::function<void(Tape&, NodeId)> backward_fn);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, NodeId)> backward_fn;
        bool requires_grad = false;
        bool is_param = false;
    };

    std::deque<Node> nodes_;  // deque: references from value()/grad() stay valid as nodes are appended
    std::vector<NodeId> params_;
};

inline bool any_requires_grad(std::initializer_list<Var> vars) {
    for (Var v : vars) {
        if (v.tape->requires_grad(v.id)) return true;
    }
    return false;
}

// ---- differentiable operations -------------------------------------------

// C = A * B with A m-by-k, B k-by-n
Var matmul(Var a, Var b);

// x: [C_in x L] or [B x C_in x L]; w: [C_out x C_in x k]
Var conv1d(Var x, Var w, int stride = 1, int padding = 0);

// x: [C_in x H x W] or [B x C_in x H x W]; w: [C_out x C_in x k x k]
Var conv2d(Var x, Var w, int stride = 1, int padding = 0);

// rectangular kernels / strides / padding (narrow 2D layouts)
Var conv2d_rect(Var x, Var w, int stride_h, int stride_w, int pad_h, int pad_w);

Var relu(Var x);
Var add(Var a, Var b);
Var scale(Var x, double s);
Var sum(Var x);  // scalar

// sum(x .* weights) with constant weights; scalar probe losses in tests
Var weighted_sum(Var x, const Tensor& weights);

// x: [B x C x H x W] (or [C x H x W]); window w, stride w, floor semantics
Var max_pool2d(Var x, int window = 2);

// x: [B x C x L] (or [C x L])
Var max_pool1d(Var x, int window = 2);

// [B x C x H x W] -> [B x C]; [C x H x W] -> [C]
Var global_avg_pool(Var x);

// x: [B x D], w: [D x F], b: [F]
Var dense(Var x, Var w, Var b);

// per-channel bias add on [B x C x ...] feature maps
Var add_channel_bias(Var x, Var b);

// [B x ...] -> [B x D]
Var flatten(Var x);

// row-major reshape to a new shape with the same element count
Var reshape(Var x, std::vector<std::size_t> shape);

enum class NormMode { Train, Eval };

struct BatchNormState {
    Tensor running_mean;  // [C]
    Tensor running_var;   // [C]
};

// Per-channel normalization over [B x C x L] or [B x C x H x W]. Train mode
// normalizes with batch statistics (biased variance) and updates the running
// stats with the given momentum; eval mode uses the running stats.
Var batch_norm(Var x, Var gamma, Var beta, BatchNormState& state, NormMode mode,
               double momentum = 0.9, double eps = 1e-5);

// logits: [B x C], labels in [0, C); mean negative log softmax probability
Var softmax_cross_entropy(Var logits, const std::vector<int>& labels);

// row-wise softmax of a plain tensor (evaluation paths, no tape)
Tensor softmax_rows(const Tensor& logits);

}  // namespace signet
