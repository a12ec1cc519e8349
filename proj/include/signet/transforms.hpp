#pragma once

// Signal-to-matrix operators: the trainable S2M transform (forward + analytic backward,
// plus a tape-integrated batched op) and the fixed signal-to-image baselines
// (Gram, GAF, MTF, constellation density, square reshape).

#include <cstddef>
#include <string>

#include "signet/tape.hpp"
#include "signet/tensor.hpp"

namespace signet {

// Overlapping windows of a 1-D signal stacked as rows: row r = signal[r*h .. r*h + k).
// Trailing samples that do not fill a complete window are dropped.
struct SliceMatrix {
    Tensor values;           // m x k
    std::size_t window;      // k
    std::size_t stride;      // h
    std::size_t source_len;  // N
};

// m = floor((n - k) / h) + 1
std::size_t slice_rows(std::size_t n, std::size_t k, std::size_t h);

SliceMatrix slice(const Tensor& signal, std::size_t k, std::size_t h);

// M = S * F * S^T, with F a k x k filter. M[a][b] = s_a . F . s_b^T.
Tensor s2m_forward(const SliceMatrix& s, const Tensor& filter);

struct S2mGradients {
    Tensor d_filter;  // k x k
    Tensor d_signal;  // N (zero where no window covers the sample)
};

// Analytic gradients of a loss through M = S F S^T given dL/dM:
//   dF = S^T dM S;  dS = dM S F^T + dM^T S F;  dSignal by overlap scatter-add of dS.
S2mGradients s2m_backward(const SliceMatrix& s, const Tensor& filter, const Tensor& d_m);

// Two-channel S2M image: channel 0 from `i` with filter_i, channel 1 from `q` with
// filter_q. Output is 2 x m x m.
Tensor s2m_sample(const Tensor& i, const Tensor& q, const Tensor& filter_i,
                  const Tensor& filter_q, std::size_t h);

// Gram baseline: S2M with the filter frozen to identity, i.e. S * S^T.
Tensor gram(const Tensor& signal, std::size_t k, std::size_t h);

enum class GafVariant { Summation, Difference };

// Gramian angular field. Rescales the series to [-1,1], takes phi = arccos, and emits
// cos(phi_i + phi_j) (summation) or sin(phi_i - phi_j) (difference).
Tensor gaf(const Tensor& series, GafVariant variant = GafVariant::Summation);

// Quantile-bin assignment for a series: near-equal-count states, ties kept in time order.
std::vector<std::size_t> quantile_bins(const Tensor& series, std::size_t bins);

// Row-normalized first-order transition matrix W[p][q] between quantile bins of consecutive
// points; rows with no outgoing transitions are left all-zero.
Tensor mtf_transitions(const Tensor& series, std::size_t bins);

// Markov transition field: MTF[i][j] = W[bin(i)][bin(j)].
Tensor mtf(const Tensor& series, std::size_t bins);

// Normalized 2-D histogram of (i_t, q_t) pairs on a grid x grid lattice covering
// [-range, range]^2; out-of-range points are clamped to the boundary.
Tensor constellation_density(const Tensor& i, const Tensor& q, std::size_t grid, double range);

// Concatenate I then Q and reshape row-major to a sqrt(2N) x sqrt(2N) matrix.
Tensor reshape_square(const Tensor& i, const Tensor& q);

// Fixed-transform dispatcher used by the baseline classifiers. Output is C x H x W.
enum class TransformKind { Gram, GafSummation, GafDifference, Mtf, Constellation, ReshapeSquare };

struct TransformParams {
    std::size_t window = 3;       // gram
    std::size_t stride = 1;       // gram
    std::size_t bins = 8;         // mtf
    std::size_t grid = 32;        // constellation
    double range = 1.0;           // constellation
};

TransformKind parse_transform_kind(const std::string& name);
std::string transform_kind_name(TransformKind kind);

Tensor transform_image(TransformKind kind, const Tensor& i, const Tensor& q,
                       const TransformParams& params);

// Tape op for training: x is [B x C x L], filters is [C x k x k] (one filter per channel),
// output [B x C x m x m] with channel c transformed by filters[c].
Var s2m_image(Var x, Var filters, std::size_t h);

}  // namespace signet
