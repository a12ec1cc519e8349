#include "signet/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "signet/errors.hpp"
#include "signet/parallel.hpp"

namespace signet {

std::size_t slice_rows(std::size_t n, std::size_t k, std::size_t h) {
    if (k == 0 || k > n) {
        throw ShapeError("slice: window " + std::to_string(k) + " outside [1, " +
                         std::to_string(n) + "]");
    }
    if (h == 0) throw ShapeError("slice: stride must be >= 1");
    return (n - k) / h + 1;
}

SliceMatrix slice(const Tensor& signal, std::size_t k, std::size_t h) {
    if (signal.rank() != 1) {
        throw ShapeError("slice: expected a 1-D signal, got " + signal.shape_str());
    }
    const std::size_t n = signal.dim(0);
    const std::size_t m = slice_rows(n, k, h);
    Tensor values({m, k});
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < k; ++c) values.at(r, c) = signal[r * h + c];
    }
    return SliceMatrix{std::move(values), k, h, n};
}

Tensor s2m_forward(const SliceMatrix& s, const Tensor& filter) {
    if (filter.rank() != 2 || filter.dim(0) != s.window || filter.dim(1) != s.window) {
        throw ShapeError("s2m: filter " + filter.shape_str() + " does not match window " +
                         std::to_string(s.window));
    }
    return matmul_bt(matmul(s.values, filter), s.values);  // (S F) S^T
}

S2mGradients s2m_backward(const SliceMatrix& s, const Tensor& filter, const Tensor& d_m) {
    const std::size_t m = s.values.dim(0), k = s.window;
    if (filter.rank() != 2 || filter.dim(0) != k || filter.dim(1) != k) {
        throw ShapeError("s2m_backward: filter " + filter.shape_str() + " does not match window " +
                         std::to_string(k));
    }
    if (d_m.rank() != 2 || d_m.dim(0) != m || d_m.dim(1) != m) {
        throw ShapeError("s2m_backward: upstream gradient " + d_m.shape_str() +
                         " does not match feature matrix [" + std::to_string(m) + "x" +
                         std::to_string(m) + "]");
    }

    // dF = S^T dM S
    Tensor d_filter = matmul(matmul_at(s.values, d_m), s.values);

    // dS = dM S F^T + dM^T S F
    Tensor ds = matmul_bt(matmul(d_m, s.values), filter);
    Tensor ds2 = matmul(matmul_at(d_m, s.values), filter);
    ds += ds2;

    Tensor d_signal = Tensor::zeros({s.source_len});
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < k; ++c) d_signal[r * s.stride + c] += ds.at(r, c);
    }
    return S2mGradients{std::move(d_filter), std::move(d_signal)};
}

Tensor s2m_sample(const Tensor& i, const Tensor& q, const Tensor& filter_i,
                  const Tensor& filter_q, std::size_t h) {
    Tensor::check_same_shape(i, q, "s2m_sample");
    const std::size_t k = filter_i.dim(0);
    const std::size_t m = slice_rows(i.dim(0), k, h);
    Tensor out({2, m, m});
    Tensor mi = s2m_forward(slice(i, k, h), filter_i);
    Tensor mq = s2m_forward(slice(q, k, h), filter_q);
    std::copy(mi.data(), mi.data() + m * m, out.data());
    std::copy(mq.data(), mq.data() + m * m, out.data() + m * m);
    return out;
}

Tensor gram(const Tensor& signal, std::size_t k, std::size_t h) {
    Tensor identity = Tensor::zeros({k, k});
    for (std::size_t i = 0; i < k; ++i) identity.at(i, i) = 1.0;
    return s2m_forward(slice(signal, k, h), identity);
}

namespace {

// (x - min) / (max - min) * 2 - 1, exact at both endpoints
Tensor rescale_unit(const Tensor& series, const char* what) {
    const double lo = series.min(), hi = series.max();
    if (!(hi > lo)) {
        throw DegenerateInputError(std::string(what) + ": constant series (min == max == " +
                                   std::to_string(lo) + ")");
    }
    Tensor out(series.shape());
    const double span = hi - lo;
    for (std::size_t i = 0; i < series.size(); ++i) out[i] = (series[i] - lo) / span * 2.0 - 1.0;
    return out;
}

}  // namespace

Tensor gaf(const Tensor& series, GafVariant variant) {
    if (series.rank() != 1) {
        throw ShapeError("gaf: expected a 1-D series, got " + series.shape_str());
    }
    const std::size_t n = series.dim(0);
    Tensor scaled = rescale_unit(series, "gaf");
    std::vector<double> phi(n);
    for (std::size_t i = 0; i < n; ++i) phi[i] = std::acos(scaled[i]);
    Tensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out.at(i, j) = variant == GafVariant::Summation ? std::cos(phi[i] + phi[j])
                                                            : std::sin(phi[i] - phi[j]);
        }
    }
    return out;
}

std::vector<std::size_t> quantile_bins(const Tensor& series, std::size_t bins) {
    if (bins < 2) throw ConfigError("mtf: need at least 2 bins");
    if (series.rank() != 1 || series.dim(0) < 2) {
        throw ShapeError("mtf: expected a 1-D series of length >= 2, got " + series.shape_str());
    }
    const std::size_t n = series.dim(0);
    // ranks from a stable sort by value (ties keep time order), then bin = rank * bins / n,
    // which splits the series into near-equal-count states
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return series[a] < series[b]; });
    std::vector<std::size_t> bin(n);
    for (std::size_t rank = 0; rank < n; ++rank) bin[order[rank]] = rank * bins / n;
    return bin;
}

Tensor mtf_transitions(const Tensor& series, std::size_t bins) {
    const std::vector<std::size_t> bin = quantile_bins(series, bins);
    const std::size_t n = bin.size();
    Tensor w = Tensor::zeros({bins, bins});
    for (std::size_t t = 0; t + 1 < n; ++t) w.at(bin[t], bin[t + 1]) += 1.0;
    for (std::size_t p = 0; p < bins; ++p) {
        double row_sum = 0.0;
        for (std::size_t q = 0; q < bins; ++q) row_sum += w.at(p, q);
        if (row_sum > 0.0) {
            for (std::size_t q = 0; q < bins; ++q) w.at(p, q) /= row_sum;
        }
    }
    return w;
}

Tensor mtf(const Tensor& series, std::size_t bins) {
    const std::vector<std::size_t> bin = quantile_bins(series, bins);
    const Tensor w = mtf_transitions(series, bins);
    const std::size_t n = bin.size();

    Tensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = w.at(bin[i], bin[j]);
    }
    return out;
}

Tensor constellation_density(const Tensor& i, const Tensor& q, std::size_t grid, double range) {
    Tensor::check_same_shape(i, q, "constellation_density");
    if (grid < 2) throw ConfigError("constellation_density: grid must be >= 2");
    if (!(range > 0.0)) throw ConfigError("constellation_density: range must be positive");
    const std::size_t n = i.size();
    if (n == 0) throw ShapeError("constellation_density: empty sample");

    // cell index: clamp into [-range, range], then ceil((v + range)/cell) - 1 so that values
    // exactly on an interior cell boundary fall into the lower-index cell
    const double cell = 2.0 * range / static_cast<double>(grid);
    auto index_of = [&](double v) -> std::size_t {
        v = std::clamp(v, -range, range);
        long idx = static_cast<long>(std::ceil((v + range) / cell)) - 1;
        idx = std::clamp(idx, 0L, static_cast<long>(grid) - 1);
        return static_cast<std::size_t>(idx);
    };

    Tensor out = Tensor::zeros({grid, grid});
    const double mass = 1.0 / static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t) out.at(index_of(i[t]), index_of(q[t])) += mass;
    return out;
}

Tensor reshape_square(const Tensor& i, const Tensor& q) {
    Tensor::check_same_shape(i, q, "reshape_square");
    const std::size_t n = i.size();
    const std::size_t side = static_cast<std::size_t>(std::lround(std::sqrt(2.0 * n)));
    if (side * side != 2 * n) {
        throw ShapeError("reshape_square: 2N = " + std::to_string(2 * n) +
                         " is not a perfect square");
    }
    Tensor out({side, side});
    std::copy(i.data(), i.data() + n, out.data());
    std::copy(q.data(), q.data() + n, out.data() + n);
    return out;
}

TransformKind parse_transform_kind(const std::string& name) {
    if (name == "gram") return TransformKind::Gram;
    if (name == "gaf" || name == "gasf") return TransformKind::GafSummation;
    if (name == "gadf") return TransformKind::GafDifference;
    if (name == "mtf") return TransformKind::Mtf;
    if (name == "constellation") return TransformKind::Constellation;
    if (name == "reshape") return TransformKind::ReshapeSquare;
    throw ConfigError("unknown transform '" + name +
                      "' (expected gram|gaf|gadf|mtf|constellation|reshape)");
}

std::string transform_kind_name(TransformKind kind) {
    switch (kind) {
        case TransformKind::Gram: return "gram";
        case TransformKind::GafSummation: return "gaf";
        case TransformKind::GafDifference: return "gadf";
        case TransformKind::Mtf: return "mtf";
        case TransformKind::Constellation: return "constellation";
        case TransformKind::ReshapeSquare: return "reshape";
    }
    throw ContractError("transform_kind_name: unhandled kind");
}

namespace {

Tensor stack_two_channel(Tensor a, Tensor b) {
    const std::size_t h = a.dim(0), w = a.dim(1);
    Tensor out({2, h, w});
    std::copy(a.data(), a.data() + h * w, out.data());
    std::copy(b.data(), b.data() + h * w, out.data() + h * w);
    return out;
}

}  // namespace

Tensor transform_image(TransformKind kind, const Tensor& i, const Tensor& q,
                       const TransformParams& params) {
    switch (kind) {
        case TransformKind::Gram:
            return stack_two_channel(gram(i, params.window, params.stride),
                                     gram(q, params.window, params.stride));
        case TransformKind::GafSummation:
            return stack_two_channel(gaf(i, GafVariant::Summation), gaf(q, GafVariant::Summation));
        case TransformKind::GafDifference:
            return stack_two_channel(gaf(i, GafVariant::Difference),
                                     gaf(q, GafVariant::Difference));
        case TransformKind::Mtf:
            return stack_two_channel(mtf(i, params.bins), mtf(q, params.bins));
        case TransformKind::Constellation: {
            Tensor d = constellation_density(i, q, params.grid, params.range);
            return d.reshaped({1, params.grid, params.grid});
        }
        case TransformKind::ReshapeSquare: {
            Tensor r = reshape_square(i, q);
            const std::size_t side = r.dim(0);
            return r.reshaped({1, side, side});
        }
    }
    throw ContractError("transform_image: unhandled kind");
}

Var s2m_image(Var x, Var filters, std::size_t h) {
    if (x.tape != filters.tape || x.tape == nullptr) {
        throw ContractError("s2m_image: operands must live on the same tape");
    }
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    const Tensor& fv = t.value(filters);
    if (xv.rank() != 3) {
        throw ShapeError("s2m_image: input must be [B x C x L], got " + xv.shape_str());
    }
    if (fv.rank() != 3 || fv.dim(1) != fv.dim(2)) {
        throw ShapeError("s2m_image: filters must be [C x k x k], got " + fv.shape_str());
    }
    const std::size_t B = xv.dim(0), C = xv.dim(1), L = xv.dim(2), k = fv.dim(1);
    if (fv.dim(0) != C) {
        throw ShapeError("s2m_image: filter channels " + std::to_string(fv.dim(0)) +
                         " do not match input channels " + std::to_string(C));
    }
    if (h == 0) throw ShapeError("s2m_image: stride must be >= 1");
    const std::size_t m = slice_rows(L, k, h);

    Tensor out({B, C, m, m});
    parallel_for_each(B * C, [&](std::size_t bc) {
        const std::size_t b = bc / C, c = bc % C;
        Tensor sig({L});
        std::copy(xv.data() + bc * L, xv.data() + (bc + 1) * L, sig.data());
        Tensor fc({k, k});
        std::copy(fv.data() + c * k * k, fv.data() + (c + 1) * k * k, fc.data());
        Tensor mm = s2m_forward(slice(sig, k, h), fc);
        std::copy(mm.data(), mm.data() + m * m, out.data() + (b * C + c) * m * m);
        (void)b;
    });

    NodeId px = x.id, pf = filters.id;
    return t.make_node(std::move(out), any_requires_grad({x, filters}),
                       [px, pf, B, C, L, k, h, m](Tape& tp, NodeId self) {
                           const Tensor& g = tp.grad(self);
                           const Tensor& xval = tp.value(px);
                           const Tensor& fval = tp.value(pf);
                           const bool need_x = tp.requires_grad(px);
                           const bool need_f = tp.requires_grad(pf);
                           Tensor* gx = need_x ? &tp.grad(px) : nullptr;
                           Tensor* gf = need_f ? &tp.grad(pf) : nullptr;
                           // parallel over channels: each channel owns its filter-gradient
                           // block and its slices of the input gradient (disjoint writes)
                           parallel_for_each(C, [&](std::size_t c) {
                               Tensor fc({k, k});
                               std::copy(fval.data() + c * k * k, fval.data() + (c + 1) * k * k,
                                         fc.data());
                               for (std::size_t b = 0; b < B; ++b) {
                                   const std::size_t bc = b * C + c;
                                   Tensor sig({L});
                                   std::copy(xval.data() + bc * L, xval.data() + (bc + 1) * L,
                                             sig.data());
                                   Tensor dm({m, m});
                                   std::copy(g.data() + bc * m * m, g.data() + (bc + 1) * m * m,
                                             dm.data());
                                   S2mGradients grads = s2m_backward(slice(sig, k, h), fc, dm);
                                   if (need_f) {
                                       double* dst = gf->data() + c * k * k;
                                       for (std::size_t i = 0; i < k * k; ++i)
                                           dst[i] += grads.d_filter[i];
                                   }
                                   if (need_x) {
                                       double* dst = gx->data() + bc * L;
                                       for (std::size_t i = 0; i < L; ++i)
                                           dst[i] += grads.d_signal[i];
                                   }
                               }
                           });
                       });
}

}  // namespace signet
