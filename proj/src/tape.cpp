#include "signet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "signet/parallel.hpp"

namespace signet {

Var Tape::leaf(Tensor value, bool requires_grad) {
    return make_node(std::move(value), requires_grad, nullptr);
}

Var Tape::param(Tensor value) {
    Var v = make_node(std::move(value), true, nullptr);
    nodes_[v.id].is_param = true;
    params_.push_back(v.id);
    return v;
}

Tensor& Tape::grad(NodeId id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
    return n.grad;
}

Var Tape::make_node(Tensor value, bool requires_grad,
                    std::function<void(Tape&, NodeId)> backward_fn) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward_fn = requires_grad ? std::move(backward_fn) : nullptr;
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<NodeId>(nodes_.size() - 1)};
}

void Tape::backward(Var loss) {
    if (loss.tape != this) throw ContractError("backward: loss lives on a different tape");
    Node& ln = nodes_[loss.id];
    if (ln.value.size() != 1) {
        throw ContractError("backward: loss must be scalar, got " + ln.value.shape_str());
    }
    grad(loss.id)[0] = 1.0;
    for (NodeId id = loss.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.grad.empty() && n.backward_fn) n.backward_fn(*this, id);
        if (!n.is_param && !n.grad.empty()) n.grad = Tensor();  // discard after use
    }
}

std::map<NodeId, Tensor> Tape::parameter_gradients() const {
    std::map<NodeId, Tensor> out;
    for (NodeId id : params_) {
        const Node& n = nodes_[id];
        out.emplace(id, n.grad.empty() ? Tensor::zeros(n.value.shape()) : n.grad);
    }
    return out;
}

namespace {

void require_same_tape(std::initializer_list<Var> vars) {
    Tape* t = vars.begin()->tape;
    for (Var v : vars) {
        if (v.tape != t || v.tape == nullptr) {
            throw ContractError("operands must live on the same tape");
        }
    }
}

// C += A * B^T
void matmul_bt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        double* crow = pc + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = pb + j * k;
            double s = 0.0;
            for (std::size_t t = 0; t < k; ++t) s += arow[t] * brow[t];
            crow[j] += s;
        }
    }
}

// C += A^T * B
void matmul_at_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (std::size_t t = 0; t < k; ++t) {
        const double* arow = pa + t * m;
        const double* brow = pb + t * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = pc + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// output index range [lo, hi) such that o*stride + offset lands in [0, in_len)
inline void valid_out_range(long offset, long stride, long in_len, long out_len, long& lo,
                            long& hi) {
    lo = 0;
    if (offset < 0) lo = (-offset + stride - 1) / stride;
    if (in_len - 1 - offset < 0) {
        hi = lo;  // empty
        return;
    }
    hi = std::min(out_len, (in_len - 1 - offset) / stride + 1);
    if (hi < lo) hi = lo;
}

long conv_out_len(long in, long k, long stride, long pad, const char* what) {
    if (stride < 1) throw ShapeError(std::string(what) + ": stride must be >= 1");
    if (in + 2 * pad < k) {
        throw ShapeError(std::string(what) + ": kernel size " + std::to_string(k) +
                         " exceeds padded input length " + std::to_string(in + 2 * pad));
    }
    return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

Var matmul(Var a, Var b) {
    require_same_tape({a, b});
    Tape& t = *a.tape;
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    Tensor out = signet::matmul(av, bv);
    bool rg = any_requires_grad({a, b});
    NodeId pa = a.id, pb = b.id;
    return t.make_node(std::move(out), rg, [pa, pb](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(pa)) matmul_bt_acc(g, tp.value(pb), tp.grad(pa));
        if (tp.requires_grad(pb)) matmul_at_acc(tp.value(pa), g, tp.grad(pb));
    });
}

Var conv1d(Var x, Var w, int stride, int padding) {
    require_same_tape({x, w});
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    if (wv.rank() != 3) throw ShapeError("conv1d: weight must be [C_out x C_in x k], got " + wv.shape_str());
    const bool batched = xv.rank() == 3;
    if (!batched && xv.rank() != 2) {
        throw ShapeError("conv1d: input must be [C_in x L] or [B x C_in x L], got " + xv.shape_str());
    }
    const long B = batched ? static_cast<long>(xv.dim(0)) : 1;
    const long Cin = static_cast<long>(xv.dim(batched ? 1 : 0));
    const long L = static_cast<long>(xv.dim(batched ? 2 : 1));
    const long Cout = static_cast<long>(wv.dim(0));
    const long k = static_cast<long>(wv.dim(2));
    if (static_cast<long>(wv.dim(1)) != Cin) {
        throw ShapeError("conv1d: input channels " + std::to_string(Cin) +
                         " do not match weight " + wv.shape_str());
    }
    const long Lo = conv_out_len(L, k, stride, padding, "conv1d");

    Tensor out = batched ? Tensor::zeros({static_cast<std::size_t>(B), static_cast<std::size_t>(Cout),
                                          static_cast<std::size_t>(Lo)})
                         : Tensor::zeros({static_cast<std::size_t>(Cout), static_cast<std::size_t>(Lo)});
    {
        const double* px = xv.data();
        const double* pw = wv.data();
        double* po = out.data();
        for (long b = 0; b < B; ++b) {
            for (long oc = 0; oc < Cout; ++oc) {
                double* orow = po + (b * Cout + oc) * Lo;
                for (long ic = 0; ic < Cin; ++ic) {
                    const double* xrow = px + (b * Cin + ic) * L;
                    const double* wrow = pw + (oc * Cin + ic) * k;
                    for (long kk = 0; kk < k; ++kk) {
                        const double weight = wrow[kk];
                        if (weight == 0.0) continue;
                        const long off = kk - padding;
                        long lo, hi;
                        valid_out_range(off, stride, L, Lo, lo, hi);
                        for (long o = lo; o < hi; ++o) orow[o] += weight * xrow[o * stride + off];
                    }
                }
            }
        }
    }

    bool rg = any_requires_grad({x, w});
    NodeId pxid = x.id, pwid = w.id;
    const long s = stride, p = padding;
    return t.make_node(std::move(out), rg, [=](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& xval = tp.value(pxid);
        const Tensor& wval = tp.value(pwid);
        const double* pg = g.data();
        const long Lo2 = Lo;
        if (tp.requires_grad(pxid)) {
            Tensor& gx = tp.grad(pxid);
            double* pgx = gx.data();
            const double* pw = wval.data();
            for (long b = 0; b < B; ++b) {
                for (long oc = 0; oc < Cout; ++oc) {
                    const double* grow = pg + (b * Cout + oc) * Lo2;
                    for (long ic = 0; ic < Cin; ++ic) {
                        double* gxrow = pgx + (b * Cin + ic) * L;
                        const double* wrow = pw + (oc * Cin + ic) * k;
                        for (long kk = 0; kk < k; ++kk) {
                            const double weight = wrow[kk];
                            if (weight == 0.0) continue;
                            const long off = kk - p;
                            long lo, hi;
                            valid_out_range(off, s, L, Lo2, lo, hi);
                            for (long o = lo; o < hi; ++o) gxrow[o * s + off] += weight * grow[o];
                        }
                    }
                }
            }
        }
        if (tp.requires_grad(pwid)) {
            Tensor& gw = tp.grad(pwid);
            double* pgw = gw.data();
            const double* px = xval.data();
            for (long oc = 0; oc < Cout; ++oc) {
                for (long b = 0; b < B; ++b) {
                    const double* grow = pg + (b * Cout + oc) * Lo2;
                    for (long ic = 0; ic < Cin; ++ic) {
                        const double* xrow = px + (b * Cin + ic) * L;
                        double* gwrow = pgw + (oc * Cin + ic) * k;
                        for (long kk = 0; kk < k; ++kk) {
                            const long off = kk - p;
                            long lo, hi;
                            valid_out_range(off, s, L, Lo2, lo, hi);
                            double acc = 0.0;
                            for (long o = lo; o < hi; ++o) acc += grow[o] * xrow[o * s + off];
                            gwrow[kk] += acc;
                        }
                    }
                }
            }
        }
    });
}

namespace {

struct Conv2dDims {
    long B, Cin, H, W, Cout, kh, kw, Ho, Wo;
    bool batched;
};

Conv2dDims conv2d_dims(const Tensor& xv, const Tensor& wv, long sh, long sw, long ph, long pw) {
    if (wv.rank() != 4) {
        throw ShapeError("conv2d: weight must be [C_out x C_in x kh x kw], got " + wv.shape_str());
    }
    const bool batched = xv.rank() == 4;
    if (!batched && xv.rank() != 3) {
        throw ShapeError("conv2d: input must be [C_in x H x W] or [B x C_in x H x W], got " +
                         xv.shape_str());
    }
    Conv2dDims d;
    d.batched = batched;
    d.B = batched ? static_cast<long>(xv.dim(0)) : 1;
    d.Cin = static_cast<long>(xv.dim(batched ? 1 : 0));
    d.H = static_cast<long>(xv.dim(batched ? 2 : 1));
    d.W = static_cast<long>(xv.dim(batched ? 3 : 2));
    d.Cout = static_cast<long>(wv.dim(0));
    d.kh = static_cast<long>(wv.dim(2));
    d.kw = static_cast<long>(wv.dim(3));
    if (static_cast<long>(wv.dim(1)) != d.Cin) {
        throw ShapeError("conv2d: input channels " + std::to_string(d.Cin) +
                         " do not match weight " + wv.shape_str());
    }
    d.Ho = conv_out_len(d.H, d.kh, sh, ph, "conv2d");
    d.Wo = conv_out_len(d.W, d.kw, sw, pw, "conv2d");
    return d;
}

}  // namespace

Var conv2d_rect(Var x, Var w, int stride_h, int stride_w, int pad_h, int pad_w) {
    require_same_tape({x, w});
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    const Conv2dDims d = conv2d_dims(xv, wv, stride_h, stride_w, pad_h, pad_w);

    Tensor out = d.batched
                     ? Tensor::zeros({static_cast<std::size_t>(d.B), static_cast<std::size_t>(d.Cout),
                                      static_cast<std::size_t>(d.Ho), static_cast<std::size_t>(d.Wo)})
                     : Tensor::zeros({static_cast<std::size_t>(d.Cout), static_cast<std::size_t>(d.Ho),
                                      static_cast<std::size_t>(d.Wo)});
    {
        const double* px = xv.data();
        const double* pw = wv.data();
        double* po = out.data();
        parallel_for_each(static_cast<std::size_t>(d.B * d.Cout), [&](std::size_t idx) {
            const long b = static_cast<long>(idx) / d.Cout;
            const long oc = static_cast<long>(idx) % d.Cout;
            double* oplane = po + (b * d.Cout + oc) * d.Ho * d.Wo;
            for (long ic = 0; ic < d.Cin; ++ic) {
                const double* xplane = px + (b * d.Cin + ic) * d.H * d.W;
                const double* wplane = pw + (oc * d.Cin + ic) * d.kh * d.kw;
                for (long r = 0; r < d.kh; ++r) {
                    const long roff = r - pad_h;
                    long rlo, rhi;
                    valid_out_range(roff, stride_h, d.H, d.Ho, rlo, rhi);
                    for (long c = 0; c < d.kw; ++c) {
                        const double weight = wplane[r * d.kw + c];
                        if (weight == 0.0) continue;
                        const long coff = c - pad_w;
                        long clo, chi;
                        valid_out_range(coff, stride_w, d.W, d.Wo, clo, chi);
                        for (long oh = rlo; oh < rhi; ++oh) {
                            const double* xrow = xplane + (oh * stride_h + roff) * d.W;
                            double* orow = oplane + oh * d.Wo;
                            if (stride_w == 1) {
                                const double* xs = xrow + coff;
                                for (long ow = clo; ow < chi; ++ow) orow[ow] += weight * xs[ow];
                            } else {
                                for (long ow = clo; ow < chi; ++ow)
                                    orow[ow] += weight * xrow[ow * stride_w + coff];
                            }
                        }
                    }
                }
            }
        });
    }

    bool rg = any_requires_grad({x, w});
    NodeId pxid = x.id, pwid = w.id;
    const long sh = stride_h, sw = stride_w, ph = pad_h, pw2 = pad_w;
    return t.make_node(std::move(out), rg, [=](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        const double* pg = g.data();
        if (tp.requires_grad(pxid)) {
            Tensor& gx = tp.grad(pxid);
            const Tensor& wval = tp.value(pwid);
            const double* pw = wval.data();
            double* pgx = gx.data();
            parallel_for_each(static_cast<std::size_t>(d.B), [&](std::size_t bi) {
                const long b = static_cast<long>(bi);
                for (long oc = 0; oc < d.Cout; ++oc) {
                    const double* gplane = pg + (b * d.Cout + oc) * d.Ho * d.Wo;
                    for (long ic = 0; ic < d.Cin; ++ic) {
                        double* gxplane = pgx + (b * d.Cin + ic) * d.H * d.W;
                        const double* wplane = pw + (oc * d.Cin + ic) * d.kh * d.kw;
                        for (long r = 0; r < d.kh; ++r) {
                            const long roff = r - ph;
                            long rlo, rhi;
                            valid_out_range(roff, sh, d.H, d.Ho, rlo, rhi);
                            for (long c = 0; c < d.kw; ++c) {
                                const double weight = wplane[r * d.kw + c];
                                if (weight == 0.0) continue;
                                const long coff = c - pw2;
                                long clo, chi;
                                valid_out_range(coff, sw, d.W, d.Wo, clo, chi);
                                for (long oh = rlo; oh < rhi; ++oh) {
                                    double* gxrow = gxplane + (oh * sh + roff) * d.W;
                                    const double* grow = gplane + oh * d.Wo;
                                    if (sw == 1) {
                                        double* gs = gxrow + coff;
                                        for (long ow = clo; ow < chi; ++ow) gs[ow] += weight * grow[ow];
                                    } else {
                                        for (long ow = clo; ow < chi; ++ow)
                                            gxrow[ow * sw + coff] += weight * grow[ow];
                                    }
                                }
                            }
                        }
                    }
                }
            });
        }
        if (tp.requires_grad(pwid)) {
            Tensor& gw = tp.grad(pwid);
            const Tensor& xval = tp.value(pxid);
            const double* px = xval.data();
            double* pgw = gw.data();
            parallel_for_each(static_cast<std::size_t>(d.Cout), [&](std::size_t oci) {
                const long oc = static_cast<long>(oci);
                for (long b = 0; b < d.B; ++b) {
                    const double* gplane = pg + (b * d.Cout + oc) * d.Ho * d.Wo;
                    for (long ic = 0; ic < d.Cin; ++ic) {
                        const double* xplane = px + (b * d.Cin + ic) * d.H * d.W;
                        double* gwplane = pgw + (oc * d.Cin + ic) * d.kh * d.kw;
                        for (long r = 0; r < d.kh; ++r) {
                            const long roff = r - ph;
                            long rlo, rhi;
                            valid_out_range(roff, sh, d.H, d.Ho, rlo, rhi);
                            for (long c = 0; c < d.kw; ++c) {
                                const long coff = c - pw2;
                                long clo, chi;
                                valid_out_range(coff, sw, d.W, d.Wo, clo, chi);
                                double acc = 0.0;
                                for (long oh = rlo; oh < rhi; ++oh) {
                                    const double* xrow = xplane + (oh * sh + roff) * d.W;
                                    const double* grow = gplane + oh * d.Wo;
                                    if (sw == 1) {
                                        const double* xs = xrow + coff;
                                        for (long ow = clo; ow < chi; ++ow) acc += grow[ow] * xs[ow];
                                    } else {
                                        for (long ow = clo; ow < chi; ++ow)
                                            acc += grow[ow] * xrow[ow * sw + coff];
                                    }
                                }
                                gwplane[r * d.kw + c] += acc;
                            }
                        }
                    }
                }
            });
        }
    });
}

Var conv2d(Var x, Var w, int stride, int padding) {
    return conv2d_rect(x, w, stride, stride, padding, padding);
}

Var relu(Var x) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    Tensor out(xv.shape());
    const double* px = xv.data();
    double* po = out.data();
    for (std::size_t i = 0; i < xv.size(); ++i) po[i] = px[i] > 0.0 ? px[i] : 0.0;
    NodeId pid = x.id;
    return t.make_node(std::move(out), t.requires_grad(x.id), [pid](Tape& tp, NodeId self) {
        if (!tp.requires_grad(pid)) return;
        const Tensor& g = tp.grad(self);
        const Tensor& xval = tp.value(pid);
        Tensor& gx = tp.grad(pid);
        const double* pg = g.data();
        const double* px = xval.data();
        double* pgx = gx.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (px[i] > 0.0) pgx[i] += pg[i];
        }
    });
}

Var add(Var a, Var b) {
    require_same_tape({a, b});
    Tape& t = *a.tape;
    const Tensor& avl = t.value(a);
    const Tensor& bvl = t.value(b);
    Tensor::check_same_shape(avl, bvl, "add");
    Tensor out(avl.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = avl[i] + bvl[i];
    NodeId pa = a.id, pb = b.id;
    return t.make_node(std::move(out), any_requires_grad({a, b}), [pa, pb](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(pa)) tp.grad(pa) += g;
        if (tp.requires_grad(pb)) tp.grad(pb) += g;
    });
}

Var scale(Var x, double s) {
    Tape& t = *x.tape;
    Tensor out = t.value(x);
    out *= s;
    NodeId pid = x.id;
    return t.make_node(std::move(out), t.requires_grad(x.id), [pid, s](Tape& tp, NodeId self) {
        if (!tp.requires_grad(pid)) return;
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(pid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
    });
}

Var sum(Var x) {
    Tape& t = *x.tape;
    Tensor out = Tensor::scalar(t.value(x).sum());
    NodeId pid = x.id;
    return t.make_node(std::move(out), t.requires_grad(x.id), [pid](Tape& tp, NodeId self) {
        if (!tp.requires_grad(pid)) return;
        const double g = tp.grad(self)[0];
        Tensor& gx = tp.grad(pid);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    });
}

Var weighted_sum(Var x, const Tensor& weights) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    Tensor::check_same_shape(xv, weights, "weighted_sum");
    double s = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i] * weights[i];
    NodeId pid = x.id;
    Tensor w = weights;
    return t.make_node(Tensor::scalar(s), t.requires_grad(x.id),
                       [pid, w = std::move(w)](Tape& tp, NodeId self) {
                           if (!tp.requires_grad(pid)) return;
                           const double g = tp.grad(self)[0];
                           Tensor& gx = tp.grad(pid);
                           for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * w[i];
                       });
}

namespace {

// shared pooling machinery; spatial rank 1 or 2
Var pool_impl(Var x, int window, bool two_d) {
    if (window < 1) throw ShapeError("max_pool: window must be >= 1");
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    const std::size_t spatial = two_d ? 2 : 1;
    const std::size_t min_rank = spatial + 1;
    if (xv.rank() != min_rank && xv.rank() != min_rank + 1) {
        throw ShapeError("max_pool: unexpected input rank for " + xv.shape_str());
    }
    const bool batched = xv.rank() == min_rank + 1;
    const long B = batched ? static_cast<long>(xv.dim(0)) : 1;
    const long C = static_cast<long>(xv.dim(batched ? 1 : 0));
    const long H = two_d ? static_cast<long>(xv.dim(batched ? 2 : 1)) : 1;
    const long W = static_cast<long>(xv.dim(batched ? (two_d ? 3 : 2) : (two_d ? 2 : 1)));
    if ((two_d && H < window) || W < window) {
        throw ShapeError("max_pool: window " + std::to_string(window) + " larger than input " +
                         xv.shape_str());
    }
    const long Ho = two_d ? H / window : 1;  // floor: trailing rows/cols dropped
    const long Wo = W / window;

    std::vector<std::size_t> oshape;
    if (batched) oshape.push_back(static_cast<std::size_t>(B));
    oshape.push_back(static_cast<std::size_t>(C));
    if (two_d) oshape.push_back(static_cast<std::size_t>(Ho));
    oshape.push_back(static_cast<std::size_t>(Wo));
    Tensor out(std::move(oshape));

    std::vector<std::uint32_t> arg(static_cast<std::size_t>(B * C * Ho * Wo));
    const double* px = xv.data();
    double* po = out.data();
    for (long bc = 0; bc < B * C; ++bc) {
        const double* plane = px + bc * H * W;
        double* oplane = po + bc * Ho * Wo;
        std::uint32_t* aplane = arg.data() + bc * Ho * Wo;
        for (long oh = 0; oh < Ho; ++oh) {
            for (long ow = 0; ow < Wo; ++ow) {
                double best = -std::numeric_limits<double>::infinity();
                long best_idx = 0;
                for (long r = 0; r < (two_d ? window : 1); ++r) {
                    for (long c = 0; c < window; ++c) {
                        const long idx = (oh * window + r) * W + ow * window + c;
                        if (plane[idx] > best) {  // first max wins ties
                            best = plane[idx];
                            best_idx = idx;
                        }
                    }
                }
                oplane[oh * Wo + ow] = best;
                aplane[oh * Wo + ow] = static_cast<std::uint32_t>(best_idx);
            }
        }
    }

    NodeId pid = x.id;
    const long plane_in = H * W, plane_out = Ho * Wo, planes = B * C;
    return t.make_node(std::move(out), t.requires_grad(x.id),
                       [pid, arg = std::move(arg), plane_in, plane_out, planes](Tape& tp, NodeId self) {
                           if (!tp.requires_grad(pid)) return;
                           const Tensor& g = tp.grad(self);
                           Tensor& gx = tp.grad(pid);
                           const double* pg = g.data();
                           double* pgx = gx.data();
                           for (long bc = 0; bc < planes; ++bc) {
                               const double* gplane = pg + bc * plane_out;
                               double* gxplane = pgx + bc * plane_in;
                               const std::uint32_t* aplane = arg.data() + bc * plane_out;
                               for (long i = 0; i < plane_out; ++i) gxplane[aplane[i]] += gplane[i];
                           }
                       });
}

}  // namespace

Var max_pool2d(Var x, int window) { return pool_impl(x, window, true); }

Var max_pool1d(Var x, int window) { return pool_impl(x, window, false); }

Var global_avg_pool(Var x) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    if (xv.rank() != 3 && xv.rank() != 4) {
        throw ShapeError("global_avg_pool: input must be [C x H x W] or [B x C x H x W], got " +
                         xv.shape_str());
    }
    const bool batched = xv.rank() == 4;
    const long B = batched ? static_cast<long>(xv.dim(0)) : 1;
    const long C = static_cast<long>(xv.dim(batched ? 1 : 0));
    const long plane = static_cast<long>(xv.dim(batched ? 2 : 1) * xv.dim(batched ? 3 : 2));
    Tensor out = batched ? Tensor::zeros({static_cast<std::size_t>(B), static_cast<std::size_t>(C)})
                         : Tensor::zeros({static_cast<std::size_t>(C)});
    const double* px = xv.data();
    double* po = out.data();
    for (long i = 0; i < B * C; ++i) {
        double s = 0.0;
        const double* p = px + i * plane;
        for (long j = 0; j < plane; ++j) s += p[j];
        po[i] = s / static_cast<double>(plane);
    }
    NodeId pid = x.id;
    return t.make_node(std::move(out), t.requires_grad(x.id),
                       [pid, plane](Tape& tp, NodeId self) {
                           if (!tp.requires_grad(pid)) return;
                           const Tensor& g = tp.grad(self);
                           Tensor& gx = tp.grad(pid);
                           const double inv = 1.0 / static_cast<double>(plane);
                           double* pgx = gx.data();
                           const double* pg = g.data();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               double v = pg[i] * inv;
                               double* row = pgx + i * plane;
                               for (long j = 0; j < plane; ++j) row[j] += v;
                           }
                       });
}

Var dense(Var x, Var w, Var b) {
    require_same_tape({x, w, b});
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    const Tensor& bv = t.value(b);
    if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1 || xv.dim(1) != wv.dim(0) ||
        wv.dim(1) != bv.dim(0)) {
        throw ShapeError("dense: incompatible shapes x" + xv.shape_str() + " w" + wv.shape_str() +
                         " b" + bv.shape_str());
    }
    Tensor out = signet::matmul(xv, wv);
    const std::size_t Bn = out.dim(0), F = out.dim(1);
    for (std::size_t i = 0; i < Bn; ++i)
        for (std::size_t j = 0; j < F; ++j) out.at(i, j) += bv[j];
    NodeId px = x.id, pw = w.id, pb = b.id;
    return t.make_node(std::move(out), any_requires_grad({x, w, b}),
                       [px, pw, pb](Tape& tp, NodeId self) {
                           const Tensor& g = tp.grad(self);
                           if (tp.requires_grad(px)) matmul_bt_acc(g, tp.value(pw), tp.grad(px));
                           if (tp.requires_grad(pw)) matmul_at_acc(tp.value(px), g, tp.grad(pw));
                           if (tp.requires_grad(pb)) {
                               Tensor& gb = tp.grad(pb);
                               const std::size_t B2 = g.dim(0), F2 = g.dim(1);
                               for (std::size_t i = 0; i < B2; ++i)
                                   for (std::size_t j = 0; j < F2; ++j) gb[j] += g.at(i, j);
                           }
                       });
}

Var add_channel_bias(Var x, Var b) {
    require_same_tape({x, b});
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    const Tensor& bv = t.value(b);
    if (xv.rank() != 3 && xv.rank() != 4) {
        throw ShapeError("add_channel_bias: input must be [B x C x ...], got " + xv.shape_str());
    }
    const long B = static_cast<long>(xv.dim(0));
    const long C = static_cast<long>(bv.dim(0));
    if (bv.rank() != 1 || xv.dim(1) != static_cast<std::size_t>(C)) {
        throw ShapeError("add_channel_bias: bias " + bv.shape_str() + " does not match " +
                         xv.shape_str());
    }
    const long inner = static_cast<long>(xv.size()) / (B * C);
    Tensor out = xv;
    double* po = out.data();
    const double* pbv = bv.data();
    for (long b2 = 0; b2 < B; ++b2)
        for (long c = 0; c < C; ++c) {
            const double add_v = pbv[c];
            double* row = po + (b2 * C + c) * inner;
            for (long i = 0; i < inner; ++i) row[i] += add_v;
        }
    NodeId px = x.id, pbid = b.id;
    return t.make_node(std::move(out), any_requires_grad({x, b}),
                       [px, pbid, B, C, inner](Tape& tp, NodeId self) {
                           const Tensor& g = tp.grad(self);
                           if (tp.requires_grad(px)) tp.grad(px) += g;
                           if (tp.requires_grad(pbid)) {
                               Tensor& gb = tp.grad(pbid);
                               const double* pg = g.data();
                               for (long b2 = 0; b2 < B; ++b2)
                                   for (long c = 0; c < C; ++c) {
                                       const double* row = pg + (b2 * C + c) * inner;
                                       double s = 0.0;
                                       for (long i = 0; i < inner; ++i) s += row[i];
                                       gb[c] += s;
                                   }
                           }
                       });
}

Var flatten(Var x) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    if (xv.rank() < 2) throw ShapeError("flatten: input must be batched, got " + xv.shape_str());
    const std::size_t B = xv.dim(0);
    const std::size_t D = xv.size() / B;
    Tensor out = xv.reshaped({B, D});
    NodeId pid = x.id;
    return t.make_node(std::move(out), t.requires_grad(x.id), [pid](Tape& tp, NodeId self) {
        if (!tp.requires_grad(pid)) return;
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(pid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
}

Var reshape(Var x, std::vector<std::size_t> shape) {
    Tape& t = *x.tape;
    Tensor out = t.value(x).reshaped(std::move(shape));
    NodeId pid = x.id;
    return t.make_node(std::move(out), t.requires_grad(x.id), [pid](Tape& tp, NodeId self) {
        if (!tp.requires_grad(pid)) return;
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(pid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
}

Var batch_norm(Var x, Var gamma, Var beta, BatchNormState& state, NormMode mode, double momentum,
               double eps) {
    require_same_tape({x, gamma, beta});
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    const Tensor& gv = t.value(gamma);
    const Tensor& bv = t.value(beta);
    if (xv.rank() != 3 && xv.rank() != 4) {
        throw ShapeError("batch_norm: input must be [B x C x L] or [B x C x H x W], got " +
                         xv.shape_str());
    }
    const long B = static_cast<long>(xv.dim(0));
    const long C = static_cast<long>(xv.dim(1));
    const long inner = static_cast<long>(xv.size()) / (B * C);
    if (gv.rank() != 1 || bv.rank() != 1 || static_cast<long>(gv.dim(0)) != C ||
        static_cast<long>(bv.dim(0)) != C) {
        throw ShapeError("batch_norm: gamma/beta must be [C] with C=" + std::to_string(C));
    }
    if (state.running_mean.empty()) {
        state.running_mean = Tensor::zeros({static_cast<std::size_t>(C)});
        state.running_var = Tensor::ones({static_cast<std::size_t>(C)});
    }

    std::vector<double> mean(C), inv_std(C);
    const double M = static_cast<double>(B * inner);
    const double* px = xv.data();
    if (mode == NormMode::Train) {
        for (long c = 0; c < C; ++c) {
            double s = 0.0;
            for (long b = 0; b < B; ++b) {
                const double* row = px + (b * C + c) * inner;
                for (long i = 0; i < inner; ++i) s += row[i];
            }
            const double mu = s / M;
            double v = 0.0;
            for (long b = 0; b < B; ++b) {
                const double* row = px + (b * C + c) * inner;
                for (long i = 0; i < inner; ++i) {
                    const double d = row[i] - mu;
                    v += d * d;
                }
            }
            v /= M;  // biased variance, also used for the running estimate
            mean[c] = mu;
            inv_std[c] = 1.0 / std::sqrt(v + eps);
            state.running_mean[c] = momentum * state.running_mean[c] + (1.0 - momentum) * mu;
            state.running_var[c] = momentum * state.running_var[c] + (1.0 - momentum) * v;
        }
    } else {
        for (long c = 0; c < C; ++c) {
            mean[c] = state.running_mean[c];
            inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + eps);
        }
    }

    Tensor out(xv.shape());
    double* po = out.data();
    const double* pgm = gv.data();
    const double* pbt = bv.data();
    for (long b = 0; b < B; ++b) {
        for (long c = 0; c < C; ++c) {
            const double* row = px + (b * C + c) * inner;
            double* orow = po + (b * C + c) * inner;
            const double mu = mean[c], is = inv_std[c], gm = pgm[c], bt = pbt[c];
            for (long i = 0; i < inner; ++i) orow[i] = gm * (row[i] - mu) * is + bt;
        }
    }

    NodeId px_id = x.id, pg_id = gamma.id, pb_id = beta.id;
    const bool train = mode == NormMode::Train;
    return t.make_node(
        std::move(out), any_requires_grad({x, gamma, beta}),
        [px_id, pg_id, pb_id, mean = std::move(mean), inv_std = std::move(inv_std), B, C, inner,
         train](Tape& tp, NodeId self) {
            const Tensor& g = tp.grad(self);
            const Tensor& xval = tp.value(px_id);
            const Tensor& gval = tp.value(pg_id);
            const double* pg = g.data();
            const double* px = xval.data();
            const double M = static_cast<double>(B * inner);

            for (long c = 0; c < C; ++c) {
                const double mu = mean[c], is = inv_std[c];
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (long b = 0; b < B; ++b) {
                    const double* grow = pg + (b * C + c) * inner;
                    const double* xrow = px + (b * C + c) * inner;
                    for (long i = 0; i < inner; ++i) {
                        sum_dy += grow[i];
                        sum_dy_xhat += grow[i] * (xrow[i] - mu) * is;
                    }
                }
                if (tp.requires_grad(pb_id)) tp.grad(pb_id)[c] += sum_dy;
                if (tp.requires_grad(pg_id)) tp.grad(pg_id)[c] += sum_dy_xhat;
                if (tp.requires_grad(px_id)) {
                    Tensor& gx = tp.grad(px_id);
                    double* pgx = gx.data();
                    const double gm = gval[c];
                    if (train) {
                        const double k1 = sum_dy / M, k2 = sum_dy_xhat / M;
                        for (long b = 0; b < B; ++b) {
                            const double* grow = pg + (b * C + c) * inner;
                            const double* xrow = px + (b * C + c) * inner;
                            double* gxrow = pgx + (b * C + c) * inner;
                            for (long i = 0; i < inner; ++i) {
                                const double xhat = (xrow[i] - mu) * is;
                                gxrow[i] += gm * is * (grow[i] - k1 - xhat * k2);
                            }
                        }
                    } else {
                        for (long b = 0; b < B; ++b) {
                            const double* grow = pg + (b * C + c) * inner;
                            double* gxrow = pgx + (b * C + c) * inner;
                            for (long i = 0; i < inner; ++i) gxrow[i] += gm * is * grow[i];
                        }
                    }
                }
            }
        });
}

Var softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
    Tape& t = *logits.tape;
    const Tensor& lv = t.value(logits);
    if (lv.rank() != 2) {
        throw ShapeError("softmax_cross_entropy: logits must be [B x C], got " + lv.shape_str());
    }
    const long B = static_cast<long>(lv.dim(0));
    const long C = static_cast<long>(lv.dim(1));
    if (static_cast<long>(labels.size()) != B) {
        throw ShapeError("softmax_cross_entropy: batch " + std::to_string(B) + " but " +
                         std::to_string(labels.size()) + " labels");
    }
    for (int y : labels) {
        if (y < 0 || y >= C) {
            throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(y) +
                                    " outside [0, " + std::to_string(C) + ")");
        }
    }
    double loss = 0.0;
    const double* pl = lv.data();
    for (long i = 0; i < B; ++i) {
        const double* row = pl + i * C;
        double mx = row[0];
        for (long c = 1; c < C; ++c) mx = std::max(mx, row[c]);
        double z = 0.0;
        for (long c = 0; c < C; ++c) z += std::exp(row[c] - mx);
        loss += std::log(z) - (row[labels[i]] - mx);
    }
    loss /= static_cast<double>(B);

    NodeId pid = logits.id;
    std::vector<int> labels_copy = labels;
    return t.make_node(Tensor::scalar(loss), t.requires_grad(logits.id),
                       [pid, labels_copy = std::move(labels_copy), B, C](Tape& tp, NodeId self) {
                           if (!tp.requires_grad(pid)) return;
                           const double gy = tp.grad(self)[0];
                           const Tensor& lval = tp.value(pid);
                           Tensor& gl = tp.grad(pid);
                           const double* pl = lval.data();
                           double* pgl = gl.data();
                           const double invB = 1.0 / static_cast<double>(B);
                           for (long i = 0; i < B; ++i) {
                               const double* row = pl + i * C;
                               double* grow = pgl + i * C;
                               double mx = row[0];
                               for (long c = 1; c < C; ++c) mx = std::max(mx, row[c]);
                               double z = 0.0;
                               for (long c = 0; c < C; ++c) z += std::exp(row[c] - mx);
                               for (long c = 0; c < C; ++c) {
                                   double p = std::exp(row[c] - mx) / z;
                                   if (c == labels_copy[i]) p -= 1.0;
                                   grow[c] += gy * p * invB;
                               }
                           }
                       });
}

Tensor softmax_rows(const Tensor& logits) {
    if (logits.rank() != 2) {
        throw ShapeError("softmax_rows: expected [B x C], got " + logits.shape_str());
    }
    const std::size_t B = logits.dim(0), C = logits.dim(1);
    Tensor out({B, C});
    for (std::size_t i = 0; i < B; ++i) {
        double mx = logits.at(i, 0);
        for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, logits.at(i, c));
        double z = 0.0;
        for (std::size_t c = 0; c < C; ++c) z += std::exp(logits.at(i, c) - mx);
        for (std::size_t c = 0; c < C; ++c) out.at(i, c) = std::exp(logits.at(i, c) - mx) / z;
    }
    return out;
}

}  // namespace signet
