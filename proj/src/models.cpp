#include "signet/models.hpp"

#include <algorithm>
#include <array>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>
#include <sstream>

#include "signet/bytes.hpp"
#include "signet/parallel.hpp"
#include "signet/rng.hpp"

namespace signet {

namespace {

constexpr std::array<char, 4> kCheckpointMagic = {'S', 'G', 'C', 'K'};
constexpr std::uint16_t kCheckpointVersion = 1;

// spatial size after a stride-s convolution whose kernel/padding keep size at s=1
// (3x3 pad 1, or 1x1 pad 0): floor((n - 1) / s) + 1
std::size_t down(std::size_t n, std::size_t s) { return (n - 1) / s + 1; }

struct Stage2d {
    std::size_t in_ch = 0;
    std::size_t out_ch = 0;
    std::size_t blocks = 1;  // first block has stride 2
};

// Residual 2D backbone layout shared by signet_mini, signet2_mini and transform_cnn.
struct BackbonePlan {
    bool stem = false;         // conv k3 s2 p1 to widths[0]
    bool stem_pooled = false;  // 2x2 max pool after the stem
    std::vector<Stage2d> stages;
    std::size_t out_ch = 0;  // GAP feature width
};

std::size_t blocks_for_stage(const ModelConfig& cfg, std::size_t stage) {
    const auto& b = cfg.blocks_per_stage;
    return stage < b.size() ? b[stage] : b.back();
}

BackbonePlan plan_backbone(const ModelConfig& cfg, std::size_t in_ch, std::size_t in_h,
                           std::size_t in_w, bool with_stem) {
    BackbonePlan plan;
    std::size_t ch = in_ch;
    std::size_t h = in_h;
    std::size_t w = in_w;
    if (with_stem) {
        plan.stem = true;
        ch = cfg.widths.front();
        h = down(h, 2);
        w = down(w, 2);
        if (cfg.stem_pool && h >= 2 && w >= 2) {
            plan.stem_pooled = true;
            h /= 2;
            w /= 2;
        }
    }
    const std::size_t first_stage = with_stem ? 1 : 0;
    for (std::size_t i = first_stage; i < cfg.widths.size(); ++i) {
        Stage2d st;
        st.in_ch = ch;
        st.out_ch = cfg.widths[i];
        st.blocks = blocks_for_stage(cfg, i - first_stage);
        plan.stages.push_back(st);
        ch = st.out_ch;
        h = down(h, 2);
        w = down(w, 2);
    }
    plan.out_ch = ch;
    return plan;
}

// 1D front end of signet2_mini: `stages` stride-2 convolutions, kernel 5, padding 2.
std::size_t frontend_out_len(std::size_t n, std::size_t stages) {
    std::size_t len = n;
    for (std::size_t s = 0; s < stages; ++s) len = (len + 4 - 5) / 2 + 1;
    return len;
}

void transform_geometry(const ModelConfig& cfg, std::size_t& channels, std::size_t& side) {
    const std::size_t n = cfg.input_length;
    switch (cfg.transform) {
        case TransformKind::Gram:
            channels = 2;
            side = slice_rows(n, cfg.transform_params.window, cfg.transform_params.stride);
            return;
        case TransformKind::GafSummation:
        case TransformKind::GafDifference:
        case TransformKind::Mtf:
            channels = 2;
            side = n;
            return;
        case TransformKind::Constellation:
            channels = 1;
            side = cfg.transform_params.grid;
            return;
        case TransformKind::ReshapeSquare: {
            channels = 1;
            const auto root = static_cast<std::size_t>(std::llround(std::sqrt(2.0 * n)));
            if (root * root != 2 * n) {
                throw ConfigError("reshape transform needs 2*input_length to be a perfect "
                                  "square, got input_length " + std::to_string(n));
            }
            side = root;
            return;
        }
    }
    throw ConfigError("unknown transform kind");
}

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& key) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ConfigError("bad value '" + item + "' in list for key '" + key + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty list for key '" + key + "'");
    return out;
}

std::size_t parse_size(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size() || v < 0) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("bad integer '" + s + "' for key '" + key + "'");
    }
}

double parse_double(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad number '" + s + "' for key '" + key + "'");
    }
}

bool parse_bool(const std::string& s, const std::string& key) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw ConfigError("bad boolean '" + s + "' for key '" + key + "' (use 0/1/true/false)");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t mix_double(std::uint64_t h, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    return mix_key(h, bits);
}

}  // namespace

Arch parse_arch(const std::string& name) {
    if (name == "signet_mini") return Arch::SignetMini;
    if (name == "signet2_mini") return Arch::Signet2Mini;
    if (name == "cnn1d") return Arch::Cnn1d;
    if (name == "cnn2d_narrow") return Arch::Cnn2dNarrow;
    if (name == "transform_cnn") return Arch::TransformCnn;
    throw ConfigError("unknown architecture '" + name +
                      "' (expected signet_mini, signet2_mini, cnn1d, cnn2d_narrow or "
                      "transform_cnn)");
}

std::string arch_name(Arch arch) {
    switch (arch) {
        case Arch::SignetMini: return "signet_mini";
        case Arch::Signet2Mini: return "signet2_mini";
        case Arch::Cnn1d: return "cnn1d";
        case Arch::Cnn2dNarrow: return "cnn2d_narrow";
        case Arch::TransformCnn: return "transform_cnn";
    }
    throw ConfigError("unknown architecture id");
}

void ModelConfig::validate() const {
    if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
    if (input_length < 2) throw ConfigError("input_length must be at least 2");
    if (widths.empty()) throw ConfigError("widths must not be empty");
    if (blocks_per_stage.empty()) throw ConfigError("blocks_per_stage must not be empty");
    for (std::size_t w : widths) {
        if (w == 0) throw ConfigError("widths entries must be positive");
    }
    if (arch == Arch::SignetMini || arch == Arch::Signet2Mini) {
        if (s2m_window < 2) throw ConfigError("s2m_window must be at least 2");
        if (s2m_stride < 1) throw ConfigError("s2m_stride must be at least 1");
    }
    if (arch == Arch::SignetMini && input_length < s2m_window) {
        throw ConfigError("s2m window " + std::to_string(s2m_window) +
                          " exceeds signal length " + std::to_string(input_length));
    }
    if (arch == Arch::Signet2Mini) {
        const std::size_t reduced = frontend_out_len(input_length, frontend_stages);
        if (reduced < s2m_window) {
            throw ConfigError("front end reduces length " + std::to_string(input_length) +
                              " to " + std::to_string(reduced) + ", below the s2m window " +
                              std::to_string(s2m_window));
        }
        if (frontend_stages > 0 && frontend_width == 0) {
            throw ConfigError("frontend_width must be positive");
        }
    }
    if (arch == Arch::TransformCnn) {
        std::size_t channels = 0, side = 0;
        transform_geometry(*this, channels, side);  // throws on impossible layouts
        if (side < 1) throw ConfigError("transform output has no spatial extent");
    }
}

std::map<std::string, std::string> ModelConfig::to_key_values() const {
    std::map<std::string, std::string> kv;
    kv["arch"] = arch_name(arch);
    kv["num_classes"] = std::to_string(num_classes);
    kv["input_length"] = std::to_string(input_length);
    kv["s2m_window"] = std::to_string(s2m_window);
    kv["s2m_stride"] = std::to_string(s2m_stride);
    kv["widths"] = join_sizes(widths);
    kv["blocks"] = join_sizes(blocks_per_stage);
    kv["frontend_stages"] = std::to_string(frontend_stages);
    kv["frontend_width"] = std::to_string(frontend_width);
    kv["batch_norm"] = batch_norm ? "1" : "0";
    kv["stem_pool"] = stem_pool ? "1" : "0";
    kv["transform"] = transform_kind_name(transform);
    kv["transform_window"] = std::to_string(transform_params.window);
    kv["transform_stride"] = std::to_string(transform_params.stride);
    kv["transform_bins"] = std::to_string(transform_params.bins);
    kv["transform_grid"] = std::to_string(transform_params.grid);
    kv["transform_range"] = format_double(transform_params.range);
    kv["model_seed"] = std::to_string(seed);
    return kv;
}

ModelConfig ModelConfig::from_key_values(const std::map<std::string, std::string>& kv) {
    ModelConfig cfg;
    for (const auto& [key, value] : kv) {
        if (key == "arch") cfg.arch = parse_arch(value);
        else if (key == "num_classes") cfg.num_classes = parse_size(value, key);
        else if (key == "input_length") cfg.input_length = parse_size(value, key);
        else if (key == "s2m_window") cfg.s2m_window = parse_size(value, key);
        else if (key == "s2m_stride") cfg.s2m_stride = parse_size(value, key);
        else if (key == "widths") cfg.widths = parse_size_list(value, key);
        else if (key == "blocks") cfg.blocks_per_stage = parse_size_list(value, key);
        else if (key == "frontend_stages") cfg.frontend_stages = parse_size(value, key);
        else if (key == "frontend_width") cfg.frontend_width = parse_size(value, key);
        else if (key == "batch_norm") cfg.batch_norm = parse_bool(value, key);
        else if (key == "stem_pool") cfg.stem_pool = parse_bool(value, key);
        else if (key == "transform") cfg.transform = parse_transform_kind(value);
        else if (key == "transform_window") cfg.transform_params.window = parse_size(value, key);
        else if (key == "transform_stride") cfg.transform_params.stride = parse_size(value, key);
        else if (key == "transform_bins") cfg.transform_params.bins = parse_size(value, key);
        else if (key == "transform_grid") cfg.transform_params.grid = parse_size(value, key);
        else if (key == "transform_range") cfg.transform_params.range = parse_double(value, key);
        else if (key == "model_seed") cfg.seed = parse_size(value, key);
        else throw ConfigError("unknown model config key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

std::size_t ParameterStore::add(const std::string& name, Tensor value) {
    if (index_.count(name)) throw ContractError("duplicate parameter name '" + name + "'");
    const std::size_t id = values_.size();
    index_[name] = id;
    names_.push_back(name);
    values_.push_back(std::move(value));
    return id;
}

Tensor& ParameterStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
    return values_[it->second];
}

const Tensor& ParameterStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
    return values_[it->second];
}

std::size_t ParameterStore::total_size() const {
    std::size_t n = 0;
    for (const Tensor& t : values_) n += t.size();
    return n;
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    build();
}

namespace {

// Registration-side mirror of the forward graph: adds parameters and norm state
// in a fixed order so initialization is reproducible from the seed alone.
struct Builder {
    const ModelConfig& cfg;
    ParameterStore& params;
    std::map<std::string, BatchNormState>& norms;
    Rng rng;

    Builder(const ModelConfig& c, ParameterStore& p, std::map<std::string, BatchNormState>& n)
        : cfg(c), params(p), norms(n), rng(mix_key(c.seed, 0x6d6f64656cULL)) {}

    void kaiming(const std::string& name, std::vector<std::size_t> shape, std::size_t fan_in) {
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        params.add(name, Tensor::random_normal(std::move(shape), rng, 0.0, stddev));
    }

    void conv2d(const std::string& name, std::size_t cout, std::size_t cin, std::size_t kh,
                std::size_t kw) {
        kaiming(name + ".w", {cout, cin, kh, kw}, cin * kh * kw);
    }

    void conv1d(const std::string& name, std::size_t cout, std::size_t cin, std::size_t k) {
        kaiming(name + ".w", {cout, cin, k}, cin * k);
    }

    void norm(const std::string& prefix, std::size_t ch) {
        if (cfg.batch_norm) {
            params.add(prefix + ".gamma", Tensor::ones({ch}));
            params.add(prefix + ".beta", Tensor::zeros({ch}));
            norms[prefix] = BatchNormState{Tensor::zeros({ch}), Tensor::ones({ch})};
        } else {
            params.add(prefix + ".bias", Tensor::zeros({ch}));
        }
    }

    void block2d(const std::string& name, const Stage2d& st, bool first) {
        const std::size_t in_ch = first ? st.in_ch : st.out_ch;
        conv2d(name + ".conv1", st.out_ch, in_ch, 3, 3);
        norm(name + ".norm1", st.out_ch);
        conv2d(name + ".conv2", st.out_ch, st.out_ch, 3, 3);
        norm(name + ".norm2", st.out_ch);
        if (first) {
            // the stride-2 entry block always needs a projection on the skip path
            conv2d(name + ".skip", st.out_ch, in_ch, 1, 1);
            norm(name + ".skip_norm", st.out_ch);
        }
    }

    void backbone(const BackbonePlan& plan, std::size_t in_ch) {
        if (plan.stem) {
            conv2d("stem", cfg.widths.front(), in_ch, 3, 3);
            norm("stem.norm", cfg.widths.front());
        }
        for (std::size_t s = 0; s < plan.stages.size(); ++s) {
            for (std::size_t b = 0; b < plan.stages[s].blocks; ++b) {
                block2d("stage" + std::to_string(s) + ".block" + std::to_string(b),
                        plan.stages[s], b == 0);
            }
        }
    }

    void head(std::size_t features) {
        kaiming("head.w", {features, cfg.num_classes}, features);
        params.add("head.b", Tensor::zeros({cfg.num_classes}));
    }

    void block1d(const std::string& name, std::size_t in_ch, std::size_t out_ch) {
        conv1d(name + ".conv1", out_ch, in_ch, 3);
        norm(name + ".norm1", out_ch);
        conv1d(name + ".conv2", out_ch, out_ch, 3);
        norm(name + ".norm2", out_ch);
        if (in_ch != out_ch) {
            conv1d(name + ".skip", out_ch, in_ch, 1);
            norm(name + ".skip_norm", out_ch);
        }
    }
};

}  // namespace

void Model::build() {
    Builder b(cfg_, params_, norm_states_);
    const std::size_t n = cfg_.input_length;
    switch (cfg_.arch) {
        case Arch::SignetMini: {
            // one trainable filter per channel, standard-normal initialized
            params_.add("s2m.filters",
                        Tensor::random_normal({2, cfg_.s2m_window, cfg_.s2m_window}, b.rng));
            const std::size_t m = slice_rows(n, cfg_.s2m_window, cfg_.s2m_stride);
            const BackbonePlan plan = plan_backbone(cfg_, 2, m, m, true);
            b.backbone(plan, 2);
            feature_dim_ = plan.out_ch;
            b.head(feature_dim_);
            break;
        }
        case Arch::Signet2Mini: {
            std::size_t ch = 2;
            for (std::size_t s = 0; s < cfg_.frontend_stages; ++s) {
                const std::string name = "frontend" + std::to_string(s);
                b.conv1d(name, cfg_.frontend_width, ch, 5);
                b.norm(name + ".norm", cfg_.frontend_width);
                ch = cfg_.frontend_width;
            }
            params_.add("s2m.filters",
                        Tensor::random_normal({ch, cfg_.s2m_window, cfg_.s2m_window}, b.rng));
            const std::size_t reduced = frontend_out_len(n, cfg_.frontend_stages);
            const std::size_t m = slice_rows(reduced, cfg_.s2m_window, cfg_.s2m_stride);
            const BackbonePlan plan = plan_backbone(cfg_, ch, m, m, false);
            b.backbone(plan, ch);
            feature_dim_ = plan.out_ch;
            b.head(feature_dim_);
            break;
        }
        case Arch::Cnn1d: {
            b.conv1d("stem", cfg_.widths.front(), 2, 3);
            b.norm("stem.norm", cfg_.widths.front());
            for (std::size_t i = 1; i < cfg_.widths.size(); ++i) {
                b.block1d("stage" + std::to_string(i - 1), cfg_.widths[i - 1], cfg_.widths[i]);
            }
            feature_dim_ = cfg_.widths.back();
            b.head(feature_dim_);
            break;
        }
        case Arch::Cnn2dNarrow: {
            const std::size_t c1 = cfg_.widths[0];
            const std::size_t c2 = cfg_.widths[std::min<std::size_t>(1, cfg_.widths.size() - 1)];
            const std::size_t c3 = cfg_.widths[std::min<std::size_t>(2, cfg_.widths.size() - 1)];
            b.conv2d("row_conv", c1, 1, 1, 3);    // 1x3 over each channel row
            b.norm("row_conv.norm", c1);
            b.conv2d("pair_conv", c2, c1, 2, 3);  // 2x3 collapsing the I/Q pair
            b.norm("pair_conv.norm", c2);
            b.conv2d("down0", c3, c2, 1, 3);      // 1x3 stride-2 width reduction
            b.norm("down0.norm", c3);
            b.conv2d("down1", c3, c3, 1, 3);
            b.norm("down1.norm", c3);
            feature_dim_ = c3;
            b.head(feature_dim_);
            break;
        }
        case Arch::TransformCnn: {
            std::size_t channels = 0, side = 0;
            transform_geometry(cfg_, channels, side);
            const BackbonePlan plan = plan_backbone(cfg_, channels, side, side, true);
            b.backbone(plan, channels);
            feature_dim_ = plan.out_ch;
            b.head(feature_dim_);
            break;
        }
    }
}

Tensor Model::assemble_input(const std::vector<const IQSample*>& batch) const {
    if (batch.empty()) throw ContractError("assemble_input: empty batch");
    const std::size_t n = cfg_.input_length;
    for (const IQSample* s : batch) {
        if (s->i.size() != n || s->q.size() != n) {
            throw ShapeError("assemble_input: sample length " + std::to_string(s->i.size()) +
                             " does not match configured input length " + std::to_string(n));
        }
    }
    const std::size_t count = batch.size();
    if (cfg_.arch == Arch::TransformCnn) {
        std::size_t channels = 0, side = 0;
        transform_geometry(cfg_, channels, side);
        Tensor out({count, channels, side, side});
        const std::size_t block = channels * side * side;
        parallel_for_each(count, [&](std::size_t s) {
            Tensor ci({n}, batch[s]->i);
            Tensor cq({n}, batch[s]->q);
            const Tensor img = transform_image(cfg_.transform, ci, cq, cfg_.transform_params);
            std::copy(img.data(), img.data() + block, out.data() + s * block);
        });
        return out;
    }
    Tensor out = cfg_.arch == Arch::Cnn2dNarrow ? Tensor({count, 1, 2, n})
                                                : Tensor({count, 2, n});
    for (std::size_t s = 0; s < count; ++s) {
        double* row = out.data() + s * 2 * n;
        std::copy(batch[s]->i.begin(), batch[s]->i.end(), row);
        std::copy(batch[s]->q.begin(), batch[s]->q.end(), row + n);
    }
    return out;
}

Tensor Model::assemble_input(const SignalDataset& ds, const std::vector<std::size_t>& indices) const {
    std::vector<const IQSample*> batch;
    batch.reserve(indices.size());
    for (std::size_t idx : indices) batch.push_back(&ds.samples.at(idx));
    return assemble_input(batch);
}

namespace {

// Forward-side mirror of Builder: fetches parameters by the same names.
struct Graph {
    Tape& tape;
    const ModelConfig& cfg;
    std::map<std::string, Var>& pmap;
    std::map<std::string, BatchNormState>& norms;
    NormMode mode;

    Var p(const std::string& name) const {
        auto it = pmap.find(name);
        if (it == pmap.end()) throw ContractError("forward: missing parameter '" + name + "'");
        return it->second;
    }

    Var norm(const std::string& prefix, Var x) {
        if (cfg.batch_norm) {
            return batch_norm(x, p(prefix + ".gamma"), p(prefix + ".beta"), norms.at(prefix),
                              mode);
        }
        return add_channel_bias(x, p(prefix + ".bias"));
    }

    Var block2d(const std::string& name, Var x, bool first) {
        const int stride = first ? 2 : 1;
        Var y = conv2d(x, p(name + ".conv1.w"), stride, 1);
        y = relu(norm(name + ".norm1", y));
        y = conv2d(y, p(name + ".conv2.w"), 1, 1);
        y = norm(name + ".norm2", y);
        Var skip = x;
        if (first) {
            skip = conv2d(x, p(name + ".skip.w"), stride, 0);
            skip = norm(name + ".skip_norm", skip);
        }
        return relu(add(y, skip));
    }

    Var backbone(const BackbonePlan& plan, Var x) {
        if (plan.stem) {
            x = relu(norm("stem.norm", conv2d(x, p("stem.w"), 2, 1)));
            if (plan.stem_pooled) x = max_pool2d(x, 2);
        }
        for (std::size_t s = 0; s < plan.stages.size(); ++s) {
            for (std::size_t b = 0; b < plan.stages[s].blocks; ++b) {
                x = block2d("stage" + std::to_string(s) + ".block" + std::to_string(b), x,
                            b == 0);
            }
        }
        return global_avg_pool(x);
    }

    Var block1d(const std::string& name, Var x, std::size_t in_ch, std::size_t out_ch) {
        Var y = conv1d(x, p(name + ".conv1.w"), 1, 1);
        y = relu(norm(name + ".norm1", y));
        y = conv1d(y, p(name + ".conv2.w"), 1, 1);
        y = norm(name + ".norm2", y);
        Var skip = x;
        if (in_ch != out_ch) {
            skip = conv1d(x, p(name + ".skip.w"), 1, 0);
            skip = norm(name + ".skip_norm", skip);
        }
        return relu(add(y, skip));
    }
};

void expect_shape(const Tensor& input, std::size_t rank, const char* what) {
    if (input.rank() != rank) {
        throw ShapeError(std::string("forward: ") + what + " input expected rank " +
                         std::to_string(rank) + ", got " + input.shape_str());
    }
}

}  // namespace

ForwardResult Model::forward(Tape& tape, const Tensor& input, NormMode mode) {
    ForwardResult result;
    for (const std::string& name : params_.names()) {
        result.params.emplace(name, tape.param(params_.at(name)));
    }
    Graph g{tape, cfg_, result.params, norm_states_, mode};
    const std::size_t n = cfg_.input_length;
    Var x = tape.leaf(input);
    Var features;
    switch (cfg_.arch) {
        case Arch::SignetMini: {
            expect_shape(input, 3, "signet_mini");
            const std::size_t m = slice_rows(n, cfg_.s2m_window, cfg_.s2m_stride);
            Var img = s2m_image(x, g.p("s2m.filters"), cfg_.s2m_stride);
            const BackbonePlan plan = plan_backbone(cfg_, 2, m, m, true);
            features = g.backbone(plan, img);
            break;
        }
        case Arch::Signet2Mini: {
            expect_shape(input, 3, "signet2_mini");
            Var h = x;
            std::size_t ch = 2;
            for (std::size_t s = 0; s < cfg_.frontend_stages; ++s) {
                const std::string name = "frontend" + std::to_string(s);
                h = conv1d(h, g.p(name + ".w"), 2, 2);
                h = relu(g.norm(name + ".norm", h));
                ch = cfg_.frontend_width;
            }
            Var img = s2m_image(h, g.p("s2m.filters"), cfg_.s2m_stride);
            const std::size_t reduced = frontend_out_len(n, cfg_.frontend_stages);
            const std::size_t m = slice_rows(reduced, cfg_.s2m_window, cfg_.s2m_stride);
            const BackbonePlan plan = plan_backbone(cfg_, ch, m, m, false);
            features = g.backbone(plan, img);
            break;
        }
        case Arch::Cnn1d: {
            expect_shape(input, 3, "cnn1d");
            Var h = conv1d(x, g.p("stem.w"), 1, 1);
            h = relu(g.norm("stem.norm", h));
            std::size_t len = n;
            for (std::size_t i = 1; i < cfg_.widths.size(); ++i) {
                h = g.block1d("stage" + std::to_string(i - 1), h, cfg_.widths[i - 1],
                              cfg_.widths[i]);
                if (len >= 2) {
                    h = max_pool1d(h, 2);
                    len /= 2;
                }
            }
            const Tensor& hv = tape.value(h);
            features = global_avg_pool(
                reshape(h, {hv.dim(0), hv.dim(1), 1, hv.dim(2)}));
            break;
        }
        case Arch::Cnn2dNarrow: {
            expect_shape(input, 4, "cnn2d_narrow");
            Var h = conv2d_rect(x, g.p("row_conv.w"), 1, 1, 0, 1);
            h = relu(g.norm("row_conv.norm", h));
            h = conv2d_rect(h, g.p("pair_conv.w"), 1, 1, 0, 1);
            h = relu(g.norm("pair_conv.norm", h));
            h = conv2d_rect(h, g.p("down0.w"), 1, 2, 0, 1);
            h = relu(g.norm("down0.norm", h));
            h = conv2d_rect(h, g.p("down1.w"), 1, 2, 0, 1);
            h = relu(g.norm("down1.norm", h));
            features = global_avg_pool(h);
            break;
        }
        case Arch::TransformCnn: {
            expect_shape(input, 4, "transform_cnn");
            std::size_t channels = 0, side = 0;
            transform_geometry(cfg_, channels, side);
            const BackbonePlan plan = plan_backbone(cfg_, channels, side, side, true);
            features = g.backbone(plan, x);
            break;
        }
    }
    result.features = features;
    result.logits = dense(features, g.p("head.w"), g.p("head.b"));
    return result;
}

std::uint64_t Model::architecture_hash() const {
    std::uint64_t h = mix_key(0x53474e45544152ULL, static_cast<std::uint64_t>(cfg_.arch));
    h = mix_key(h, cfg_.num_classes);
    h = mix_key(h, cfg_.input_length);
    h = mix_key(h, cfg_.s2m_window);
    h = mix_key(h, cfg_.s2m_stride);
    h = mix_key(h, cfg_.widths.size());
    for (std::size_t w : cfg_.widths) h = mix_key(h, w);
    h = mix_key(h, cfg_.blocks_per_stage.size());
    for (std::size_t b : cfg_.blocks_per_stage) h = mix_key(h, b);
    h = mix_key(h, cfg_.frontend_stages);
    h = mix_key(h, cfg_.frontend_width);
    h = mix_key(h, cfg_.batch_norm ? 1 : 0);
    h = mix_key(h, cfg_.stem_pool ? 1 : 0);
    h = mix_key(h, static_cast<std::uint64_t>(cfg_.transform));
    h = mix_key(h, cfg_.transform_params.window);
    h = mix_key(h, cfg_.transform_params.stride);
    h = mix_key(h, cfg_.transform_params.bins);
    h = mix_key(h, cfg_.transform_params.grid);
    h = mix_double(h, cfg_.transform_params.range);
    return h;
}

namespace {

void put_named_tensor(ByteWriter& w, const std::string& name, const Tensor& t) {
    w.put_string(name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.put_bytes(t.data(), t.size() * sizeof(double));
}

std::string config_echo_text(const ModelConfig& cfg) {
    std::string text;
    for (const auto& [key, value] : cfg.to_key_values()) {
        text += key;
        text += '=';
        text += value;
        text += '\n';
    }
    return text;
}

std::map<std::string, std::string> parse_echo_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ContainerError(ContainerError::Fault::Malformed,
                                 "checkpoint config echo line without '=': " + line);
        }
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
    ByteWriter w;
    w.put_bytes(kCheckpointMagic.data(), kCheckpointMagic.size());
    w.put<std::uint16_t>(kCheckpointVersion);
    w.put<std::uint64_t>(model.architecture_hash());

    const std::string echo = config_echo_text(model.config());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(echo.size()));
    w.put_bytes(echo.data(), echo.size());

    const ParameterStore& params = model.params();
    std::size_t tensor_count = params.names().size();
    tensor_count += 2 * model.norm_states().size();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(tensor_count));
    for (const std::string& name : params.names()) put_named_tensor(w, name, params.at(name));
    for (const auto& [name, state] : model.norm_states()) {
        put_named_tensor(w, name + ".running_mean", state.running_mean);
        put_named_tensor(w, name + ".running_var", state.running_var);
    }
    w.put<std::uint32_t>(crc32(w.bytes.data(), w.bytes.size()));
    write_file_bytes(path, w.bytes);
}

namespace {

struct CheckpointContents {
    std::uint64_t arch_hash = 0;
    ModelConfig config;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

CheckpointContents read_checkpoint(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < kCheckpointMagic.size() + sizeof(std::uint32_t)) {
        throw ContainerError(ContainerError::Fault::Truncated, "file smaller than header");
    }
    if (!std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin())) {
        throw ContainerError(ContainerError::Fault::BadMagic, "magic bytes are not 'SGCK'");
    }
    const std::size_t body_len = bytes.size() - sizeof(std::uint32_t);
    std::uint32_t stored = 0;
    std::memcpy(&stored, bytes.data() + body_len, sizeof(stored));
    const std::uint32_t computed = crc32(bytes.data(), body_len);
    if (stored != computed) {
        throw ContainerError(ContainerError::Fault::Checksum,
                             "checkpoint checksum mismatch: stored " + std::to_string(stored) +
                                 ", computed " + std::to_string(computed));
    }

    ByteReader r{bytes.data(), body_len, kCheckpointMagic.size()};
    const auto version = r.get<std::uint16_t>();
    if (version != kCheckpointVersion) {
        throw ContainerError(ContainerError::Fault::Version,
                             "unsupported checkpoint version " + std::to_string(version));
    }
    CheckpointContents out;
    out.arch_hash = r.get<std::uint64_t>();
    const auto echo_len = r.get<std::uint32_t>();
    std::string echo(echo_len, '\0');
    r.get_bytes(echo.data(), echo_len);
    try {
        out.config = ModelConfig::from_key_values(parse_echo_text(echo));
    } catch (const ConfigError& e) {
        throw ContainerError(ContainerError::Fault::Malformed,
                             std::string("checkpoint config echo: ") + e.what());
    }

    const auto tensor_count = r.get<std::uint32_t>();
    out.tensors.reserve(tensor_count);
    for (std::uint32_t i = 0; i < tensor_count; ++i) {
        std::string name = r.get_string();
        const auto rank = r.get<std::uint8_t>();
        std::vector<std::size_t> shape(rank);
        std::size_t total = 1;
        for (auto& d : shape) {
            d = r.get<std::uint32_t>();
            total *= d;
        }
        Tensor t(shape);
        r.get_bytes(t.data(), total * sizeof(double));
        out.tensors.emplace_back(std::move(name), std::move(t));
    }
    if (r.pos != body_len) {
        throw ContainerError(ContainerError::Fault::Malformed,
                             std::to_string(body_len - r.pos) + " unexpected trailing bytes");
    }
    return out;
}

void install_tensors(Model& model, const CheckpointContents& contents) {
    std::set<std::string> seen;
    for (const auto& [name, tensor] : contents.tensors) {
        if (!seen.insert(name).second) {
            throw ContainerError(ContainerError::Fault::Malformed,
                                 "duplicate tensor '" + name + "' in checkpoint");
        }
        if (model.params().contains(name)) {
            Tensor& dst = model.params().at(name);
            if (!dst.same_shape(tensor)) {
                throw ContainerError(ContainerError::Fault::Malformed,
                                     "tensor '" + name + "' has shape " + tensor.shape_str() +
                                         ", model expects " + dst.shape_str());
            }
            dst = tensor;
            continue;
        }
        // batch-norm buffers: <layer>.running_mean / <layer>.running_var
        const auto dot = name.rfind('.');
        const std::string layer = dot == std::string::npos ? "" : name.substr(0, dot);
        const std::string field = dot == std::string::npos ? "" : name.substr(dot + 1);
        auto it = model.norm_states().find(layer);
        if (it == model.norm_states().end() ||
            (field != "running_mean" && field != "running_var")) {
            throw ContainerError(ContainerError::Fault::Malformed,
                                 "checkpoint tensor '" + name + "' has no home in the model");
        }
        Tensor& dst = field == "running_mean" ? it->second.running_mean : it->second.running_var;
        if (!dst.same_shape(tensor)) {
            throw ContainerError(ContainerError::Fault::Malformed,
                                 "tensor '" + name + "' has shape " + tensor.shape_str() +
                                     ", model expects " + dst.shape_str());
        }
        dst = tensor;
    }
    std::size_t expected = model.params().names().size() + 2 * model.norm_states().size();
    if (seen.size() != expected) {
        throw ContainerError(ContainerError::Fault::Malformed,
                             "checkpoint holds " + std::to_string(seen.size()) +
                                 " tensors, model needs " + std::to_string(expected));
    }
}

}  // namespace

Model load_checkpoint(const std::string& path) {
    CheckpointContents contents = read_checkpoint(path);
    Model model(contents.config);
    if (model.architecture_hash() != contents.arch_hash) {
        throw ContainerError(ContainerError::Fault::Malformed,
                             "stored architecture hash does not match the stored config");
    }
    install_tensors(model, contents);
    return model;
}

void load_checkpoint_into(Model& model, const std::string& path) {
    CheckpointContents contents = read_checkpoint(path);
    if (model.architecture_hash() != contents.arch_hash) {
        char want[24], got[24];
        std::snprintf(want, sizeof(want), "%016" PRIx64, model.architecture_hash());
        std::snprintf(got, sizeof(got), "%016" PRIx64, contents.arch_hash);
        throw ConfigError(std::string("checkpoint architecture hash ") + got +
                          " does not match the model's " + want);
    }
    install_tensors(model, contents);
}

}  // namespace signet
