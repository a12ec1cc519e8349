#include "signet/runconfig.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace signet {

namespace {

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    const std::size_t from = s.find_first_not_of(ws);
    if (from == std::string::npos) return "";
    const std::size_t to = s.find_last_not_of(ws);
    return s.substr(from, to - from + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
    }
}

long long parse_int(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
    }
}

std::size_t parse_size(const std::string& value, const std::string& key) {
    const long long v = parse_int(value, key);
    if (v < 0) throw ConfigError("key '" + key + "': expected a non-negative integer");
    return static_cast<std::size_t>(v);
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + value +
                          "'");
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_ints(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_double(values[i]);
    }
    return out;
}

std::string join_strings(const std::vector<std::string>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += values[i];
    }
    return out;
}

}  // namespace

KeyValues parse_key_value_text(const std::string& text) {
    KeyValues kv;
    std::stringstream ss(text);
    std::size_t line_no = 0;
    for (std::string line; std::getline(ss, line);) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key=value, got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues read_key_value_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_key_value_text(text);
}

void apply_overrides(KeyValues& kv, const std::vector<std::string>& args) {
    for (std::size_t at = 0; at < args.size(); ++at) {
        const std::string& arg = args[at];
        if (arg.rfind("--", 0) != 0 || arg.size() == 2) {
            throw ConfigError("expected --key value, got '" + arg + "'");
        }
        const std::size_t eq = arg.find('=');
        if (eq != std::string::npos) {
            kv[arg.substr(2, eq - 2)] = arg.substr(eq + 1);
        } else {
            if (at + 1 == args.size()) {
                throw ConfigError("flag '" + arg + "' is missing its value");
            }
            kv[arg.substr(2)] = args[++at];
        }
    }
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"rml-mini", "sig2019-mini"};
    return names;
}

KeyValues preset_key_values(const std::string& name) {
    KeyValues kv;
    if (name == "rml-mini") {
        // 11 schemes on length-128 samples over 20 SNR levels, reduced sample count
        kv["synth.schemes"] = "BPSK,QPSK,8PSK,2FSK,4FSK,8FSK,16QAM,32QAM,64QAM,4PAM,8PAM";
        kv["synth.symbols"] = "16";
        std::vector<int> snrs;
        for (int snr = -20; snr <= 18; snr += 2) snrs.push_back(snr);
        kv["synth.snr_grid"] = join_ints(snrs);
        kv["synth.per_cell"] = "50";
        kv["model.arch"] = "signet_mini";
        kv["model.num_classes"] = "11";
        kv["model.input_length"] = "128";
        return kv;
    }
    if (name == "sig2019-mini") {
        // all 12 schemes on length-512 samples over 26 SNR levels, reduced sample count
        kv["synth.schemes"] = "all";
        kv["synth.symbols"] = "64";
        std::vector<int> snrs;
        for (int snr = -20; snr <= 30; snr += 2) snrs.push_back(snr);
        kv["synth.snr_grid"] = join_ints(snrs);
        kv["synth.per_cell"] = "50";
        kv["model.arch"] = "signet_mini";
        kv["model.num_classes"] = "12";
        kv["model.input_length"] = "512";
        return kv;
    }
    throw ConfigError("unknown preset '" + name + "' (expected rml-mini or sig2019-mini)");
}

RunConfig RunConfig::from_key_values(const KeyValues& given) {
    KeyValues kv = given;
    const auto preset_it = kv.find("preset");
    if (preset_it != kv.end()) {
        KeyValues expanded = preset_key_values(preset_it->second);
        kv.erase("preset");
        for (const auto& [key, value] : kv) expanded[key] = value;  // explicit keys win
        kv = std::move(expanded);
    }

    RunConfig cfg;
    KeyValues model_kv;
    auto take = [&](const std::string& key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };

    // section: synthesis
    if (const auto* v = take("synth.schemes")) {
        cfg.synth.schemes = (*v == "all") ? std::vector<std::string>{} : split_commas(*v);
    }
    if (const auto* v = take("synth.symbols")) cfg.synth.symbols_per_sample = parse_size(*v, "synth.symbols");
    if (const auto* v = take("synth.oversampling")) cfg.synth.oversampling = parse_size(*v, "synth.oversampling");
    if (const auto* v = take("synth.rolloff_lo")) cfg.synth.rolloff_lo = parse_double(*v, "synth.rolloff_lo");
    if (const auto* v = take("synth.rolloff_hi")) cfg.synth.rolloff_hi = parse_double(*v, "synth.rolloff_hi");
    if (const auto* v = take("synth.phase_lo")) cfg.synth.phase_lo = parse_double(*v, "synth.phase_lo");
    if (const auto* v = take("synth.phase_hi")) cfg.synth.phase_hi = parse_double(*v, "synth.phase_hi");
    if (const auto* v = take("synth.cfo_lo")) cfg.synth.cfo_lo = parse_double(*v, "synth.cfo_lo");
    if (const auto* v = take("synth.cfo_hi")) cfg.synth.cfo_hi = parse_double(*v, "synth.cfo_hi");
    if (const auto* v = take("synth.snr_grid")) {
        cfg.synth.snr_grid_db.clear();
        if (*v != "default") {
            for (const std::string& item : split_commas(*v)) {
                cfg.synth.snr_grid_db.push_back(static_cast<int>(parse_int(item, "synth.snr_grid")));
            }
        }
    }
    if (const auto* v = take("synth.per_cell")) cfg.synth.samples_per_class_per_snr = parse_size(*v, "synth.per_cell");
    if (const auto* v = take("synth.seed")) cfg.synth.seed = parse_u64(*v, "synth.seed");

    // section: model, delegated with the prefix stripped
    for (const auto& [key, value] : kv) {
        if (key.rfind("model.", 0) == 0) model_kv[key.substr(6)] = value;
    }
    if (!model_kv.empty()) {
        try {
            cfg.model = ModelConfig::from_key_values(model_kv);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("model section: ") + e.what());
        }
    }

    // section: training
    if (const auto* v = take("train.epochs")) cfg.train.epochs = parse_size(*v, "train.epochs");
    if (const auto* v = take("train.batch_size")) cfg.train.batch_size = parse_size(*v, "train.batch_size");
    if (const auto* v = take("train.optimizer")) cfg.train.optimizer.kind = parse_optimizer(*v);
    if (const auto* v = take("train.momentum")) cfg.train.optimizer.momentum = parse_double(*v, "train.momentum");
    if (const auto* v = take("train.beta1")) cfg.train.optimizer.beta1 = parse_double(*v, "train.beta1");
    if (const auto* v = take("train.beta2")) cfg.train.optimizer.beta2 = parse_double(*v, "train.beta2");
    if (const auto* v = take("train.eps")) cfg.train.optimizer.eps = parse_double(*v, "train.eps");
    if (const auto* v = take("train.rho")) cfg.train.optimizer.rho = parse_double(*v, "train.rho");
    if (const auto* v = take("train.adadelta_eps")) cfg.train.optimizer.adadelta_eps = parse_double(*v, "train.adadelta_eps");
    if (const auto* v = take("train.weight_decay")) cfg.train.optimizer.weight_decay = parse_double(*v, "train.weight_decay");
    if (const auto* v = take("train.lr")) cfg.train.initial_lr = parse_double(*v, "train.lr");
    if (const auto* v = take("train.warmup_frac")) cfg.train.warmup_frac = parse_double(*v, "train.warmup_frac");
    if (const auto* v = take("train.warmup_steps")) {
        cfg.train.warmup_steps = (*v == "auto") ? TrainConfig::kDeriveWarmup
                                                : parse_size(*v, "train.warmup_steps");
    }
    if (const auto* v = take("train.clip_norm")) cfg.train.clip_norm = parse_double(*v, "train.clip_norm");
    if (const auto* v = take("train.early_stop_val_acc")) cfg.train.early_stop_val_acc = parse_double(*v, "train.early_stop_val_acc");
    if (const auto* v = take("train.eval_batch_size")) cfg.train.eval_batch_size = parse_size(*v, "train.eval_batch_size");
    if (const auto* v = take("train.seed")) cfg.train.seed = parse_u64(*v, "train.seed");

    // section: split
    if (const auto* v = take("split.train_frac")) cfg.split.train_frac = parse_double(*v, "split.train_frac");
    if (const auto* v = take("split.val_frac")) cfg.split.val_frac = parse_double(*v, "split.val_frac");
    if (const auto* v = take("split.test_frac")) cfg.split.test_frac = parse_double(*v, "split.test_frac");
    if (const auto* v = take("split.seed")) cfg.split.seed = parse_u64(*v, "split.seed");

    // paths and command arguments
    if (const auto* v = take("eta")) {
        cfg.etas.clear();
        for (const std::string& item : split_commas(*v)) {
            cfg.etas.push_back(parse_double(item, "eta"));
        }
        if (cfg.etas.empty()) throw ConfigError("key 'eta': expected at least one value");
    }
    if (const auto* v = take("dataset")) cfg.dataset_path = *v;
    if (const auto* v = take("checkpoint")) cfg.checkpoint_path = *v;
    if (const auto* v = take("run_dir")) cfg.run_dir = *v;
    if (const auto* v = take("output")) cfg.output_path = *v;
    if (const auto* v = take("eval_split")) cfg.eval_split = *v;
    if (const auto* v = take("transform_method")) cfg.transform_method = *v;
    if (const auto* v = take("sample_index")) cfg.sample_index = parse_size(*v, "sample_index");
    if (const auto* v = take("mutation")) cfg.mutation = *v;

    // reject anything unconsumed (model.* keys were consumed via the submap)
    const KeyValues resolved = cfg.to_key_values();
    for (const auto& [key, value] : kv) {
        if (key.rfind("model.", 0) == 0) continue;
        if (resolved.count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
    }

    if (cfg.eval_split != "train" && cfg.eval_split != "val" && cfg.eval_split != "test") {
        throw ConfigError("eval_split must be train, val or test, got '" + cfg.eval_split + "'");
    }
    cfg.synth = cfg.synth.resolved();  // expands defaults, validates ranges
    cfg.model.validate();
    return cfg;
}

KeyValues RunConfig::to_key_values() const {
    KeyValues kv;
    kv["synth.schemes"] = synth.schemes.empty() ? "all" : join_strings(synth.schemes);
    kv["synth.symbols"] = std::to_string(synth.symbols_per_sample);
    kv["synth.oversampling"] = std::to_string(synth.oversampling);
    kv["synth.rolloff_lo"] = format_double(synth.rolloff_lo);
    kv["synth.rolloff_hi"] = format_double(synth.rolloff_hi);
    kv["synth.phase_lo"] = format_double(synth.phase_lo);
    kv["synth.phase_hi"] = format_double(synth.phase_hi);
    kv["synth.cfo_lo"] = format_double(synth.cfo_lo);
    kv["synth.cfo_hi"] = format_double(synth.cfo_hi);
    kv["synth.snr_grid"] = synth.snr_grid_db.empty() ? "default" : join_ints(synth.snr_grid_db);
    kv["synth.per_cell"] = std::to_string(synth.samples_per_class_per_snr);
    kv["synth.seed"] = std::to_string(synth.seed);

    for (const auto& [key, value] : model.to_key_values()) kv["model." + key] = value;

    kv["train.epochs"] = std::to_string(train.epochs);
    kv["train.batch_size"] = std::to_string(train.batch_size);
    kv["train.optimizer"] = optimizer_name(train.optimizer.kind);
    kv["train.momentum"] = format_double(train.optimizer.momentum);
    kv["train.beta1"] = format_double(train.optimizer.beta1);
    kv["train.beta2"] = format_double(train.optimizer.beta2);
    kv["train.eps"] = format_double(train.optimizer.eps);
    kv["train.rho"] = format_double(train.optimizer.rho);
    kv["train.adadelta_eps"] = format_double(train.optimizer.adadelta_eps);
    kv["train.weight_decay"] = format_double(train.optimizer.weight_decay);
    kv["train.lr"] = format_double(train.initial_lr);
    kv["train.warmup_frac"] = format_double(train.warmup_frac);
    kv["train.warmup_steps"] = train.warmup_steps == TrainConfig::kDeriveWarmup
                                   ? "auto"
                                   : std::to_string(train.warmup_steps);
    kv["train.clip_norm"] = format_double(train.clip_norm);
    kv["train.early_stop_val_acc"] = format_double(train.early_stop_val_acc);
    kv["train.eval_batch_size"] = std::to_string(train.eval_batch_size);
    kv["train.seed"] = std::to_string(train.seed);

    kv["split.train_frac"] = format_double(split.train_frac);
    kv["split.val_frac"] = format_double(split.val_frac);
    kv["split.test_frac"] = format_double(split.test_frac);
    kv["split.seed"] = std::to_string(split.seed);

    kv["eta"] = join_doubles(etas);
    kv["dataset"] = dataset_path;
    kv["checkpoint"] = checkpoint_path;
    kv["run_dir"] = run_dir;
    kv["output"] = output_path;
    kv["eval_split"] = eval_split;
    kv["transform_method"] = transform_method;
    kv["sample_index"] = std::to_string(sample_index);
    kv["mutation"] = mutation;
    return kv;
}

std::string RunConfig::echo() const {
    std::string out;
    for (const auto& [key, value] : to_key_values()) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    }
    return out;
}

}  // namespace signet
