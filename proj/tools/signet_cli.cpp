// Command-line front end: dataset synthesis, training runs, checkpoint
// evaluation, transform inspection, and numeric self-verification, all driven
// by flat key=value configs with --key value overrides.
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime/numeric error.
// `verify` exits with the number of failed checks.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "signet/dataset.hpp"
#include "signet/errors.hpp"
#include "signet/evaluation.hpp"
#include "signet/finite_diff.hpp"
#include "signet/models.hpp"
#include "signet/rng.hpp"
#include "signet/runconfig.hpp"
#include "signet/sigsynth.hpp"
#include "signet/tape.hpp"
#include "signet/training.hpp"
#include "signet/transforms.hpp"

namespace {

using namespace signet;

void print_usage(std::FILE* out) {
    std::fputs(
        "usage: signet_cli <command> [--config FILE] [--key value ...]\n"
        "\n"
        "commands:\n"
        "  generate   synthesize a labeled IQ dataset        (needs: dataset)\n"
        "  train      split, train, checkpoint, report       (needs: dataset)\n"
        "  eval       evaluate a checkpoint on a split       (needs: checkpoint, dataset)\n"
        "  transform  dump one sample's matrix image as CSV  (needs: dataset,\n"
        "             transform_method, output)\n"
        "  verify     run the numeric self-checks; exit code = failed checks\n"
        "\n"
        "Keys come from --config files (key=value lines) overridden by --key value\n"
        "flags. `--preset rml-mini` or `--preset sig2019-mini` seeds the config.\n"
        "The SIGNET_RUNS environment variable sets the default run-directory root.\n",
        out);
}

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

void ensure_parent_dir(const std::string& path) {
    const std::filesystem::path parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_text_file(const std::string& path, const std::string& text) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text) || !out.flush()) {
        throw ContainerError(ContainerError::Fault::Io, "cannot write '" + path + "'");
    }
}

void check_model_matches_dataset(const ModelConfig& model, const SignalDataset& ds) {
    if (model.num_classes != ds.class_names.size()) {
        throw ConfigError("model.num_classes=" + std::to_string(model.num_classes) +
                          " but the dataset has " + std::to_string(ds.class_names.size()) +
                          " classes");
    }
    if (model.input_length != ds.sample_length()) {
        throw ConfigError("model.input_length=" + std::to_string(model.input_length) +
                          " but the dataset samples have length " +
                          std::to_string(ds.sample_length()));
    }
}

// ---------------------------------------------------------------- generate

int cmd_generate(const RunConfig& cfg) {
    if (cfg.dataset_path.empty()) throw ConfigError("generate needs --dataset <output path>");
    const SignalDataset ds = generate_dataset(cfg.synth);
    ensure_parent_dir(cfg.dataset_path);
    write_dataset(ds, cfg.dataset_path);
    write_text_file(cfg.dataset_path + ".config", cfg.echo());
    std::printf("wrote %s: %zu samples, %zu classes, %zu snr levels, length %zu\n",
                cfg.dataset_path.c_str(), ds.samples.size(), ds.class_names.size(),
                ds.snr_grid.size(), ds.sample_length());
    return 0;
}

// ------------------------------------------------------------------- train

std::string default_run_dir(const RunConfig& cfg) {
    const char* root = std::getenv("SIGNET_RUNS");
    const std::string base = root && *root ? root : "runs";
    return base + "/train-" + arch_name(cfg.model.arch) + "-seed" +
           std::to_string(cfg.train.seed);
}

int cmd_train(const RunConfig& cfg) {
    if (cfg.dataset_path.empty()) throw ConfigError("train needs --dataset <input path>");
    const SignalDataset ds = read_dataset(cfg.dataset_path);
    check_model_matches_dataset(cfg.model, ds);
    const DatasetSplit split = split_dataset(ds, cfg.split);
    const std::string base_dir = cfg.run_dir.empty() ? default_run_dir(cfg) : cfg.run_dir;

    for (double eta : cfg.etas) {
        const std::string run_dir =
            cfg.etas.size() == 1 ? base_dir : base_dir + "-eta" + fmt_g(eta);
        const std::vector<std::size_t> train_idx =
            eta == 1.0 ? split.train : subsample_training(ds, split.train, eta, cfg.split.seed);

        RunConfig resolved = cfg;  // per-run echo reproduces exactly this run
        resolved.etas = {eta};
        resolved.run_dir = run_dir;
        std::filesystem::create_directories(run_dir);
        write_text_file(run_dir + "/config.txt", resolved.echo());

        std::printf("run %s: %zu train / %zu val / %zu test samples\n", run_dir.c_str(),
                    train_idx.size(), split.val.size(), split.test.size());
        Model model(cfg.model);
        const TrainResult result = train(model, ds, train_idx, split.val, cfg.train, run_dir);
        for (const EpochStats& epoch : result.history) {
            std::printf("epoch %zu/%zu train_loss=%.6f train_acc=%.4f val_acc=%.4f lr=%s (%.1fs)\n",
                        epoch.epoch, cfg.train.epochs, epoch.train_loss, epoch.train_acc,
                        epoch.val_acc, fmt_g(epoch.lr).c_str(), epoch.seconds);
        }
        if (result.diverged) {
            std::fprintf(stderr, "error: training diverged: %s\n",
                         result.divergence_message.c_str());
            return 2;
        }
        std::printf("best epoch %zu val_acc=%.4f\n", result.best_epoch, result.best_val_acc);

        const EvalReport report = evaluate(model, ds, split.test, cfg.train.eval_batch_size);
        write_report(report, ds.class_names, run_dir + "/report.txt");
        std::printf("test accuracy %.4f (report: %s/report.txt)\n", report.accuracy,
                    run_dir.c_str());
    }
    return 0;
}

// -------------------------------------------------------------------- eval

int cmd_eval(const RunConfig& cfg) {
    if (cfg.checkpoint_path.empty()) throw ConfigError("eval needs --checkpoint <path>");
    if (cfg.dataset_path.empty()) throw ConfigError("eval needs --dataset <path>");
    Model model = load_checkpoint(cfg.checkpoint_path);
    const SignalDataset ds = read_dataset(cfg.dataset_path);
    check_model_matches_dataset(model.config(), ds);

    const DatasetSplit split = split_dataset(ds, cfg.split);
    const std::vector<std::size_t>& indices = cfg.eval_split == "train" ? split.train
                                              : cfg.eval_split == "val" ? split.val
                                                                        : split.test;
    const EvalReport report = evaluate(model, ds, indices, cfg.train.eval_batch_size);
    const std::string text = report_text(report, ds.class_names);
    std::printf("split=%s\n%s", cfg.eval_split.c_str(), text.c_str());
    if (!cfg.output_path.empty()) {
        write_text_file(cfg.output_path, text);
        std::printf("wrote %s\n", cfg.output_path.c_str());
    }
    return 0;
}

// --------------------------------------------------------------- transform

Tensor filter_channel(const Tensor& filters, std::size_t channel) {
    const std::size_t k = filters.dim(1);
    Tensor filter({k, k});
    std::copy(filters.data() + channel * k * k, filters.data() + (channel + 1) * k * k,
              filter.data());
    return filter;
}

int cmd_transform(const RunConfig& cfg) {
    if (cfg.dataset_path.empty()) throw ConfigError("transform needs --dataset <path>");
    if (cfg.transform_method.empty()) throw ConfigError("transform needs --transform_method");
    if (cfg.output_path.empty()) throw ConfigError("transform needs --output <csv path>");
    const SignalDataset ds = read_dataset(cfg.dataset_path);
    if (cfg.sample_index >= ds.samples.size()) {
        throw ConfigError("sample_index " + std::to_string(cfg.sample_index) +
                          " out of range (dataset has " + std::to_string(ds.samples.size()) +
                          " samples)");
    }
    const IQSample& sample = ds.samples[cfg.sample_index];
    const Tensor i({sample.i.size()}, sample.i);
    const Tensor q({sample.q.size()}, sample.q);

    Tensor image;
    if (cfg.transform_method == "s2m") {
        // trained filters from a checkpoint when given, otherwise the configured
        // model's fresh initialization
        Model model = cfg.checkpoint_path.empty() ? Model(cfg.model)
                                                  : load_checkpoint(cfg.checkpoint_path);
        if (!model.params().contains("s2m.filters")) {
            throw ConfigError("architecture '" + arch_name(model.config().arch) +
                              "' has no s2m filters to dump");
        }
        const Tensor& filters = model.params().at("s2m.filters");
        if (filters.dim(0) < 2) {
            throw ConfigError("s2m dump needs per-channel filters for both I and Q");
        }
        image = s2m_sample(i, q, filter_channel(filters, 0), filter_channel(filters, 1),
                           model.config().s2m_stride);
    } else {
        const TransformKind kind = parse_transform_kind(cfg.transform_method);
        image = transform_image(kind, i, q, cfg.model.transform_params);
    }

    std::string csv = "channels," + std::to_string(image.dim(0)) + ",height," +
                      std::to_string(image.dim(1)) + ",width," + std::to_string(image.dim(2)) +
                      "\n";
    char buf[64];
    for (std::size_t c = 0; c < image.dim(0); ++c) {
        if (c) csv += '\n';
        for (std::size_t r = 0; r < image.dim(1); ++r) {
            for (std::size_t col = 0; col < image.dim(2); ++col) {
                if (col) csv += ',';
                std::snprintf(buf, sizeof(buf), "%.12g", image.at(c, r, col));
                csv += buf;
            }
            csv += '\n';
        }
    }
    write_text_file(cfg.output_path, csv);
    std::printf("wrote %s: %zux%zux%zu\n", cfg.output_path.c_str(), image.dim(0), image.dim(1),
                image.dim(2));
    return 0;
}

// ------------------------------------------------------------------ verify

struct CheckTally {
    int failures = 0;

    void record(const std::string& name, bool ok, const std::string& detail) {
        std::printf("[%s] %s — %s\n", ok ? "ok" : "FAIL", name.c_str(), detail.c_str());
        if (!ok) ++failures;
    }
};

// The backward pass under test, with optional fault injection: "s2m_sign" flips
// the sign of the filter gradient so the finite-difference harness must flag it.
S2mGradients verify_s2m_backward(const SliceMatrix& s, const Tensor& filter, const Tensor& d_m,
                                 const std::string& mutation) {
    S2mGradients grads = s2m_backward(s, filter, d_m);
    if (mutation == "s2m_sign") {
        for (std::size_t at = 0; at < grads.d_filter.size(); ++at) {
            grads.d_filter[at] = -grads.d_filter[at];
        }
    } else if (!mutation.empty()) {
        throw ConfigError("unknown mutation '" + mutation + "' (expected s2m_sign)");
    }
    return grads;
}

void check_s2m_gradients(CheckTally& tally, const std::string& mutation) {
    struct Case {
        std::size_t n, k, h;
    };
    const Case cases[] = {{16, 2, 1}, {24, 3, 2}, {32, 5, 2}};
    double worst = 0.0;
    bool ok = true;
    Rng rng(101);
    for (const Case& c : cases) {
        Tensor signal({c.n});
        for (std::size_t at = 0; at < c.n; ++at) signal[at] = rng.normal();
        Tensor filter({c.k, c.k});
        for (std::size_t at = 0; at < filter.size(); ++at) filter[at] = rng.normal();
        const std::size_t m = slice_rows(c.n, c.k, c.h);
        Tensor d_m({m, m});
        for (std::size_t at = 0; at < d_m.size(); ++at) d_m[at] = rng.normal();

        const SliceMatrix s = slice(signal, c.k, c.h);
        const S2mGradients analytic = verify_s2m_backward(s, filter, d_m, mutation);

        const auto probe_filter = [&](const Tensor& f) {
            const Tensor out = s2m_forward(s, f);
            double loss = 0.0;
            for (std::size_t at = 0; at < out.size(); ++at) loss += d_m[at] * out[at];
            return loss;
        };
        const auto probe_signal = [&](const Tensor& sig) {
            const Tensor out = s2m_forward(slice(sig, c.k, c.h), filter);
            double loss = 0.0;
            for (std::size_t at = 0; at < out.size(); ++at) loss += d_m[at] * out[at];
            return loss;
        };
        const GradCheckResult rf =
            finite_diff_check(probe_filter, filter, analytic.d_filter, 1e-5, 1e-6);
        const GradCheckResult rs =
            finite_diff_check(probe_signal, signal, analytic.d_signal, 1e-5, 1e-6);
        ok = ok && rf.ok && rs.ok;
        worst = std::max({worst, rf.max_rel_err, rs.max_rel_err});
    }
    tally.record("s2m analytic gradients vs finite differences", ok,
                 "3 geometries, worst relative error " + fmt_g(worst));
}

void check_identity_equals_gram(CheckTally& tally) {
    Rng rng(102);
    Tensor signal({20});
    for (std::size_t at = 0; at < signal.size(); ++at) signal[at] = rng.normal();
    const std::size_t k = 3, h = 1;
    Tensor identity({k, k});
    for (std::size_t d = 0; d < k; ++d) identity.at(d, d) = 1.0;
    const Tensor via_s2m = s2m_forward(slice(signal, k, h), identity);
    const Tensor direct = gram(signal, k, h);
    double worst = 0.0;
    for (std::size_t at = 0; at < direct.size(); ++at) {
        worst = std::max(worst, std::abs(via_s2m[at] - direct[at]));
    }
    tally.record("identity filter reproduces the plain gram matrix", worst <= 1e-12,
                 "max abs diff " + fmt_g(worst));
}

void check_symmetry_and_psd(CheckTally& tally) {
    Rng rng(103);
    Tensor signal({24});
    for (std::size_t at = 0; at < signal.size(); ++at) signal[at] = rng.normal();
    const std::size_t k = 3, h = 1;
    Tensor sym({k, k});
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < k; ++c) sym.at(r, c) = rng.normal();
    }
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = r + 1; c < k; ++c) {
            const double avg = 0.5 * (sym.at(r, c) + sym.at(c, r));
            sym.at(r, c) = sym.at(c, r) = avg;
        }
    }
    const Tensor m_sym = s2m_forward(slice(signal, k, h), sym);
    double asym = 0.0;
    for (std::size_t r = 0; r < m_sym.dim(0); ++r) {
        for (std::size_t c = 0; c < m_sym.dim(1); ++c) {
            asym = std::max(asym, std::abs(m_sym.at(r, c) - m_sym.at(c, r)));
        }
    }

    const Tensor g = gram(signal, k, h);
    double quad_min = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
        Tensor v({g.dim(0)});
        for (std::size_t at = 0; at < v.size(); ++at) v[at] = rng.normal();
        double quad = 0.0;
        for (std::size_t r = 0; r < g.dim(0); ++r) {
            for (std::size_t c = 0; c < g.dim(1); ++c) quad += v[r] * g.at(r, c) * v[c];
        }
        quad_min = std::min(quad_min, quad);
    }
    tally.record("symmetric filters give symmetric outputs; gram is psd",
                 asym <= 1e-12 && quad_min >= -1e-10,
                 "max asymmetry " + fmt_g(asym) + ", min quadratic form " + fmt_g(quad_min));
}

void check_model_gradients(CheckTally& tally) {
    ModelConfig cfg;
    cfg.arch = Arch::SignetMini;
    cfg.num_classes = 3;
    cfg.input_length = 10;
    cfg.s2m_window = 2;
    cfg.widths = {2, 3};
    cfg.blocks_per_stage = {1};
    cfg.batch_norm = false;

    Rng rng(104);
    Tensor input({2, 2, 10});
    for (std::size_t at = 0; at < input.size(); ++at) input[at] = rng.normal();
    Tensor weights({2, 3});
    for (std::size_t at = 0; at < weights.size(); ++at) weights[at] = rng.normal();

    const auto grad_linf_of = [](Tape& tape, const ForwardResult& fwd) {
        double linf = 0.0;
        for (const char* name : {"s2m.filters", "head.w"}) {
            const Tensor& analytic = tape.grad(fwd.params.at(name).id);
            for (std::size_t at = 0; at < analytic.size(); ++at) {
                linf = std::max(linf, std::abs(analytic[at]));
            }
        }
        return linf;
    };

    // at this width a relu chain can zero out the whole graph, which would make
    // the comparison vacuous — scan for an initialization with a live gradient
    double grad_linf = 0.0;
    std::uint64_t live_seed = 0;
    for (std::uint64_t seed = 21; seed < 41 && grad_linf <= 1e-3; ++seed) {
        ModelConfig seeded = cfg;
        seeded.seed = seed;
        Model candidate(seeded);
        Tape tape;
        ForwardResult fwd = candidate.forward(tape, input, NormMode::Eval);
        tape.backward(weighted_sum(fwd.logits, weights));
        grad_linf = grad_linf_of(tape, fwd);
        live_seed = seed;
    }
    if (grad_linf <= 1e-3) {
        tally.record("full-model gradients vs finite differences", false,
                     "no initialization with a live gradient path found");
        return;
    }

    cfg.seed = live_seed;
    Model model(cfg);
    Tape tape;
    ForwardResult fwd = model.forward(tape, input, NormMode::Eval);
    tape.backward(weighted_sum(fwd.logits, weights));

    bool ok = true;
    double worst = 0.0;
    for (const char* name : {"s2m.filters", "head.w"}) {
        const Tensor analytic = tape.grad(fwd.params.at(name).id);
        const Tensor original = model.params().at(name);
        const auto probe = [&](const Tensor& candidate) {
            model.params().at(name) = candidate;
            Tape probe_tape;
            ForwardResult out = model.forward(probe_tape, input, NormMode::Eval);
            const Tensor& logits = probe_tape.value(out.logits);
            double loss = 0.0;
            for (std::size_t at = 0; at < logits.size(); ++at) loss += weights[at] * logits[at];
            return loss;
        };
        const GradCheckResult r =
            finite_diff_check(probe, original, analytic, 1e-5, 1e-4, 6, 1e-7);
        model.params().at(name) = original;
        ok = ok && r.ok;
        worst = std::max(worst, r.max_rel_err);
    }
    tally.record("full-model gradients vs finite differences", ok,
                 "worst relative error " + fmt_g(worst) + ", gradient linf " + fmt_g(grad_linf));
}

void check_optimizer_oracles(CheckTally& tally) {
    OptimizerConfig sgd_cfg;
    sgd_cfg.kind = OptimizerKind::Sgd;
    sgd_cfg.momentum = 0.9;
    Optimizer opt(sgd_cfg);
    ParameterStore params;
    params.add("p", Tensor({1}, {1.0}));
    std::map<std::string, Tensor> grads;
    grads["p"] = Tensor({1}, {1.0});
    opt.step(params, grads, 0.1);
    const double after_one = params.at("p")[0];  // 1 - 0.1*1
    opt.step(params, grads, 0.1);
    const double after_two = params.at("p")[0];  // buffer 1.9 -> 0.9 - 0.19
    const bool ok = after_one == 0.9 && std::abs(after_two - 0.71) < 1e-15;
    tally.record("sgd momentum matches the hand-computed two-step trace", ok,
                 "steps: " + fmt_g(after_one) + ", " + fmt_g(after_two));
}

void check_dataset_round_trip(CheckTally& tally) {
    SynthConfig synth;
    synth.schemes = {"BPSK", "QPSK"};
    synth.symbols_per_sample = 8;
    synth.oversampling = 4;
    synth.snr_grid_db = {10};
    synth.samples_per_class_per_snr = 2;
    synth.seed = 3;
    const SignalDataset ds = generate_dataset(synth.resolved());
    const std::string path =
        (std::filesystem::temp_directory_path() / "signet_verify_roundtrip.sigd").string();
    write_dataset(ds, path);
    const SignalDataset back = read_dataset(path);
    std::remove(path.c_str());
    const bool ok = back.samples == ds.samples && back.class_names == ds.class_names &&
                    back.snr_grid == ds.snr_grid;
    tally.record("dataset container round trip is lossless", ok,
                 std::to_string(ds.samples.size()) + " samples");
}

void check_checkpoint_round_trip(CheckTally& tally) {
    ModelConfig cfg;
    cfg.arch = Arch::Cnn1d;
    cfg.num_classes = 2;
    cfg.input_length = 16;
    cfg.widths = {2};
    cfg.blocks_per_stage = {1};
    cfg.batch_norm = false;
    cfg.seed = 5;
    Model model(cfg);

    Rng rng(105);
    Tensor input({1, 2, 16});
    for (std::size_t at = 0; at < input.size(); ++at) input[at] = rng.normal();
    Tape tape;
    const Tensor before = tape.value(model.forward(tape, input, NormMode::Eval).logits);

    const std::string path =
        (std::filesystem::temp_directory_path() / "signet_verify_ckpt.sgck").string();
    save_checkpoint(model, path);
    Model loaded = load_checkpoint(path);
    std::remove(path.c_str());
    Tape tape2;
    const Tensor after = tape2.value(loaded.forward(tape2, input, NormMode::Eval).logits);
    bool ok = before.size() == after.size();
    for (std::size_t at = 0; ok && at < before.size(); ++at) ok = before[at] == after[at];
    tally.record("checkpoint round trip reproduces logits bitwise", ok,
                 std::to_string(before.size()) + " logits compared");
}

void check_auc_fixture(CheckTally& tally) {
    const std::vector<int> labels = {1, 1, 0, 0, 0, 0};
    const std::vector<double> s1 = {0.9, 0.35, 0.5, 0.4, 0.2, 0.1};
    Tensor scores({6, 2});
    for (std::size_t i = 0; i < 6; ++i) {
        scores.at(i, 0) = 1.0 - s1[i];
        scores.at(i, 1) = s1[i];
    }
    const AucResult auc = roc_auc_ovr(scores, labels);
    const bool ok = auc.per_class[0] == 0.75 && auc.per_class[1] == 0.75 && auc.macro == 0.75;
    tally.record("rank-sum auc matches the 6-sample hand count", ok, "macro " + fmt_g(auc.macro));
}

void check_lr_schedule(CheckTally& tally) {
    const LrSchedule sched{0.5, 10, 100};
    const bool ok = lr_at(0, sched) == 0.0 && lr_at(10, sched) == 0.5 &&
                    lr_at(100, sched) == 0.0 && lr_at(55, sched) < 0.5 &&
                    lr_at(55, sched) > 0.0;
    tally.record("warmup-cosine schedule hits its endpoints exactly", ok,
                 "lr(0)=" + fmt_g(lr_at(0, sched)) + ", lr(warmup)=" + fmt_g(lr_at(10, sched)) +
                     ", lr(total)=" + fmt_g(lr_at(100, sched)));
}

int cmd_verify(const RunConfig& cfg) {
    CheckTally tally;
    check_s2m_gradients(tally, cfg.mutation);
    check_identity_equals_gram(tally);
    check_symmetry_and_psd(tally);
    check_model_gradients(tally);
    check_optimizer_oracles(tally);
    check_dataset_round_trip(tally);
    check_checkpoint_round_trip(tally);
    check_auc_fixture(tally);
    check_lr_schedule(tally);
    std::printf("%d of 9 checks failed\n", tally.failures);
    return tally.failures;
}

// -------------------------------------------------------------------- main

int run(const std::vector<std::string>& args) {
    if (args.empty()) {
        print_usage(stderr);
        return 1;
    }
    const std::string& command = args[0];
    if (command == "help" || command == "--help" || command == "-h") {
        print_usage(stdout);
        return 0;
    }
    if (command != "generate" && command != "train" && command != "eval" &&
        command != "transform" && command != "verify") {
        std::fprintf(stderr, "unknown command '%s'\n\n", command.c_str());
        print_usage(stderr);
        return 1;
    }

    // config files load in order, then the remaining --key value flags override
    KeyValues kv;
    std::vector<std::string> overrides;
    for (std::size_t at = 1; at < args.size(); ++at) {
        if (args[at] == "--config") {
            if (at + 1 == args.size()) throw ConfigError("--config is missing its file path");
            for (const auto& [key, value] : read_key_value_file(args[++at])) kv[key] = value;
        } else {
            overrides.push_back(args[at]);
        }
    }
    apply_overrides(kv, overrides);
    const RunConfig cfg = RunConfig::from_key_values(kv);

    if (command == "generate") return cmd_generate(cfg);
    if (command == "train") return cmd_train(cfg);
    if (command == "eval") return cmd_eval(cfg);
    if (command == "transform") return cmd_transform(cfg);
    return cmd_verify(cfg);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const signet::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
