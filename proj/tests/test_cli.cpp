#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "signet/models.hpp"
#include "signet/runconfig.hpp"
#include "signet/training.hpp"

using namespace signet;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr interleaved
};

// Runs the binary under test (path from the SIGNET_CLI environment variable).
CliResult run_cli(const std::string& args) {
    const char* cli = std::getenv("SIGNET_CLI");
    REQUIRE_MESSAGE(cli != nullptr, "SIGNET_CLI must point at the binary");
    const std::string command = std::string(cli) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buf[512];
    while (std::fgets(buf, sizeof(buf), pipe)) result.output += buf;
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

// Fresh working directory per test case, under the system temp root.
std::filesystem::path scratch_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("signet_cli_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), ("missing file: " + path.string()));
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string grep_value(const std::string& text, const std::string& key) {
    std::stringstream ss(text);
    for (std::string line; std::getline(ss, line);) {
        if (line.rfind(key, 0) == 0) return line.substr(key.size());
    }
    return "";
}

// epoch,train_loss,train_acc,val_acc,lr columns of a metrics CSV; the trailing
// wall-clock seconds column is dropped (it legitimately varies between runs)
std::vector<std::string> learning_columns(const std::string& csv) {
    std::vector<std::string> rows;
    std::stringstream ss(csv);
    for (std::string line; std::getline(ss, line);) {
        const std::size_t last_comma = line.rfind(',');
        rows.push_back(line.substr(0, last_comma));
    }
    return rows;
}

std::string tiny_generate_args(const std::filesystem::path& dir) {
    return "generate --dataset " + (dir / "tiny.sigd").string() +
           " --synth.schemes BPSK,4FSK --synth.symbols 8 --synth.oversampling 4"
           " --synth.snr_grid 10,18 --synth.per_cell 12 --synth.seed 7";
}

std::string tiny_train_args(const std::filesystem::path& dir, const std::string& run_dir) {
    return "train --dataset " + (dir / "tiny.sigd").string() + " --run_dir " +
           (dir / run_dir).string() +
           " --model.arch cnn1d --model.num_classes 2 --model.input_length 32"
           " --model.widths 2 --model.blocks 1 --model.batch_norm 0"
           " --train.epochs 2 --train.batch_size 8 --train.lr 0.01";
}

}  // namespace

TEST_CASE("key=value text parsing handles comments, blanks and duplicates") {
    const KeyValues kv = parse_key_value_text(
        "# comment\n"
        "\n"
        "  a = 1  \n"
        "b=two words\n"
        "a=3\n");
    CHECK(kv.size() == 2);
    CHECK(kv.at("a") == "3");  // later duplicates win
    CHECK(kv.at("b") == "two words");

    CHECK_THROWS_AS(parse_key_value_text("not a pair\n"), ConfigError);
    CHECK_THROWS_AS(parse_key_value_text("=value\n"), ConfigError);
}

TEST_CASE("command-line overrides accept both flag forms and reject stragglers") {
    KeyValues kv;
    apply_overrides(kv, {"--a", "1", "--b=2", "--c", "x y"});
    CHECK(kv.at("a") == "1");
    CHECK(kv.at("b") == "2");
    CHECK(kv.at("c") == "x y");

    CHECK_THROWS_AS(apply_overrides(kv, {"loose"}), ConfigError);
    CHECK_THROWS_AS(apply_overrides(kv, {"--dangling"}), ConfigError);
    CHECK_THROWS_AS(apply_overrides(kv, {"--"}), ConfigError);
}

TEST_CASE("a run config echo reparses to the identical echo") {
    KeyValues kv;
    kv["synth.schemes"] = "BPSK,QPSK";
    kv["synth.symbols"] = "16";
    kv["model.arch"] = "cnn1d";
    kv["model.widths"] = "4,8";
    kv["train.epochs"] = "5";
    kv["train.warmup_steps"] = "auto";
    kv["eta"] = "0.5,1";
    kv["dataset"] = "some/path.sigd";
    const RunConfig cfg = RunConfig::from_key_values(kv);
    CHECK(cfg.train.warmup_steps == TrainConfig::kDeriveWarmup);
    CHECK(cfg.etas == std::vector<double>{0.5, 1.0});
    CHECK(cfg.synth.snr_grid_db.size() == 26);  // default grid expanded by resolution

    const std::string echo = cfg.echo();
    const RunConfig again = RunConfig::from_key_values(parse_key_value_text(echo));
    CHECK(again.echo() == echo);
}

TEST_CASE("unknown config keys are rejected by name") {
    CHECK_THROWS_WITH_AS(RunConfig::from_key_values({{"bogus", "1"}}),
                         "unknown config key 'bogus'", ConfigError);
    CHECK_THROWS_AS(RunConfig::from_key_values({{"model.bogus", "1"}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_key_values({{"train.epochs", "three"}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_key_values({{"eval_split", "holdout"}}), ConfigError);
}

TEST_CASE("presets pin the two shipped dataset geometries") {
    const RunConfig rml = RunConfig::from_key_values({{"preset", "rml-mini"}});
    CHECK(rml.synth.schemes.size() == 11);
    CHECK(rml.synth.symbols_per_sample * rml.synth.oversampling == 128);
    CHECK(rml.synth.snr_grid_db.size() == 20);
    CHECK(rml.synth.snr_grid_db.front() == -20);
    CHECK(rml.synth.snr_grid_db.back() == 18);
    CHECK(rml.model.num_classes == 11);
    CHECK(rml.model.input_length == 128);

    const RunConfig sig = RunConfig::from_key_values({{"preset", "sig2019-mini"}});
    CHECK(sig.synth.schemes.size() == 12);  // "all" resolved
    CHECK(sig.synth.symbols_per_sample * sig.synth.oversampling == 512);
    CHECK(sig.synth.snr_grid_db.size() == 26);
    CHECK(sig.model.num_classes == 12);
    CHECK(sig.model.input_length == 512);

    // explicit keys override the preset
    const RunConfig tweaked =
        RunConfig::from_key_values({{"preset", "rml-mini"}, {"synth.per_cell", "5"}});
    CHECK(tweaked.synth.samples_per_class_per_snr == 5);

    CHECK_THROWS_AS(RunConfig::from_key_values({{"preset", "nope"}}), ConfigError);
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_cli("").exit_code == 1);
    CHECK(run_cli("frobnicate").exit_code == 1);
    CHECK(run_cli("help").exit_code == 0);
    CHECK(run_cli("help").output.find("usage:") != std::string::npos);
    CHECK(run_cli("train").exit_code == 1);  // no dataset key
    CHECK(run_cli("generate --dataset x.sigd --synth.schemes FOO").exit_code == 1);
    CHECK(run_cli("train --dataset /definitely/not/there.sigd").exit_code == 2);
}

TEST_CASE("generate is deterministic and announces the dataset shape") {
    const auto dir = scratch_dir("gen");
    const CliResult first = run_cli(tiny_generate_args(dir));
    CHECK(first.exit_code == 0);
    CHECK(first.output.find("48 samples, 2 classes, 2 snr levels, length 32") !=
          std::string::npos);
    CHECK(std::filesystem::exists(dir / "tiny.sigd.config"));  // resolved echo sidecar

    const std::string once = slurp(dir / "tiny.sigd");
    REQUIRE(run_cli(tiny_generate_args(dir)).exit_code == 0);
    CHECK(slurp(dir / "tiny.sigd") == once);  // byte-identical regeneration
    std::filesystem::remove_all(dir);
}

TEST_CASE("train writes a complete run directory and reproduces from its echo") {
    const auto dir = scratch_dir("train");
    REQUIRE(run_cli(tiny_generate_args(dir)).exit_code == 0);

    const CliResult first = run_cli(tiny_train_args(dir, "run1"));
    CHECK(first.exit_code == 0);
    CHECK(first.output.find("epoch 1/2") != std::string::npos);
    CHECK(first.output.find("test accuracy") != std::string::npos);
    for (const char* artifact :
         {"config.txt", "metrics.csv", "best.sgck", "summary.txt", "report.txt"}) {
        CHECK_MESSAGE(std::filesystem::exists(dir / "run1" / artifact), artifact);
    }

    // a second run driven purely by the stored echo repeats the learning trajectory
    const CliResult second = run_cli("train --config " + (dir / "run1" / "config.txt").string() +
                                     " --run_dir " + (dir / "run2").string());
    CHECK(second.exit_code == 0);
    CHECK(learning_columns(slurp(dir / "run1" / "metrics.csv")) ==
          learning_columns(slurp(dir / "run2" / "metrics.csv")));
    CHECK(slurp(dir / "run1" / "best.sgck") == slurp(dir / "run2" / "best.sgck"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("eta sweeps emit one run directory per requested fraction") {
    const auto dir = scratch_dir("sweep");
    REQUIRE(run_cli(tiny_generate_args(dir)).exit_code == 0);
    const CliResult result = run_cli(tiny_train_args(dir, "sweep") + " --eta 0.5,1");
    CHECK(result.exit_code == 0);
    CHECK(std::filesystem::exists(dir / "sweep-eta0.5" / "best.sgck"));
    CHECK(std::filesystem::exists(dir / "sweep-eta1" / "best.sgck"));
    // half of each (class, snr) training cell: 12 per cell * 0.6 split = 7, round(3.5) = 4
    CHECK(result.output.find("16 train") != std::string::npos);
    CHECK(result.output.find("28 train") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("eval on the validation split reproduces the training-time best accuracy") {
    const auto dir = scratch_dir("eval");
    REQUIRE(run_cli(tiny_generate_args(dir)).exit_code == 0);
    REQUIRE(run_cli(tiny_train_args(dir, "run")).exit_code == 0);

    const CliResult result = run_cli(
        "eval --checkpoint " + (dir / "run" / "best.sgck").string() + " --dataset " +
        (dir / "tiny.sigd").string() + " --eval_split val --output " +
        (dir / "val_report.txt").string());
    CHECK(result.exit_code == 0);

    const std::string trained = grep_value(slurp(dir / "run" / "summary.txt"), "best_val_acc=");
    const std::string evaluated = grep_value(slurp(dir / "val_report.txt"), "accuracy=");
    CHECK(trained == evaluated);  // same %.12g text from the same deterministic scores

    // per-snr block lists each grid level exactly once
    const std::string report = slurp(dir / "val_report.txt");
    CHECK(report.find("\n10,") != std::string::npos);
    CHECK(report.find("\n18,") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("eval refuses a checkpoint whose geometry does not match the dataset") {
    const auto dir = scratch_dir("evalmismatch");
    REQUIRE(run_cli(tiny_generate_args(dir)).exit_code == 0);
    REQUIRE(run_cli(tiny_train_args(dir, "run")).exit_code == 0);

    // same schemes, different sample length
    const std::string other =
        "generate --dataset " + (dir / "other.sigd").string() +
        " --synth.schemes BPSK,4FSK --synth.symbols 16 --synth.oversampling 4"
        " --synth.snr_grid 10,18 --synth.per_cell 12";
    REQUIRE(run_cli(other).exit_code == 0);

    const CliResult result = run_cli("eval --checkpoint " + (dir / "run" / "best.sgck").string() +
                                     " --dataset " + (dir / "other.sigd").string());
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("input_length") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("transform dumps a symmetric gram matrix as CSV") {
    const auto dir = scratch_dir("gram");
    REQUIRE(run_cli(tiny_generate_args(dir)).exit_code == 0);
    const CliResult result = run_cli("transform --dataset " + (dir / "tiny.sigd").string() +
                                     " --transform_method gram --sample_index 3 --output " +
                                     (dir / "gram.csv").string());
    CHECK(result.exit_code == 0);

    std::ifstream in(dir / "gram.csv");
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header == "channels,2,height,30,width,30");  // floor((32-3)/1)+1 rows
    std::vector<std::vector<double>> rows;
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;  // channel separator
        std::vector<double> row;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
        REQUIRE(row.size() == 30);
        rows.push_back(row);
    }
    REQUIRE(rows.size() == 60);  // two 30x30 channels
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t r = 0; r < 30; ++r) {
            for (std::size_t col = 0; col < 30; ++col) {
                CHECK(rows[c * 30 + r][col] == rows[c * 30 + col][r]);
            }
        }
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("transform s2m picks up trained filters from a checkpoint") {
    const auto dir = scratch_dir("s2m");
    REQUIRE(run_cli(tiny_generate_args(dir)).exit_code == 0);
    const std::string base = "transform --dataset " + (dir / "tiny.sigd").string() +
                             " --transform_method s2m --sample_index 0"
                             " --model.num_classes 2 --model.input_length 32";

    REQUIRE(run_cli(base + " --output " + (dir / "init.csv").string()).exit_code == 0);

    // a checkpoint with differently-initialized filters must change the dump
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.input_length = 32;
    cfg.seed = 9;
    Model model(cfg);
    save_checkpoint(model, (dir / "other.sgck").string());
    REQUIRE(run_cli(base + " --checkpoint " + (dir / "other.sgck").string() + " --output " +
                    (dir / "ckpt.csv").string())
                .exit_code == 0);

    CHECK(slurp(dir / "init.csv") != slurp(dir / "ckpt.csv"));

    CHECK(run_cli("transform --dataset " + (dir / "tiny.sigd").string() +
                  " --transform_method nope --sample_index 0 --output " +
                  (dir / "x.csv").string())
              .exit_code == 1);
    CHECK(run_cli("transform --dataset " + (dir / "tiny.sigd").string() +
                  " --transform_method gram --sample_index 999 --output " +
                  (dir / "x.csv").string())
              .exit_code == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("verify passes cleanly and catches an injected backward-pass fault") {
    const CliResult clean = run_cli("verify");
    CHECK(clean.exit_code == 0);
    CHECK(clean.output.find("[FAIL]") == std::string::npos);
    CHECK(clean.output.find("0 of 9 checks failed") != std::string::npos);

    const CliResult mutated = run_cli("verify --mutation s2m_sign");
    CHECK(mutated.exit_code == 1);  // exactly one check trips
    CHECK(mutated.output.find("[FAIL] s2m analytic gradients") != std::string::npos);
    CHECK(mutated.output.find("1 of 9 checks failed") != std::string::npos);

    CHECK(run_cli("verify --mutation unknown_knob").exit_code == 1);
}
