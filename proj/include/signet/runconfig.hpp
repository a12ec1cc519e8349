#pragma once

// Flat key=value run configuration: file parsing, --key value overrides, shipped
// presets, and a fully resolved echo that reproduces the run byte-for-byte.

#include <map>
#include <string>
#include <vector>

#include "signet/errors.hpp"
#include "signet/models.hpp"
#include "signet/sigsynth.hpp"
#include "signet/training.hpp"

namespace signet {

using KeyValues = std::map<std::string, std::string>;

// One `key = value` pair per line; blank lines and lines starting with '#' are
// skipped; later duplicates of a key win. Malformed lines throw ConfigError.
KeyValues parse_key_value_text(const std::string& text);
KeyValues read_key_value_file(const std::string& path);

// Consumes `--key value` / `--key=value` tokens into kv (overwriting existing
// entries). Anything that is not such a pair throws ConfigError.
void apply_overrides(KeyValues& kv, const std::vector<std::string>& args);

// Shipped starting points: "rml-mini" (11 classes, N=128, 20 SNRs) and
// "sig2019-mini" (12 classes, N=512, 26 SNRs), both at reduced sample counts.
const std::vector<std::string>& preset_names();
KeyValues preset_key_values(const std::string& name);  // ConfigError if unknown

// Union of every knob a command can need, parsed from flat keys. Sections are
// dot-prefixed (synth.*, model.*, train.*, split.*); the remaining keys are
// paths and command arguments. Unknown keys are rejected.
struct RunConfig {
    SynthConfig synth;
    ModelConfig model;
    TrainConfig train;
    SplitSpec split;

    std::vector<double> etas = {1.0};  // per-cell training-set reductions; one run each
    std::string dataset_path;
    std::string checkpoint_path;
    std::string run_dir;
    std::string output_path;
    std::string eval_split = "test";  // train | val | test
    std::string transform_method;     // s2m | gram | gaf | gadf | mtf | constellation | reshape
    std::size_t sample_index = 0;
    std::string mutation;  // verify-only fault injection; "" runs the real code

    // Starts from the defaults above and applies the given keys; a "preset" key
    // expands first so explicit keys override it. Throws ConfigError on unknown
    // keys or unparseable values.
    static RunConfig from_key_values(const KeyValues& kv);

    KeyValues to_key_values() const;  // fully resolved, defaults included
    std::string echo() const;         // deterministic text; reparses identically
};

}  // namespace signet
