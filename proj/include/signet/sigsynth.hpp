#pragma once

// Synthetic IQ modulation dataset generator: Gray-coded linear modulations
// (PSK/QAM/PAM), phase-continuous FSK, raised-cosine pulse shaping, carrier
// impairments, calibrated AWGN, and per-channel min-max normalization.

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "signet/dataset.hpp"
#include "signet/errors.hpp"
#include "signet/rng.hpp"

namespace signet {

struct SynthConfig {
    std::vector<std::string> schemes;  // empty = all known schemes
    std::size_t symbols_per_sample = 64;
    std::size_t oversampling = 8;
    double rolloff_lo = 0.2;
    double rolloff_hi = 0.7;
    double phase_lo = -3.14159265358979323846;
    double phase_hi = 3.14159265358979323846;
    double cfo_lo = -0.1;  // fraction of the sample rate
    double cfo_hi = 0.1;
    std::vector<int> snr_grid_db;  // empty = -20..30 dB step 2
    std::size_t samples_per_class_per_snr = 1500;
    std::uint64_t seed = 1;

    std::size_t sample_length() const { return symbols_per_sample * oversampling; }
    // applies the documented defaults and validates ranges; throws ConfigError
    SynthConfig resolved() const;
    std::uint64_t hash() const;
};

struct SchemeInfo {
    std::string name;
    std::size_t bits_per_symbol = 1;
    bool fsk = false;
    bool oqpsk = false;  // half-symbol Q-channel delay at the waveform stage
    // linear schemes: unit-average-power points indexed by the symbol's bit pattern
    std::vector<std::complex<double>> constellation;
    std::size_t num_tones = 0;  // fsk schemes
};

// The 12 supported schemes in canonical order.
const std::vector<std::string>& known_schemes();
const SchemeInfo& scheme_info(const std::string& name);  // ConfigError if unknown

struct ModulatedSymbols {
    bool fsk = false;
    std::vector<std::complex<double>> points;  // linear schemes
    std::vector<int> tone_indices;             // fsk schemes
};

// Map a bit stream to symbols. Bit count must divide evenly into symbols.
ModulatedSymbols modulate(const std::vector<int>& bits, const std::string& scheme);

// Raised-cosine impulse response sampled at `oversampling` points per symbol, truncated to
// +/-6 symbol durations (12*oversampling+1 taps), singularities evaluated by their limit.
std::vector<double> raised_cosine_taps(double rolloff, std::size_t oversampling);

// Upsample-and-filter with the raised cosine; output length = symbols * oversampling with
// the filter's group delay removed. q_delay_samples shifts the Q channel (OQPSK).
std::vector<std::complex<double>> pulse_shape(const std::vector<std::complex<double>>& symbols,
                                              double rolloff, std::size_t oversampling,
                                              std::size_t q_delay_samples = 0);

// Constant-envelope phase-continuous FSK synthesis. Tones are centered around 0 with
// adjacent-tone spacing of 1/oversampling in symbol-rate units (1/oversampling^2 of the
// sample rate).
std::vector<std::complex<double>> fsk_waveform(const std::vector<int>& tone_indices,
                                               std::size_t num_tones, std::size_t oversampling);

// y[n] = x[n] * exp(j(2*pi*cfo*n + phase_offset))
void apply_impairments(std::vector<std::complex<double>>& waveform, double phase_offset,
                       double cfo);

// Complex AWGN calibrated against the measured waveform power: per-sample noise variance
// sigma^2 = P_signal / 10^(snr_db/10), split equally across real and imaginary parts.
void add_awgn(std::vector<std::complex<double>>& waveform, double snr_db, Rng& rng);

// Per-channel x' = (x - min)/(max - min)*2 - 1. Constant channels are rejected.
void normalize_minmax(IQSample& sample);

// Fully reproducible synthesis of one sample: every random draw comes from a counter-based
// stream keyed by (seed, scheme index, snr index, sample index).
IQSample synthesize_sample(const SynthConfig& cfg, std::size_t scheme_index,
                           std::size_t snr_index, std::size_t sample_index);

// All (scheme, snr) cells, scheme-major then SNR then index; parallel-safe and
// byte-deterministic for a fixed (config, seed) regardless of worker count.
SignalDataset generate_dataset(const SynthConfig& cfg);

}  // namespace signet
