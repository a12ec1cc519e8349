#include "signet/sigsynth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>

#include "signet/parallel.hpp"

namespace signet {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t gray_inverse(std::uint64_t g) {
    std::uint64_t b = 0;
    for (; g; g >>= 1) b ^= g;
    return b;
}

// Gray-coded amplitude ladder: the bit pattern `value` selects level index
// gray_inverse(value) among {-(n-1), ..., -1, +1, ..., +(n-1)} step 2 (ascending).
double gray_level(std::uint64_t value, std::size_t levels) {
    const std::uint64_t idx = gray_inverse(value);
    return 2.0 * static_cast<double>(idx) - static_cast<double>(levels - 1);
}

std::vector<std::complex<double>> psk_constellation(std::size_t bits) {
    // phase index via inverse Gray so neighbours on the circle differ by one bit
    const std::size_t n = std::size_t{1} << bits;
    std::vector<std::complex<double>> points(n);
    for (std::size_t v = 0; v < n; ++v) {
        const double angle = 2.0 * kPi * static_cast<double>(gray_inverse(v)) / static_cast<double>(n);
        points[v] = {std::cos(angle), std::sin(angle)};
    }
    return points;
}

std::vector<std::complex<double>> bpsk_constellation() { return {{1.0, 0.0}, {-1.0, 0.0}}; }

std::vector<std::complex<double>> qpsk_constellation() {
    // one bit per axis, bit 0 -> +, bit 1 -> -; unit power
    const double a = 1.0 / std::sqrt(2.0);
    std::vector<std::complex<double>> points(4);
    for (std::size_t v = 0; v < 4; ++v) {
        const double i = (v & 2) ? -a : a;
        const double q = (v & 1) ? -a : a;
        points[v] = {i, q};
    }
    return points;
}

std::vector<std::complex<double>> qam_constellation(std::size_t i_bits, std::size_t q_bits) {
    const std::size_t ni = std::size_t{1} << i_bits;
    const std::size_t nq = std::size_t{1} << q_bits;
    std::vector<std::complex<double>> points(ni * nq);
    double power = 0.0;
    for (std::size_t v = 0; v < ni * nq; ++v) {
        const std::uint64_t iv = v >> q_bits;
        const std::uint64_t qv = v & (nq - 1);
        const std::complex<double> p{gray_level(iv, ni), gray_level(qv, nq)};
        points[v] = p;
        power += std::norm(p);
    }
    const double scale = 1.0 / std::sqrt(power / static_cast<double>(points.size()));
    for (auto& p : points) p *= scale;
    return points;
}

std::vector<std::complex<double>> pam_constellation(std::size_t bits) {
    const std::size_t n = std::size_t{1} << bits;
    std::vector<std::complex<double>> points(n);
    double power = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        points[v] = {gray_level(v, n), 0.0};
        power += std::norm(points[v]);
    }
    const double scale = 1.0 / std::sqrt(power / static_cast<double>(n));
    for (auto& p : points) p *= scale;
    return points;
}

std::map<std::string, SchemeInfo> make_registry() {
    std::map<std::string, SchemeInfo> reg;
    auto linear = [&](const std::string& name, std::size_t bits,
                      std::vector<std::complex<double>> pts, bool oqpsk = false) {
        reg[name] = SchemeInfo{name, bits, false, oqpsk, std::move(pts), 0};
    };
    auto fsk = [&](const std::string& name, std::size_t bits) {
        reg[name] = SchemeInfo{name, bits, true, false, {}, std::size_t{1} << bits};
    };
    linear("BPSK", 1, bpsk_constellation());
    linear("QPSK", 2, qpsk_constellation());
    linear("8PSK", 3, psk_constellation(3));
    linear("OQPSK", 2, qpsk_constellation(), true);
    fsk("2FSK", 1);
    fsk("4FSK", 2);
    fsk("8FSK", 3);
    linear("16QAM", 4, qam_constellation(2, 2));
    linear("32QAM", 5, qam_constellation(2, 3));  // rectangular 4x8: exact per-axis Gray labels
    linear("64QAM", 6, qam_constellation(3, 3));
    linear("4PAM", 2, pam_constellation(2));
    linear("8PAM", 3, pam_constellation(3));
    return reg;
}

const std::map<std::string, SchemeInfo>& registry() {
    static const std::map<std::string, SchemeInfo> reg = make_registry();
    return reg;
}

}  // namespace

const std::vector<std::string>& known_schemes() {
    static const std::vector<std::string> names = {"BPSK",  "QPSK",  "8PSK",  "OQPSK",
                                                   "2FSK",  "4FSK",  "8FSK",  "16QAM",
                                                   "32QAM", "64QAM", "4PAM",  "8PAM"};
    return names;
}

const SchemeInfo& scheme_info(const std::string& name) {
    auto it = registry().find(name);
    if (it == registry().end()) {
        throw ConfigError("unknown modulation scheme '" + name + "'");
    }
    return it->second;
}

SynthConfig SynthConfig::resolved() const {
    SynthConfig cfg = *this;
    if (cfg.schemes.empty()) cfg.schemes = known_schemes();
    if (cfg.snr_grid_db.empty()) {
        for (int snr = -20; snr <= 30; snr += 2) cfg.snr_grid_db.push_back(snr);
    }
    for (const std::string& s : cfg.schemes) scheme_info(s);  // rejects unknown names
    if (cfg.symbols_per_sample == 0 || cfg.oversampling == 0) {
        throw ConfigError("symbols_per_sample and oversampling must be positive");
    }
    if (!(cfg.rolloff_lo > 0.0 && cfg.rolloff_hi < 1.0 && cfg.rolloff_lo <= cfg.rolloff_hi)) {
        throw ConfigError("rolloff range must satisfy 0 < lo <= hi < 1");
    }
    if (cfg.samples_per_class_per_snr == 0) {
        throw ConfigError("samples_per_class_per_snr must be positive");
    }
    return cfg;
}

std::uint64_t SynthConfig::hash() const {
    std::uint64_t h = mix_key(seed, 0x5349474e45543130ull);
    auto mix_d = [&](double v) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        h = mix_key(h, bits);
    };
    for (const std::string& s : schemes) {
        for (char c : s) h = mix_key(h, static_cast<std::uint64_t>(c));
        h = mix_key(h, 0x2c);
    }
    h = mix_key(h, symbols_per_sample);
    h = mix_key(h, oversampling);
    mix_d(rolloff_lo);
    mix_d(rolloff_hi);
    mix_d(phase_lo);
    mix_d(phase_hi);
    mix_d(cfo_lo);
    mix_d(cfo_hi);
    for (int snr : snr_grid_db) h = mix_key(h, static_cast<std::uint64_t>(snr + 32768));
    h = mix_key(h, samples_per_class_per_snr);
    return h;
}

ModulatedSymbols modulate(const std::vector<int>& bits, const std::string& scheme) {
    const SchemeInfo& info = scheme_info(scheme);
    if (bits.size() % info.bits_per_symbol != 0) {
        throw ShapeError("modulate: " + std::to_string(bits.size()) + " bits do not divide into " +
                         std::to_string(info.bits_per_symbol) + "-bit " + scheme + " symbols");
    }
    const std::size_t num_symbols = bits.size() / info.bits_per_symbol;
    ModulatedSymbols out;
    out.fsk = info.fsk;
    for (std::size_t s = 0; s < num_symbols; ++s) {
        std::uint64_t value = 0;
        for (std::size_t b = 0; b < info.bits_per_symbol; ++b) {
            const int bit = bits[s * info.bits_per_symbol + b];
            if (bit != 0 && bit != 1) throw ShapeError("modulate: bits must be 0 or 1");
            value = (value << 1) | static_cast<std::uint64_t>(bit);
        }
        if (info.fsk) {
            out.tone_indices.push_back(static_cast<int>(gray_inverse(value)));
        } else {
            out.points.push_back(info.constellation[value]);
        }
    }
    return out;
}

std::vector<double> raised_cosine_taps(double rolloff, std::size_t oversampling) {
    if (!(rolloff > 0.0 && rolloff < 1.0)) {
        throw ConfigError("raised_cosine_taps: rolloff must be in (0, 1)");
    }
    const long span_symbols = 6;
    const long half = span_symbols * static_cast<long>(oversampling);
    const double T = static_cast<double>(oversampling);
    std::vector<double> taps(2 * half + 1);
    for (long n = -half; n <= half; ++n) {
        const double t = static_cast<double>(n) / T;  // time in symbol durations
        double value;
        if (n == 0) {
            value = 1.0;
        } else {
            const double denom = 1.0 - (2.0 * rolloff * t) * (2.0 * rolloff * t);
            if (std::abs(denom) < 1e-9) {
                // singularity t = +/- T/(2 alpha): analytic limit
                value = (rolloff / 2.0) * std::sin(kPi / (2.0 * rolloff));
            } else {
                value = std::sin(kPi * t) / (kPi * t) * std::cos(kPi * rolloff * t) / denom;
            }
        }
        taps[static_cast<std::size_t>(n + half)] = value;
    }
    return taps;
}

std::vector<std::complex<double>> pulse_shape(const std::vector<std::complex<double>>& symbols,
                                              double rolloff, std::size_t oversampling,
                                              std::size_t q_delay_samples) {
    const std::vector<double> taps = raised_cosine_taps(rolloff, oversampling);
    const long half = (static_cast<long>(taps.size()) - 1) / 2;
    const long n_out = static_cast<long>(symbols.size() * oversampling);
    std::vector<std::complex<double>> out(static_cast<std::size_t>(n_out), {0.0, 0.0});
    // scatter each symbol's scaled impulse response; group delay already removed by
    // centering taps[half] on the symbol instant
    for (std::size_t s = 0; s < symbols.size(); ++s) {
        const long center_i = static_cast<long>(s * oversampling);
        const long center_q = center_i + static_cast<long>(q_delay_samples);
        const double si = symbols[s].real();
        const double sq = symbols[s].imag();
        for (long k = -half; k <= half; ++k) {
            const double tap = taps[static_cast<std::size_t>(k + half)];
            const long ni = center_i + k;
            if (si != 0.0 && ni >= 0 && ni < n_out) {
                out[static_cast<std::size_t>(ni)] += std::complex<double>(si * tap, 0.0);
            }
            const long nq = center_q + k;
            if (sq != 0.0 && nq >= 0 && nq < n_out) {
                out[static_cast<std::size_t>(nq)] += std::complex<double>(0.0, sq * tap);
            }
        }
    }
    return out;
}

std::vector<std::complex<double>> fsk_waveform(const std::vector<int>& tone_indices,
                                               std::size_t num_tones, std::size_t oversampling) {
    if (num_tones < 2) throw ConfigError("fsk_waveform: need at least 2 tones");
    // adjacent tones 1/oversampling apart in symbol-rate units; one symbol spans
    // `oversampling` samples, so the per-sample spacing is 1/oversampling^2
    const double spacing = 1.0 / (static_cast<double>(oversampling) * static_cast<double>(oversampling));
    const double center = (static_cast<double>(num_tones) - 1.0) / 2.0;
    std::vector<std::complex<double>> out;
    out.reserve(tone_indices.size() * oversampling);
    double phase = 0.0;
    for (int tone : tone_indices) {
        if (tone < 0 || static_cast<std::size_t>(tone) >= num_tones) {
            throw ShapeError("fsk_waveform: tone index " + std::to_string(tone) + " out of range");
        }
        const double freq = (static_cast<double>(tone) - center) * spacing;  // cycles/sample
        for (std::size_t n = 0; n < oversampling; ++n) {
            out.emplace_back(std::cos(phase), std::sin(phase));
            phase += 2.0 * kPi * freq;  // integrate frequency: continuous across symbols
        }
    }
    return out;
}

void apply_impairments(std::vector<std::complex<double>>& waveform, double phase_offset,
                       double cfo) {
    for (std::size_t n = 0; n < waveform.size(); ++n) {
        const double angle = 2.0 * kPi * cfo * static_cast<double>(n) + phase_offset;
        waveform[n] *= std::complex<double>(std::cos(angle), std::sin(angle));
    }
}

void add_awgn(std::vector<std::complex<double>>& waveform, double snr_db, Rng& rng) {
    double power = 0.0;
    for (const auto& v : waveform) power += std::norm(v);
    power /= static_cast<double>(waveform.size());
    if (!(power > 0.0)) {
        throw DegenerateInputError("add_awgn: zero-power waveform");
    }
    const double noise_var = power / std::pow(10.0, snr_db / 10.0);
    const double sigma = std::sqrt(noise_var / 2.0);  // split across real and imaginary parts
    for (auto& v : waveform) {
        v += std::complex<double>(sigma * rng.normal(), sigma * rng.normal());
    }
}

void normalize_minmax(IQSample& sample) {
    auto normalize_channel = [](std::vector<double>& ch, const char* name) {
        const auto [lo_it, hi_it] = std::minmax_element(ch.begin(), ch.end());
        const double lo = *lo_it, hi = *hi_it;
        if (!(hi > lo)) {
            throw DegenerateInputError(std::string("normalize_minmax: constant ") + name +
                                       " channel");
        }
        const double span = hi - lo;
        for (double& v : ch) v = (v - lo) / span * 2.0 - 1.0;
    };
    normalize_channel(sample.i, "I");
    normalize_channel(sample.q, "Q");
}

IQSample synthesize_sample(const SynthConfig& cfg, std::size_t scheme_index,
                           std::size_t snr_index, std::size_t sample_index) {
    const SchemeInfo& info = scheme_info(cfg.schemes.at(scheme_index));
    const int snr_db = cfg.snr_grid_db.at(snr_index);
    Rng rng = Rng::keyed(cfg.seed, scheme_index, snr_index, sample_index);

    // fixed draw order: bits, rolloff, phase, cfo, then noise
    std::vector<int> bits(cfg.symbols_per_sample * info.bits_per_symbol);
    for (int& b : bits) b = static_cast<int>(rng.bit());
    const double rolloff = rng.uniform(cfg.rolloff_lo, cfg.rolloff_hi);
    const double phase = rng.uniform(cfg.phase_lo, cfg.phase_hi);
    const double cfo = rng.uniform(cfg.cfo_lo, cfg.cfo_hi);

    ModulatedSymbols symbols = modulate(bits, info.name);
    std::vector<std::complex<double>> waveform;
    if (info.fsk) {
        waveform = fsk_waveform(symbols.tone_indices, info.num_tones, cfg.oversampling);
    } else {
        waveform = pulse_shape(symbols.points, rolloff, cfg.oversampling,
                               info.oqpsk ? cfg.oversampling / 2 : 0);
    }
    apply_impairments(waveform, phase, cfo);
    add_awgn(waveform, static_cast<double>(snr_db), rng);

    IQSample sample;
    sample.label = static_cast<int>(scheme_index);
    sample.snr_db = snr_db;
    sample.i.resize(waveform.size());
    sample.q.resize(waveform.size());
    for (std::size_t n = 0; n < waveform.size(); ++n) {
        sample.i[n] = waveform[n].real();
        sample.q[n] = waveform[n].imag();
    }
    normalize_minmax(sample);
    // quantize to the container's on-disk precision so write -> read is lossless
    for (double& v : sample.i) v = static_cast<float>(v);
    for (double& v : sample.q) v = static_cast<float>(v);
    return sample;
}

SignalDataset generate_dataset(const SynthConfig& raw) {
    const SynthConfig cfg = raw.resolved();
    const std::size_t per_cell = cfg.samples_per_class_per_snr;
    const std::size_t cells_per_scheme = cfg.snr_grid_db.size();
    const std::size_t total = cfg.schemes.size() * cells_per_scheme * per_cell;

    SignalDataset ds;
    ds.class_names = cfg.schemes;
    ds.snr_grid = cfg.snr_grid_db;
    ds.config_hash = cfg.hash();
    ds.seed = cfg.seed;
    ds.samples.resize(total);

    // canonical order: scheme-major, then SNR, then index; each flat slot is written by
    // exactly one task, so the result is independent of the worker count
    parallel_for_each(total, [&](std::size_t flat) {
        const std::size_t scheme_index = flat / (cells_per_scheme * per_cell);
        const std::size_t rest = flat % (cells_per_scheme * per_cell);
        const std::size_t snr_index = rest / per_cell;
        const std::size_t sample_index = rest % per_cell;
        ds.samples[flat] = synthesize_sample(cfg, scheme_index, snr_index, sample_index);
    });
    return ds;
}

}  // namespace signet
