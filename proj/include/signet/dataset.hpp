#pragma once

// Labeled IQ sample collections and their binary container.
//
// Container format `SIGD` v1, little-endian:
//   magic "SIGD" (4 bytes)
//   version        u16  (= 1)
//   N              u32  (samples per channel)
//   num_samples    u64
//   num_classes    u16
//   class names    num_classes x { len u16, UTF-8 bytes }
//   snr grid       count u16, then count x i16 (dB)
//   samples        num_samples x { label u16, snr i16, I as N x f32, Q as N x f32 }
//   crc32          u32 over every preceding byte (IEEE, poly 0xEDB88320)
//
// Channel data is 32-bit float on disk and widened to 64-bit in memory; the generator
// quantizes to 32-bit at creation time so write -> read round-trips are lossless.

#include <cstdint>
#include <string>
#include <vector>

#include "signet/errors.hpp"
#include "signet/tensor.hpp"

namespace signet {

struct IQSample {
    std::vector<double> i;
    std::vector<double> q;
    int label = 0;
    int snr_db = 0;

    bool operator==(const IQSample&) const = default;
};

struct SignalDataset {
    std::vector<IQSample> samples;
    std::vector<std::string> class_names;
    std::vector<int> snr_grid;
    // in-memory provenance (not serialized): hash of the generating config, and its seed
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;

    std::size_t sample_length() const { return samples.empty() ? 0 : samples.front().i.size(); }
};

// IEEE CRC-32 (reflected, poly 0xEDB88320, init/final 0xFFFFFFFF).
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

void write_dataset(const SignalDataset& ds, const std::string& path);
SignalDataset read_dataset(const std::string& path);

// Sample channels stacked as a [2 x N] tensor (row 0 = I, row 1 = Q).
Tensor to_tensor(const IQSample& sample);

}  // namespace signet
