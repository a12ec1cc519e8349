#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <limits>

#include "signet/bytes.hpp"
#include "signet/dataset.hpp"

namespace signet {

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'I', 'G', 'D'};
constexpr std::uint16_t kVersion = 1;

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t n = 0; n < 256; ++n) {
        std::uint32_t c = n;
        for (int bit = 0; bit < 8; ++bit) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[n] = c;
    }
    return table;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed) {
    static const std::array<std::uint32_t, 256> table = make_crc_table();
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t n = 0; n < len; ++n) c = table[(c ^ p[n]) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}


std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw ContainerError(ContainerError::Fault::Io, "cannot open '" + path + "'");
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw ContainerError(ContainerError::Fault::Io, "short read from '" + path + "'");
    return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ContainerError(ContainerError::Fault::Io, "cannot open '" + path + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ContainerError(ContainerError::Fault::Io, "short write to '" + path + "'");
}

void write_dataset(const SignalDataset& ds, const std::string& path) {
    const std::size_t n = ds.sample_length();
    if (ds.class_names.empty() || ds.class_names.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw ContractError("write_dataset: class count " + std::to_string(ds.class_names.size()) +
                            " outside u16 range");
    }
    if (ds.snr_grid.empty() || ds.snr_grid.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw ContractError("write_dataset: SNR grid size outside u16 range");
    }
    for (const IQSample& s : ds.samples) {
        if (s.i.size() != n || s.q.size() != n) {
            throw ContractError("write_dataset: ragged sample lengths");
        }
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= ds.class_names.size()) {
            throw ContractError("write_dataset: label " + std::to_string(s.label) +
                                " outside class table");
        }
        if (std::find(ds.snr_grid.begin(), ds.snr_grid.end(), s.snr_db) == ds.snr_grid.end()) {
            throw ContractError("write_dataset: sample SNR " + std::to_string(s.snr_db) +
                                " not in grid");
        }
    }

    ByteWriter w;
    w.put_bytes(kMagic.data(), kMagic.size());
    w.put<std::uint16_t>(kVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(n));
    w.put<std::uint64_t>(ds.samples.size());
    w.put<std::uint16_t>(static_cast<std::uint16_t>(ds.class_names.size()));
    for (const std::string& name : ds.class_names) {
        if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw ContractError("write_dataset: class name too long");
        }
        w.put_string(name);
    }
    w.put<std::uint16_t>(static_cast<std::uint16_t>(ds.snr_grid.size()));
    for (int snr : ds.snr_grid) w.put<std::int16_t>(static_cast<std::int16_t>(snr));
    for (const IQSample& s : ds.samples) {
        w.put<std::uint16_t>(static_cast<std::uint16_t>(s.label));
        w.put<std::int16_t>(static_cast<std::int16_t>(s.snr_db));
        for (double v : s.i) w.put<float>(static_cast<float>(v));
        for (double v : s.q) w.put<float>(static_cast<float>(v));
    }
    w.put<std::uint32_t>(crc32(w.bytes.data(), w.bytes.size()));

    write_file_bytes(path, w.bytes);
}

SignalDataset read_dataset(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);

    if (bytes.size() < kMagic.size() + sizeof(std::uint32_t)) {
        throw ContainerError(ContainerError::Fault::Truncated, "file smaller than header");
    }
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw ContainerError(ContainerError::Fault::BadMagic, "magic bytes are not 'SIGD'");
    }

    // checksum covers everything before the trailing u32
    const std::size_t body_len = bytes.size() - sizeof(std::uint32_t);
    std::uint32_t stored = 0;
    std::memcpy(&stored, bytes.data() + body_len, sizeof(stored));
    const std::uint32_t computed = crc32(bytes.data(), body_len);
    if (stored != computed) {
        throw ContainerError(ContainerError::Fault::Checksum,
                             "checksum mismatch: stored " + std::to_string(stored) +
                                 ", computed " + std::to_string(computed));
    }

    ByteReader r{bytes.data(), body_len, kMagic.size()};
    const auto version = r.get<std::uint16_t>();
    if (version != kVersion) {
        throw ContainerError(ContainerError::Fault::Version,
                             "unsupported container version " + std::to_string(version));
    }
    const auto n = r.get<std::uint32_t>();
    const auto num_samples = r.get<std::uint64_t>();
    const auto num_classes = r.get<std::uint16_t>();

    SignalDataset ds;
    ds.class_names.reserve(num_classes);
    for (std::uint16_t c = 0; c < num_classes; ++c) {
        ds.class_names.push_back(r.get_string());
    }
    const auto snr_count = r.get<std::uint16_t>();
    ds.snr_grid.reserve(snr_count);
    for (std::uint16_t s = 0; s < snr_count; ++s) ds.snr_grid.push_back(r.get<std::int16_t>());

    ds.samples.reserve(num_samples);
    for (std::uint64_t s = 0; s < num_samples; ++s) {
        IQSample sample;
        sample.label = r.get<std::uint16_t>();
        sample.snr_db = r.get<std::int16_t>();
        if (sample.label >= num_classes) {
            throw ContainerError(ContainerError::Fault::Malformed,
                                 "sample label " + std::to_string(sample.label) +
                                     " outside class table of size " + std::to_string(num_classes));
        }
        if (std::find(ds.snr_grid.begin(), ds.snr_grid.end(), sample.snr_db) ==
            ds.snr_grid.end()) {
            throw ContainerError(ContainerError::Fault::Malformed,
                                 "sample SNR " + std::to_string(sample.snr_db) + " not in grid");
        }
        sample.i.resize(n);
        sample.q.resize(n);
        for (std::uint32_t t = 0; t < n; ++t) sample.i[t] = r.get<float>();
        for (std::uint32_t t = 0; t < n; ++t) sample.q[t] = r.get<float>();
        ds.samples.push_back(std::move(sample));
    }
    if (r.pos != body_len) {
        throw ContainerError(ContainerError::Fault::Malformed,
                             std::to_string(body_len - r.pos) + " unexpected trailing bytes");
    }
    return ds;
}

Tensor to_tensor(const IQSample& sample) {
    const std::size_t n = sample.i.size();
    Tensor out({2, n});
    std::copy(sample.i.begin(), sample.i.end(), out.data());
    std::copy(sample.q.begin(), sample.q.end(), out.data() + n);
    return out;
}

}  // namespace signet
