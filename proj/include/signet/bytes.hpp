#pragma once

// Little-endian byte-buffer assembly and bounds-checked parsing, shared by the
// dataset (`SIGD`) and checkpoint (`SGCK`) containers. Whole files are built in
// memory, CRC'd once, and written with a single call.

#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "signet/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace signet {

struct ByteWriter {
    std::vector<std::uint8_t> bytes;

    template <typename T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const std::size_t at = bytes.size();
        bytes.resize(at + sizeof(T));
        std::memcpy(bytes.data() + at, &v, sizeof(T));
    }

    void put_bytes(const void* data, std::size_t len) {
        const std::size_t at = bytes.size();
        bytes.resize(at + len);
        std::memcpy(bytes.data() + at, data, len);
    }

    // u16 length prefix + raw bytes
    void put_string(const std::string& s) {
        if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw ContractError("string too long for u16 length prefix: " +
                                std::to_string(s.size()) + " bytes");
        }
        put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
        put_bytes(s.data(), s.size());
    }
};

struct ByteReader {
    const std::uint8_t* data;
    std::size_t len;
    std::size_t pos = 0;

    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        if (pos + sizeof(T) > len) {
            throw ContainerError(ContainerError::Fault::Truncated,
                                 "container truncated at byte " + std::to_string(pos));
        }
        T v;
        std::memcpy(&v, data + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }

    void get_bytes(void* out, std::size_t n) {
        if (pos + n > len) {
            throw ContainerError(ContainerError::Fault::Truncated,
                                 "container truncated at byte " + std::to_string(pos));
        }
        std::memcpy(out, data + pos, n);
        pos += n;
    }

    std::string get_string() {
        const auto n = get<std::uint16_t>();
        std::string s(n, '\0');
        get_bytes(s.data(), n);
        return s;
    }
};

// Reads a whole file; throws ContainerError(Fault::Io) when it cannot be opened or read.
std::vector<std::uint8_t> read_file_bytes(const std::string& path);

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace signet
