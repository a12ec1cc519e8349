#pragma once

#include <stdexcept>
#include <string>

namespace signet {

// Shape/dimension mismatches between tensors or operator arguments.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration: unknown keys, out-of-range values, impossible requests.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Inputs that make an operation mathematically undefined (constant channel,
// zero-power waveform, ...).
class DegenerateInputError : public std::runtime_error {
public:
    explicit DegenerateInputError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse that a caller could have prevented (non-scalar loss, ...).
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Training aborted because a loss or gradient went non-finite.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dataset/checkpoint container faults. `fault` tells the categories apart.
class ContainerError : public std::runtime_error {
public:
    enum class Fault { BadMagic, Version, Truncated, Checksum, Malformed, Io };

    ContainerError(Fault f, const std::string& msg) : std::runtime_error(msg), fault(f) {}

    Fault fault;
};

}  // namespace signet
