#pragma once

#include <stdexcept>
#include <string>

namespace latentga {

/// Dimension or shape disagreement between tensors or layers.
struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid numeric range supplied by the caller (e.g. lo > hi).
struct RangeError : std::invalid_argument {
    explicit RangeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid configuration values, detected before any compute starts.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed file contents (bad magic, bad version, bad payload).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure, reported with the offending path.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Training diverged (non-finite loss) or violated a training contract.
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

/// API misuse that the caller must fix (e.g. a stale forward cache).
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

} // namespace latentga
