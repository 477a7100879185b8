#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace softarm {

// Tip position outside the reachable sphere, or an argument outside the
// operation's stated domain.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Singular configuration (e.g. cos(alpha) ~ 0 in the angle extraction).
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad run configuration (unknown key, wrong type, out-of-range value).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Image or tensor shape mismatch.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed model or dataset file. Carries the byte offset at which the
// problem was detected.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

class EmptyDatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Simulated angles left the sane region (|angle| > 90 deg or non-finite);
// converts numeric blow-up into a diagnosable failure.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace softarm
