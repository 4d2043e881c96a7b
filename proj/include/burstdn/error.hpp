#pragma once

#include <stdexcept>
#include <string>

namespace burstdn {

// Raised when a feature-based estimation step has too few correspondences
// to proceed (callers typically fall back to a coarser-level result).
class InsufficientFeatures : public std::runtime_error {
public:
    explicit InsufficientFeatures(const std::string& what) : std::runtime_error(what) {}
};

// Raised by file loaders; message carries the byte offset or key name.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a pluggable callable breaks its interface contract
// (e.g. a denoiser returning a residual of the wrong size).
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

} // namespace burstdn
