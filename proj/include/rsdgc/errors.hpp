#pragma once

#include <stdexcept>
#include <string>

namespace rsdgc {

// Errors thrown by the compression pipeline. Each maps to one failure class
// callers are expected to distinguish (CLI exit codes, test assertions).

struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct IndexMismatch : std::runtime_error {
    explicit IndexMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct NonFinite : std::runtime_error {
    explicit NonFinite(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyModel : std::runtime_error {
    explicit EmptyModel(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyLedger : std::runtime_error {
    explicit EmptyLedger(const std::string& what) : std::runtime_error(what) {}
};

struct DivergedLoss : std::runtime_error {
    explicit DivergedLoss(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rsdgc
