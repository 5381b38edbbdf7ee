#pragma once

#include <stdexcept>
#include <string>

namespace mfpca {

enum class ErrorKind {
    io,
    format,
    parse,
    uniqueness,
    dimension,
    domain,
    config,
    rank,
    insufficient_data,
    landmark_not_found,
    invalid_landmarks,
    symmetry,
    unidentifiable,
    precondition,
    version,
    corrupt_model,
    covariance,
    undefined,
    orthonormalization,
    join,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::parse: return "parse";
    case ErrorKind::uniqueness: return "uniqueness";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::domain: return "domain";
    case ErrorKind::config: return "configuration";
    case ErrorKind::rank: return "rank";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::landmark_not_found: return "landmark-not-found";
    case ErrorKind::invalid_landmarks: return "invalid-landmarks";
    case ErrorKind::symmetry: return "symmetry";
    case ErrorKind::unidentifiable: return "within-level-unidentifiable";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::version: return "version";
    case ErrorKind::corrupt_model: return "corrupt-model";
    case ErrorKind::covariance: return "covariance";
    case ErrorKind::undefined: return "undefined";
    case ErrorKind::orthonormalization: return "orthonormalization";
    case ErrorKind::join: return "join";
    }
    return "unknown";
}

} // namespace mfpca
