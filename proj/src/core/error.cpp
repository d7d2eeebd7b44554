#include "freebloom/core/error.hpp"

namespace freebloom {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::numeric_domain: return "numeric-domain";
    case ErrorKind::transport: return "transport";
    case ErrorKind::parse: return "parse";
    case ErrorKind::state: return "state";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

} // namespace freebloom
