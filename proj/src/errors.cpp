#include "hyperstab/errors.hpp"

namespace hyperstab {

const char* error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::input: return "input";
        case ErrorKind::config: return "config";
        case ErrorKind::numeric: return "numeric";
        case ErrorKind::dynamics: return "dynamics";
        case ErrorKind::io: return "io";
        case ErrorKind::budget: return "budget";
        case ErrorKind::unsupported: return "unsupported";
    }
    return "unknown";
}

}  // namespace hyperstab
