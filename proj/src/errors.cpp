#include "cfb/errors.hpp"

namespace cfb {

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return "config";
        case ErrorKind::validation: return "validation";
        case ErrorKind::lookup: return "lookup";
        case ErrorKind::size: return "size";
        case ErrorKind::range: return "range";
        case ErrorKind::format: return "format";
        case ErrorKind::warmup: return "warmup";
        case ErrorKind::join: return "join";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace cfb
