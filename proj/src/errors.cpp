#include <bham/errors.hpp>

namespace bham {

const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
        case ErrorKind::domain: return "domain error";
        case ErrorKind::schema: return "schema error";
        case ErrorKind::parse: return "parse error";
        case ErrorKind::numeric: return "numerical failure";
        case ErrorKind::io: return "I/O error";
    }
    return "error";
}

} // namespace bham
