#pragma once
#include <stdexcept>
#include <string>

namespace bham {

/// Broad failure classes; the CLI maps each to its own exit code.
enum class ErrorKind {
    domain,         ///< argument outside a function's mathematical domain
    schema,         ///< missing/unknown column, wrong type, missing values
    parse,          ///< malformed spec rows, flags or archive contents
    numeric,        ///< solver divergence, degenerate basis, non-finite values
    io,             ///< unreadable or unwritable files
};

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};
struct SchemaError : Error {
    explicit SchemaError(const std::string& w) : Error(ErrorKind::schema, w) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string& w) : Error(ErrorKind::parse, w) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};

const char* to_string(ErrorKind kind) noexcept;

} // namespace bham
