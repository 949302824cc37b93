#pragma once

#include <stdexcept>
#include <string>

namespace promptvar {

// Every failure raised by the library derives from Error. The CLI maps the
// category onto a process exit code.
enum class ErrorKind {
    dimension,
    config,
    parse,
    validation,
    data,
    dependency,
    numerical,
    io,
    llm,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& what) : Error(ErrorKind::dimension, what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(ErrorKind::parse, what) {}
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct DependencyError : Error {
    explicit DependencyError(const std::string& what) : Error(ErrorKind::dependency, what) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

struct LlmError : Error {
    explicit LlmError(const std::string& what) : Error(ErrorKind::llm, what) {}
};

}  // namespace promptvar
