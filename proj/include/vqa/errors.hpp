#pragma once

#include <stdexcept>
#include <string>

namespace vqa {

// Base of every error the library throws. The CLI maps the subclasses onto
// process exit codes (see cli/commands.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor extents that do not fit the operation.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Integer index outside its valid range.
class IndexError : public Error {
public:
    using Error::Error;
};

// Invalid model/training/pipeline configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input file; the message names the offending line.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    explicit FormatError(const std::string& what) : Error(what) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

// A named entity (image, concept) that is not present.
class LookupError : public Error {
public:
    using Error::Error;
};

// Caller violated an operation's precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

// Masked reduction over a sequence with no unmasked step.
class EmptySequenceError : public Error {
public:
    using Error::Error;
};

}  // namespace vqa
