#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace escape {

/// Base class of every error thrown by this library.
///
/// Pipeline stages may attach a stage label after the fact; the label is
/// prepended to the message so callers see where a propagated error came from.
class Error : public std::runtime_error {
public:
    explicit Error(std::string message)
        : std::runtime_error(message), message_(std::move(message)) {}

    const char* what() const noexcept override { return message_.c_str(); }

    void set_stage(const std::string& stage) {
        message_ = "[" + stage + "] " + message_;
    }

private:
    std::string message_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& reason)
        : Error("parse error at line " + std::to_string(line) + ": " + reason),
          line_(line),
          reason_(reason) {}

    std::size_t line() const { return line_; }
    const std::string& reason() const { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

class EmptyCloud : public Error {
public:
    using Error::Error;
};

class KTooLarge : public Error {
public:
    using Error::Error;
};

class DegenerateNeighborhood : public Error {
public:
    using Error::Error;
};

class DegenerateConfiguration : public Error {
public:
    using Error::Error;
};

class TooFewAnchors : public Error {
public:
    using Error::Error;
};

class DegenerateAnchors : public Error {
public:
    using Error::Error;
};

class SolverDiverged : public Error {
public:
    using Error::Error;
};

class ColsMismatch : public Error {
public:
    using Error::Error;
};

class TooFewRemaining : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// External predictor exited abnormally; carries exit status and captured stderr.
class ExternalFailed : public Error {
public:
    ExternalFailed(int exit_code, const std::string& diagnostics)
        : Error("external predictor failed with exit code " + std::to_string(exit_code) +
                (diagnostics.empty() ? "" : (": " + diagnostics))),
          exit_code_(exit_code),
          diagnostics_(diagnostics) {}

    int exit_code() const { return exit_code_; }
    const std::string& diagnostics() const { return diagnostics_; }

private:
    int exit_code_;
    std::string diagnostics_;
};

class BadExternalOutput : public Error {
public:
    using Error::Error;
};

}  // namespace escape
