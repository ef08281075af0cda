#pragma once

#include <stdexcept>
#include <string>

namespace streamrec {

enum class ErrorCategory {
    Parse,
    RejectedEdge,
    Schedule,
    InductiveViolation,
    Config,
    EmptyEvaluation,
    DegenerateVariance,
    Checkpoint,
    Io,
};

const char* category_name(ErrorCategory c);

// Base for every error raised by the library. The CLI maps the category to
// a process exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const { return category_; }

private:
    ErrorCategory category_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(ErrorCategory::Parse, "line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class RejectedEdgeError : public Error {
public:
    RejectedEdgeError(std::size_t line, const std::string& what)
        : Error(ErrorCategory::RejectedEdge, "line " + std::to_string(line) + ": " + what),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ScheduleError : public Error {
public:
    explicit ScheduleError(const std::string& what) : Error(ErrorCategory::Schedule, what) {}
};

class InductiveViolation : public Error {
public:
    explicit InductiveViolation(const std::string& what)
        : Error(ErrorCategory::InductiveViolation, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

class EmptyEvaluationError : public Error {
public:
    explicit EmptyEvaluationError(const std::string& what)
        : Error(ErrorCategory::EmptyEvaluation, what) {}
};

class DegenerateVarianceError : public Error {
public:
    explicit DegenerateVarianceError(const std::string& what)
        : Error(ErrorCategory::DegenerateVariance, what) {}
};

class CheckpointError : public Error {
public:
    explicit CheckpointError(const std::string& what) : Error(ErrorCategory::Checkpoint, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

}  // namespace streamrec
