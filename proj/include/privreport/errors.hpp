#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace privreport {

// Machine-readable error categories used across the library. The CLI maps
// these onto exit codes; tests dispatch on them instead of message text.
enum class ErrorCode {
    // dfd parsing
    SyntaxError,
    DuplicateId,
    UnknownReference,
    EmptyDiagram,
    PreconditionViolated,
    // bundle loading
    MissingFile,
    SchemaViolation,
    IoError,
    // prompts & provider
    MissingSlot,
    UnclosedScratchpad,
    InvalidConfig,
    AuthMissing,
    TransportError,
    MalformedResponse,
    EmptyCompletion,
    // agent output contracts
    ItemCountMismatch,
    MissingPart,
    CoverageMismatch,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string subject = {})
        : std::runtime_error(std::string("[") + error_code_name(code) + "] " + message),
          code_(code),
          message_(std::move(message)),
          subject_(std::move(subject)) {}

    ErrorCode code() const { return code_; }
    // Message without the [Code] prefix that what() carries.
    const std::string& message() const { return message_; }
    // The offending element id, file name, slot name, ... when one exists.
    const std::string& subject() const { return subject_; }

private:
    ErrorCode code_;
    std::string message_;
    std::string subject_;
};

// Raised by the pipeline when a stage fails; wraps the stage name around the
// underlying error so callers can report where the chain broke.
class PipelineError : public Error {
public:
    PipelineError(std::string stage, const Error& cause)
        : Error(cause.code(), "stage " + stage + ": " + cause.message(), cause.subject()),
          stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace privreport
