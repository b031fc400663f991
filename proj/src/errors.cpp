#include "privreport/errors.hpp"

namespace privreport {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::UnknownReference: return "UnknownReference";
        case ErrorCode::EmptyDiagram: return "EmptyDiagram";
        case ErrorCode::PreconditionViolated: return "PreconditionViolated";
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::MissingSlot: return "MissingSlot";
        case ErrorCode::UnclosedScratchpad: return "UnclosedScratchpad";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::AuthMissing: return "AuthMissing";
        case ErrorCode::TransportError: return "TransportError";
        case ErrorCode::MalformedResponse: return "MalformedResponse";
        case ErrorCode::EmptyCompletion: return "EmptyCompletion";
        case ErrorCode::ItemCountMismatch: return "ItemCountMismatch";
        case ErrorCode::MissingPart: return "MissingPart";
        case ErrorCode::CoverageMismatch: return "CoverageMismatch";
    }
    return "Unknown";
}

}  // namespace privreport
