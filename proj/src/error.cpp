#include "thermo/error.hpp"

namespace thermo {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::DuplicateElement: return "DuplicateElement";
        case ErrorCode::DanglingReference: return "DanglingReference";
        case ErrorCode::CyclicInheritance: return "CyclicInheritance";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::UnknownElement: return "UnknownElement";
        case ErrorCode::UnknownFunction: return "UnknownFunction";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::MissingValue: return "MissingValue";
        case ErrorCode::NoSolution: return "NoSolution";
        case ErrorCode::MultipleOccurrenceUnsolved: return "MultipleOccurrenceUnsolved";
        case ErrorCode::UnknownRule: return "UnknownRule";
        case ErrorCode::UnknownAttribute: return "UnknownAttribute";
        case ErrorCode::UnknownMaterial: return "UnknownMaterial";
        case ErrorCode::UnknownProcessClass: return "UnknownProcessClass";
        case ErrorCode::UnknownInstance: return "UnknownInstance";
        case ErrorCode::InvalidValue: return "InvalidValue";
        case ErrorCode::AlreadyFinalized: return "AlreadyFinalized";
        case ErrorCode::UnknownVariable: return "UnknownVariable";
        case ErrorCode::NonPositiveValue: return "NonPositiveValue";
        case ErrorCode::NotANumber: return "NotANumber";
        case ErrorCode::TargetIsKnown: return "TargetIsKnown";
        case ErrorCode::ConstantNotEditable: return "ConstantNotEditable";
        case ErrorCode::NameCollision: return "NameCollision";
        case ErrorCode::IncompleteDefinition: return "IncompleteDefinition";
        case ErrorCode::UnboundSlot: return "UnboundSlot";
        case ErrorCode::NotSolvable: return "NotSolvable";
        case ErrorCode::InconsistentInput: return "InconsistentInput";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::vector<std::string> details)
    : std::runtime_error(message), code_(code), details_(std::move(details)) {}

}  // namespace thermo
