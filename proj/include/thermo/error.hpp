#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace thermo {

enum class ErrorCode {
    ParseError,
    DuplicateElement,
    DanglingReference,
    CyclicInheritance,
    SchemaError,
    UnknownElement,
    UnknownFunction,
    DomainError,
    MissingValue,
    NoSolution,
    MultipleOccurrenceUnsolved,
    UnknownRule,
    UnknownAttribute,
    UnknownMaterial,
    UnknownProcessClass,
    UnknownInstance,
    InvalidValue,
    AlreadyFinalized,
    UnknownVariable,
    NonPositiveValue,
    NotANumber,
    TargetIsKnown,
    ConstantNotEditable,
    NameCollision,
    IncompleteDefinition,
    UnboundSlot,
    NotSolvable,
    InconsistentInput,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. `details` carries the machine-readable
/// payload (missing names, unreached targets, offending equation, ...);
/// `stage` is set by the solve pipeline to tell which step failed.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::vector<std::string> details = {});

    ErrorCode code() const noexcept { return code_; }
    const std::vector<std::string>& details() const noexcept { return details_; }
    const std::string& stage() const noexcept { return stage_; }

    Error& with_stage(std::string stage) {
        stage_ = std::move(stage);
        return *this;
    }

private:
    ErrorCode code_;
    std::vector<std::string> details_;
    std::string stage_;
};

}  // namespace thermo
