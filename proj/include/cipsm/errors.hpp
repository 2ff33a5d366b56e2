// Error taxonomy shared across the library and the CLI exit-code mapping.
#pragma once

#include <stdexcept>
#include <string>

namespace cipsm {

enum class ErrorCode {
    invalid_config,
    invalid_input,
    unknown_item,
    undefined_rate,
    invalid_window,
    invalid_partition,
    infeasible_constraints,
    too_large,
    no_candidates,
    degenerate_design,
    phase_order,
    io_error,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_config: return "InvalidConfig";
        case ErrorCode::invalid_input: return "InvalidInput";
        case ErrorCode::unknown_item: return "UnknownItem";
        case ErrorCode::undefined_rate: return "UndefinedRate";
        case ErrorCode::invalid_window: return "InvalidWindow";
        case ErrorCode::invalid_partition: return "InvalidPartition";
        case ErrorCode::infeasible_constraints: return "InfeasibleConstraints";
        case ErrorCode::too_large: return "TooLarge";
        case ErrorCode::no_candidates: return "NoCandidates";
        case ErrorCode::degenerate_design: return "DegenerateDesign";
        case ErrorCode::phase_order: return "PhaseOrder";
        case ErrorCode::io_error: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Validation errors map to CLI exit 2, phase ordering to 3, everything else to 4.
inline int cli_exit_code(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_config:
        case ErrorCode::invalid_input:
        case ErrorCode::unknown_item:
        case ErrorCode::invalid_window:
        case ErrorCode::invalid_partition:
            return 2;
        case ErrorCode::phase_order:
            return 3;
        default:
            return 4;
    }
}

}  // namespace cipsm
