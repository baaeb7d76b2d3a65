#pragma once

#include <stdexcept>
#include <string>

namespace star {

enum class ErrorCode {
    InvalidArgument,
    Parse,
    MalformedGroundTruth,
    DegenerateStudent,
    DegenerateTeacher,
    ZeroVariance,
    LengthMismatch,
    Io,
};

// Single exception type for the library; the code drives the C API status
// mapping and the CLI exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace star
