#pragma once

#include <stdexcept>
#include <string>

namespace refl {

// Validation errors: malformed parameters or inputs. The CLI maps these to
// exit code 2.
struct RangeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct UnsupportedDegree : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct BadConstant : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct LengthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct BadEpsilon : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct BadWeights : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ShapeMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct BadSpec : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct RankDeficient : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct TooManyAtoms : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct GridTooCoarse : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical failures on inputs that passed validation. The CLI maps these to
// exit code 1.
struct NonFinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoSignChange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace refl
