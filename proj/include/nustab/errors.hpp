#pragma once

#include <stdexcept>
#include <string>

namespace nustab {

// Invalid user input: bad config values, malformed tables, unknown keys.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structurally inconsistent data handed between modules.
struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientModes : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure modes.  Each names the condition, not the algorithm.
struct SpectrumHit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UndampedPole : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KatoDenominatorSingular : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidityWindow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PrecisionExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace nustab
