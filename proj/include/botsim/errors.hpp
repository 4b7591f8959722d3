#pragma once

#include <stdexcept>
#include <string>

namespace botsim {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// schedule() was asked to fire an event in the past; an entity logic bug.
struct PastEventError : SimError {
    using SimError::SimError;
};

/// A packet addressed outside the contained block. Aborts the run.
struct ContainmentViolation : SimError {
    using SimError::SimError;
};

/// Scenario file could not be parsed.
struct ParseError : SimError {
    using SimError::SimError;
};

/// Scenario parsed but references something undeclared or inconsistent.
struct ValidationError : SimError {
    ValidationError(std::string field_, const std::string& msg)
        : SimError(msg), field(std::move(field_)) {}
    std::string field;
};

/// Contained block too small for the requested device count.
struct AddressExhaustion : SimError {
    using SimError::SimError;
};

/// Malformed topology spec (dangling attachments and the like).
struct TopologySpecError : SimError {
    using SimError::SimError;
};

/// route() called with an unallocated source address.
struct UnknownSource : SimError {
    using SimError::SimError;
};

/// Trace analysis asked about a bot the run never saw.
struct UnknownBot : SimError {
    using SimError::SimError;
};

struct IoError : SimError {
    using SimError::SimError;
};

} // namespace botsim
