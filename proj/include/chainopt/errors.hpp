#pragma once

#include <stdexcept>
#include <string>

namespace chainopt {

/// Base class for all chainopt errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A configuration selects no verifier (all-zero selection vector).
struct NoVerifierSelected : Error {
    using Error::Error;
};

/// A configuration violates a structural invariant (selection length,
/// selection count, non-positive decision variable).
struct InfeasibleConfiguration : Error {
    using Error::Error;
};

/// Exhaustive enumeration refused: instance exceeds the guard rails.
struct InstanceTooLarge : Error {
    using Error::Error;
};

/// Input document is malformed or violates a field invariant.
/// The message names the offending field where one can be identified.
struct ParseError : Error {
    using Error::Error;
};

/// Input document declares an unsupported schema version.
struct SchemaVersionMismatch : Error {
    using Error::Error;
};

/// A truncated sampling law rejects almost every draw.
struct DegenerateLaw : Error {
    using Error::Error;
};

/// Statistics requested over an empty result set.
struct EmptyResults : Error {
    using Error::Error;
};

} // namespace chainopt
