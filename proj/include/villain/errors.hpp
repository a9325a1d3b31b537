#pragma once

#include <stdexcept>
#include <string>

namespace villain {

// Bad user input: flags, config files, JSON documents, out-of-range parameters.
struct ConfigError : std::invalid_argument
{
	using std::invalid_argument::invalid_argument;
};

// A mathematical precondition does not hold (non-closed loop, empty segment, ...).
struct DomainError : std::domain_error
{
	using std::domain_error::domain_error;
};

// The requested problem is too large for the exhaustive code path.
struct ResourceError : std::runtime_error
{
	using std::runtime_error::runtime_error;
};

// Non-convergence, NaN, failed refinement check.
struct NumericalError : std::runtime_error
{
	using std::runtime_error::runtime_error;
};

} // namespace villain
