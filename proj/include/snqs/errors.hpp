#pragma once

#include <stdexcept>
#include <string>

namespace snqs {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape or length mismatch between related objects.
struct DimensionError : Error {
  using Error::Error;
};

// Request exceeds a hard capacity limit (e.g. the dense-basis cap).
struct CapacityError : Error {
  using Error::Error;
};

// Invalid or inconsistent configuration values.
struct ConfigError : Error {
  using Error::Error;
};

// Non-finite or degenerate numeric state.
struct NumericError : Error {
  using Error::Error;
};

// Site or element index out of range.
struct IndexError : Error {
  using Error::Error;
};

// A fidelity term came out non-positive or non-finite: the variational
// state no longer overlaps its target.
struct CollapsedStateError : Error {
  using Error::Error;
};

// Taylor expansion order outside the supported range.
struct UnsupportedOrderError : Error {
  using Error::Error;
};

}  // namespace snqs
