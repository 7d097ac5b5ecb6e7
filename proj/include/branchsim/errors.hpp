#pragma once

#include <stdexcept>

namespace branchsim {

// Bad or inconsistent scenario/physics configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Resource limit hit, e.g. exact-mode population cap (CLI exit code 3).
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical invariant the engine guarantees was violated at runtime:
// scheduling corruption, measure-conservation drift, level off threshold
// at an event (CLI exit code 4).
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace branchsim
