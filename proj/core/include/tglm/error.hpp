#pragma once

#include <stdexcept>
#include <string>

namespace tglm {

// Bad caller input: shape mismatches, out-of-range config, malformed args.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A numeric-domain violation: NaN/Inf where finite values are required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File system / serialization failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An internal precondition between modules was broken (missing carryover
// state, vocabulary hash mismatch, non-deterministic loss under fixed seed).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// Training diverged or gradients went non-finite.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define TGLM_CHECK_ARG(cond, msg)            \
  do {                                       \
    if (!(cond)) throw ::tglm::ArgumentError(msg); \
  } while (0)

#define TGLM_CHECK_CONTRACT(cond, msg)       \
  do {                                       \
    if (!(cond)) throw ::tglm::ContractError(msg); \
  } while (0)

}  // namespace tglm
