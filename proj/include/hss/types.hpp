#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hss {

using PageAddr = std::uint64_t;
using DeviceIndex = std::size_t;
using TimeUs = double;

inline constexpr std::uint64_t kPageBytes = 4096;

enum class Op : std::uint8_t { Read = 0, Write = 1 };

inline const char* op_name(Op op) { return op == Op::Read ? "R" : "W"; }

// Raised when a caller hands the simulator something it cannot accept
// (bad file, bad config value, unknown name).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an internal invariant is found broken. Always a bug.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hss
