#pragma once

#include <stdexcept>
#include <string>

namespace altmin {

// The observation graph cannot support the requested update, e.g. an ELS
// message out of a degree-1 vertex (empty excluded-neighbour sum).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A local least-squares problem had no usable data (zero denominator in the
// rank-1 closed form).
class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace altmin
