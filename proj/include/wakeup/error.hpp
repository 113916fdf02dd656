#pragma once

#include <stdexcept>
#include <string>

namespace wakeup {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: infeasible generator parameters, unknown scheme ids,
// incompatible protocol/knowledge combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A node state machine did something the model forbids (send on an invalid
// port, token revisiting a node, CONGEST violation in strict mode).
class ProtocolFault : public Error {
 public:
  using Error::Error;
};

// Advice bits could not be parsed by the scheme that claims to own them.
class DecodeFault : public Error {
 public:
  using Error::Error;
};

}  // namespace wakeup
