#pragma once

#include <stdexcept>
#include <string>

namespace ood {

/// Malformed input: bad file syntax, missing fields, unreadable paths.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a domain rule (e.g. a run with a single epoch).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ood
