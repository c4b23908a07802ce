#pragma once

#include <stdexcept>

namespace topicident {

/// A sizing guard tripped: enumeration too large, moment order beyond the
/// cache, vocabulary too big for exhaustive search, and similar.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The mixing distribution fails a strict regularity margin.
class RegularityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace topicident
