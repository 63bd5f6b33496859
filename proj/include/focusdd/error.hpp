#pragma once

#include <stdexcept>
#include <string>

namespace focusdd {

// Base for everything the library throws on bad input or failed I/O.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or sizes that do not fit together (image vs. patch size, weights vs. config, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed or unsupported bytes on disk (PNG, PNM, NTF, JSONL).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A user-supplied parameter outside its documented domain.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace focusdd
