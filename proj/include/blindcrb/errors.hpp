#pragma once

#include <stdexcept>
#include <string>

namespace blindcrb {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Raised when an inverse is requested of a Fisher information block that is singular.
class SingularFim : public Error {
public:
    using Error::Error;
};

class DecompositionFailed : public Error {
public:
    using Error::Error;
};

class DegenerateAdjustment : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace blindcrb
