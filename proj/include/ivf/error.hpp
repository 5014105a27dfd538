#pragma once

#include <stdexcept>
#include <string>

namespace ivf {

// Base class for every error raised by the library. The CLI maps the
// concrete subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GraphError : public Error {
public:
    using Error::Error;
};

class ScmError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class RegressionError : public Error {
public:
    using Error::Error;
};

class SplineError : public Error {
public:
    using Error::Error;
};

class PlanError : public Error {
public:
    using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace ivf
