#pragma once

#include <stdexcept>
#include <string>

namespace dgn {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInputError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class RankDeficientError : public Error {
public:
    using Error::Error;
};

class AtDeflatedPointError : public Error {
public:
    using Error::Error;
};

class DegenerateEigenvalueError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace dgn
