#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fblgp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A Cholesky pivot was non-positive even after jitter.
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

/// The closed-loop matrix is not Hurwitz, so no PD Lyapunov solution exists.
class NotHurwitz : public Error {
public:
    using Error::Error;
};

/// An RK4 stage produced a NaN or infinity.
class NonFiniteDerivative : public Error {
public:
    using Error::Error;
};

/// A regressor or disturbance evaluation was not finite.
class NonFinite : public Error {
public:
    using Error::Error;
};

/// The plant state left the admissible box |x_i| <= 1e3.
class StateEscape : public Error {
public:
    using Error::Error;
};

/// Prediction requested from a GP with no training data.
class Unfitted : public Error {
public:
    using Error::Error;
};

/// Prediction requested after observe() without a rebuild.
class StaleModel : public Error {
public:
    using Error::Error;
};

/// Every hyperparameter start hit a non-PD Gram matrix.
class AllStartsFailed : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class UnknownKey : public Error {
public:
    explicit UnknownKey(const std::string& key)
        : Error("unknown configuration key '" + key + "'"), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class OutOfRange : public Error {
public:
    OutOfRange(const std::string& key, const std::string& what)
        : Error("value of '" + key + "' out of range: " + what), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace fblgp
