#ifndef SONADV_ERRORS_HPP
#define SONADV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sonadv {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Vector/matrix dimension mismatch.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Class label outside the model's output range.
class LabelError : public Error {
public:
    explicit LabelError(const std::string& msg) : Error(msg) {}
};

// Layer dimension list too short or containing a zero.
class InvalidArchitectureError : public Error {
public:
    explicit InvalidArchitectureError(const std::string& msg) : Error(msg) {}
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, std::size_t epoch)
        : Error(msg), epoch_(epoch) {}
    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

// Empty or otherwise unusable input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration value; message carries the offending field path.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Malformed file content; message carries row/column context.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Nominal value not present in the schema's category set.
class EncodingError : public Error {
public:
    explicit EncodingError(const std::string& msg) : Error(msg) {}
};

// E-RAB drop rate requested with zero normal releases.
class UndefinedRateError : public Error {
public:
    explicit UndefinedRateError(const std::string& msg) : Error(msg) {}
};

// A stratified split would leave a partition without anomalies.
class StratificationError : public Error {
public:
    explicit StratificationError(const std::string& msg) : Error(msg) {}
};

// Broken internal invariant (a bug, not a user error).
class InternalError : public Error {
public:
    explicit InternalError(const std::string& msg) : Error(msg) {}
};

} // namespace sonadv

#endif
