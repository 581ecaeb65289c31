#ifndef LIPSYNC_ERRORS_HPP
#define LIPSYNC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lipsync {

// Every library error carries a category that the CLI maps to an exit code:
// config/schema problems exit 2, data problems exit 3.
enum class ErrorCategory { config, data };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

// A domain type was constructed with an invariant violation. The message
// names the offending field.
class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

// File does not match its declared container format (bad magic, bad codec).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

// File ended before the header-declared payload was complete.
class TruncationError : public Error {
public:
    explicit TruncationError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

// Payload values are unusable (non-finite reals, zero-norm embedding rows).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

// Filesystem failure on read or write.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

// Manifest references a file that does not exist; names the clip_id.
class MissingAssetError : public Error {
public:
    explicit MissingAssetError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

// Document violates the manifest/report schema.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

// Sequence too short for the requested operation.
class LengthError : public Error {
public:
    explicit LengthError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

// Caller-supplied options are inconsistent with the inputs.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

// Statistic is undefined on this input (zero variance, empty clip set).
class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

// Landmark index out of range for the mesh it is applied to.
class LandmarkError : public Error {
public:
    explicit LandmarkError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

} // namespace lipsync

#endif
