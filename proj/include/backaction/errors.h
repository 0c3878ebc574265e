#pragma once

#include <stdexcept>

namespace backaction {

/// A trajectory cannot continue (all weight suppressed, impossible jump, ...).
class NumericalAbort : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// The final distribution does not fit the singlet/doublet picture.
class ClassificationError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Invalid or incomplete run configuration.
class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

}  // namespace backaction
