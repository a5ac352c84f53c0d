#pragma once

#include <stdexcept>
#include <string>

namespace regmine {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An external engine or service could not be reached or failed to run.
/// Distinct from a legitimate "no result" answer, which is reported as an
/// empty optional.
class BackendUnavailable : public Error {
public:
    using Error::Error;
};

/// The OCR engine ran but failed on one particular image. The pipeline
/// downgrades the affected block instead of aborting.
class OcrFailure : public Error {
public:
    using Error::Error;
};

/// Malformed input file (PGM header, profile key, gazetteer row, ...).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A box does not lie inside the image it refers to.
class BoxOutOfBounds : public Error {
public:
    using Error::Error;
};

} // namespace regmine
