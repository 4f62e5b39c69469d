// Copyright Contributors to the mdpano Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mdpano {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-invertible or otherwise unusable camera parameters.
class CalibrationError : public Error {
public:
    using Error::Error;
};

/// A computation hit a singular configuration (e.g. a sweep plane through a camera centre).
class NumericDegeneracyError : public Error {
public:
    using Error::Error;
};

/// Azimuth requested for a point on the cylinder axis.
class UndefinedAzimuthError : public Error {
public:
    using Error::Error;
};

/// MDPs that do not share a panorama mapping and shell partition.
class IncompatibleMdpError : public Error {
public:
    using Error::Error;
};

/// Images or buffers whose dimensions disagree.
class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures (missing file, short write, ...).
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed structured-text document (rig, config, scene, pose).
class ParseError : public Error {
public:
    using Error::Error;
};

class FormatVersionError : public Error {
public:
    using Error::Error;
};

class TruncatedFileError : public Error {
public:
    using Error::Error;
};

class ChecksumError : public Error {
public:
    using Error::Error;
};

} // namespace mdpano
