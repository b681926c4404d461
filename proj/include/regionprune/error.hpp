// Copyright (C) 2026 The regionprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace regionprune {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed textual input (region strings, JSON lines).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Tensor shapes that do not line up; the message names the offending tensor.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values (layer out of range, bad counts, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data that is readable but semantically unusable.
class DataError : public Error {
public:
    using Error::Error;
};

/// A requested key (sample id, metric name) is not present.
class LookupError : public Error {
public:
    using Error::Error;
};

}  // namespace regionprune
