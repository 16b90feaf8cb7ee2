// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace viewforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Array or image extents are incompatible.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. `where()` carries a line/column or a field path.
class ParseError : public Error {
public:
    ParseError(std::string where, const std::string &message)
        : Error(where.empty() ? message : where + ": " + message), where_(std::move(where)) {}

    const std::string &where() const noexcept { return where_; }

private:
    std::string where_;
};

} // namespace viewforge
