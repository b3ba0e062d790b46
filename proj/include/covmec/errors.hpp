// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace covmec {

/// Invalid user input: bad parameter values, shape mismatches, malformed files.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Geometry that makes a channel expression singular (coincident nodes).
class SingularityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A problem instance has no feasible point. `family` names the constraint
/// family that could not be satisfied and `slot` the time slot (-1 if none).
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(std::string family, int slot, const std::string& what)
        : std::runtime_error(what), family_(std::move(family)), slot_(slot) {}
    const std::string& family() const noexcept { return family_; }
    int slot() const noexcept { return slot_; }

private:
    std::string family_;
    int slot_;
};

/// The conic backend failed (numerical trouble, iteration limit, ...).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A solver contract was broken (e.g. SCA objective increased). Indicates a bug.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace covmec
