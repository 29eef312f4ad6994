#pragma once

#include <stdexcept>
#include <string>

namespace latdisc {

/// Input violates an operation's precondition (bad body string, t < 0, ...).
class PreconditionError : public std::invalid_argument {
  public:
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Enumeration would exceed the configured event or bounding-box budget.
class BudgetError : public std::runtime_error {
  public:
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical procedure (quadrature, root finding, fit) failed to converge.
class ConvergenceError : public std::runtime_error {
  public:
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace latdisc
