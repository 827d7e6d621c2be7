#pragma once

#include <stdexcept>
#include <string>

namespace trbell {

// Argument or state that violates a documented invariant.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A CHSH estimate was requested but some setting pair has no events.
class InsufficientData : public std::runtime_error {
public:
    InsufficientData(int setting_a, int setting_b)
        : std::runtime_error("insufficient data: no accepted events for setting pair (A" +
                             std::to_string(setting_a) + ", B" + std::to_string(setting_b) + ")"),
          setting_a_(setting_a),
          setting_b_(setting_b) {}

    int setting_a() const noexcept { return setting_a_; }
    int setting_b() const noexcept { return setting_b_; }

private:
    int setting_a_;
    int setting_b_;
};

// The requested adversary target cannot be reached by any local strategy at this efficiency.
class Infeasible : public std::runtime_error {
public:
    Infeasible(const std::string& what, double bound) : std::runtime_error(what), bound_(bound) {}
    double bound() const noexcept { return bound_; }

private:
    double bound_;
};

}  // namespace trbell
