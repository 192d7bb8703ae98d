#pragma once

#include <stdexcept>
#include <string>

namespace pmdroute {

// Bad input: malformed documents, broken invariants, bad arguments.
// `subject()` carries the offending id when there is one.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what, std::string subject = {})
        : std::runtime_error(what), subject_(std::move(subject)) {}

    const std::string& subject() const noexcept { return subject_; }

private:
    std::string subject_;
};

// Well-formed request that has no answer: disconnected O-D pairs,
// simulations that hit their time cap, exhausted sampling budgets.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what, std::string hint = {})
        : std::runtime_error(what), hint_(std::move(hint)) {}

    const std::string& hint() const noexcept { return hint_; }

private:
    std::string hint_;
};

}  // namespace pmdroute
