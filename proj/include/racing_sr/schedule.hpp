#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "racing_sr/types.hpp"

namespace racing_sr {

class InvalidSchedule : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ordered control-variable sets, one per round. Each appended set drops
/// exactly one variable from the previous one.
class Schedule {
public:
    Schedule() = default;
    explicit Schedule(VarSet first) : rounds_{first} {}
    /// Validates the subset chain; throws InvalidSchedule.
    explicit Schedule(std::vector<VarSet> rounds);

    void append(VarSet next);

    [[nodiscard]] const std::vector<VarSet>& rounds() const { return rounds_; }
    [[nodiscard]] std::size_t size() const { return rounds_.size(); }
    [[nodiscard]] bool empty() const { return rounds_.empty(); }
    [[nodiscard]] VarSet current() const { return rounds_.empty() ? VarSet{} : rounds_.back(); }
    /// Ends at the empty set.
    [[nodiscard]] bool complete() const { return !rounds_.empty() && rounds_.back().empty(); }

    /// "[{x1,x2},{x2},{}]"
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const Schedule&, const Schedule&) = default;

private:
    std::vector<VarSet> rounds_;
};

/// ({1..n-1}, {2..n-1}, ..., {}): frees x0 first, then x1, and so on.
[[nodiscard]] Schedule default_schedule(std::size_t n);

/// Schedule that frees variables in the given order, starting with all but
/// order[0] controlled.
[[nodiscard]] Schedule schedule_from_order(const std::vector<std::uint32_t>& order, std::size_t n);

} // namespace racing_sr
