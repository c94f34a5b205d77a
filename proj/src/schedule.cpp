#include "racing_sr/schedule.hpp"

namespace racing_sr {

Schedule::Schedule(std::vector<VarSet> rounds) {
    for (VarSet s : rounds) append(s);
}

void Schedule::append(VarSet next) {
    if (!rounds_.empty()) {
        const VarSet prev = rounds_.back();
        if (!next.is_subset_of(prev) || next.size() + 1 != prev.size()) {
            throw InvalidSchedule("schedule step " + prev.to_string() + " -> " + next.to_string() +
                                  " must free exactly one variable");
        }
    }
    rounds_.push_back(next);
}

std::string Schedule::to_string() const {
    std::string out = "[";
    for (std::size_t i = 0; i < rounds_.size(); ++i) {
        if (i) out += ',';
        out += rounds_[i].to_string();
    }
    return out + "]";
}

Schedule default_schedule(std::size_t n) {
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    return schedule_from_order(order, n);
}

Schedule schedule_from_order(const std::vector<std::uint32_t>& order, std::size_t n) {
    if (order.size() != n || n == 0) throw InvalidSchedule("order must list every variable once");
    VarSet seen;
    for (auto v : order) {
        if (v >= n || seen.contains(v)) throw InvalidSchedule("order must list every variable once");
        seen.insert(v);
    }
    VarSet controlled = VarSet::all(n);
    controlled.erase(order[0]);
    Schedule s(controlled);
    for (std::size_t i = 1; i < n; ++i) {
        controlled.erase(order[i]);
        s.append(controlled);
    }
    return s;
}

} // namespace racing_sr
