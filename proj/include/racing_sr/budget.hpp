#pragma once

#include <atomic>
#include <chrono>
#include <optional>
#include <stdexcept>

namespace racing_sr {

class TimedOut : public std::runtime_error {
public:
    TimedOut() : std::runtime_error("time limit reached") {}
};

class Interrupted : public std::runtime_error {
public:
    Interrupted() : std::runtime_error("interrupted") {}
};

/// Wall-clock deadline and external stop flag, polled between generations.
struct Budget {
    std::optional<std::chrono::steady_clock::time_point> deadline;
    const std::atomic<bool>* stop = nullptr;

    static Budget unlimited() { return {}; }
    static Budget seconds(double s, const std::atomic<bool>* stop = nullptr) {
        return {std::chrono::steady_clock::now() +
                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(s)),
                stop};
    }

    void check() const {
        if (stop && stop->load(std::memory_order_relaxed)) throw Interrupted();
        if (deadline && std::chrono::steady_clock::now() >= *deadline) throw TimedOut();
    }
};

} // namespace racing_sr
