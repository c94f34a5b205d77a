#pragma once

#include <atomic>
#include <ostream>

namespace racing_sr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitJobFailed = 3;
inline constexpr int kExitInterrupted = 130;

/// Entry point behind the racing_sr binary: subcommands run, gen, eval and
/// report. `stop` is polled by running jobs; when it is raised, rows finished
/// so far are still written.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* stop = nullptr);

} // namespace racing_sr
