#include <atomic>
#include <csignal>
#include <iostream>

#include "racing_sr/cli.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_interrupt(int) {
    g_stop.store(true);
    // A second ctrl-C kills the process outright.
    std::signal(SIGINT, SIG_DFL);
}

} // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_interrupt);
    return racing_sr::run_cli(argc, argv, std::cout, std::cerr, &g_stop);
}
