#pragma once

#include <string>
#include <vector>

namespace camokit {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 bad flags / validation failure, 2 I/O or format error.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

// Worker count from CAMOKIT_THREADS, else the hardware concurrency.
unsigned thread_count();

}  // namespace camokit
