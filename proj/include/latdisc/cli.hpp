#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "latdisc/io.hpp"

namespace latdisc {

inline constexpr const char* kToolVersion = "0.1.0";

const std::vector<std::string>& command_names();

/// Angles: numbers (radians), `golden`, `atan:p/q`, `atan:x`; comma or space separated.
std::vector<double> parse_angles(const std::string& text);

struct RunContext {
    std::filesystem::path out_dir = "latdisc_out";
    unsigned threads = 1;
    std::ostream* out = nullptr;
};

/// Runs one command. Exit status 0 on success, 1 on precondition violation, 2 on budget or
/// convergence failure; diagnostics go to `err`. All inputs are validated before any file is written.
int run_command(const std::string& command, const Config& config, const RunContext& ctx, std::ostream& err);

}  // namespace latdisc
