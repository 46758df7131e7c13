#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace kpo::cli {

std::string sha256_file(const std::filesystem::path& path);

// Replay record for one invocation. Timing lives here and nowhere else so
// result files stay byte-identical across reruns.
struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    std::vector<std::uint64_t> seeds;
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
    std::vector<std::pair<std::string, double>> timing;   // stage, seconds
    int threads = 0;
    bool deterministic = false;

    void add_input(const std::filesystem::path& p);
    void add_output(const std::filesystem::path& p);
    std::string to_json() const;
};

} // namespace kpo::cli
