#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mfpca::cli {

inline constexpr const char* tool_version = "0.1.0";

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Provenance written next to every output before the results themselves.
struct RunManifest {
    std::vector<std::string> command_line;
    std::string command;
    std::string config_hash; // sha256 of the canonical configuration text
    std::optional<std::uint64_t> seed;
    std::vector<std::pair<std::string, std::string>> inputs; // path, sha256
    std::vector<std::string> outputs;
    std::string timestamp; // UTC, ISO 8601

    void add_input(const std::filesystem::path& path);
    std::string to_json() const;
};

std::string utc_timestamp();

/// Writes via a temporary sibling and rename, so readers never see a partial file.
void write_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace mfpca::cli
