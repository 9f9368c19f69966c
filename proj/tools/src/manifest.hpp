#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace mtrack::cli {

/// Hex SHA-256 of a file's bytes.
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

/// Hashes of the input (a file, or every regular file below a directory in
/// sorted order), keyed by path relative to the input.
[[nodiscard]] nlohmann::json hash_inputs(const std::filesystem::path& input);

/// Provenance record written as manifest.json into every output directory:
/// command, tool version, flags, seed and input content hashes.
class Manifest {
public:
    explicit Manifest(std::string command);

    void flag(const std::string& name, nlohmann::json value);
    void input(const std::string& role, const std::filesystem::path& path);
    void note(const std::string& key, nlohmann::json value);
    /// Lists the files already present in `dir` as outputs, then writes.
    void write(const std::filesystem::path& dir) const;

private:
    nlohmann::json doc_;
};

[[nodiscard]] const char* tool_version() noexcept;

}  // namespace mtrack::cli
