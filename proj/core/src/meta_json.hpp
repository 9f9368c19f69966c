#pragma once

// JSON helpers shared by the dataset, fit and simulation writers.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "mtrack/preprocess.hpp"

namespace mtrack::detail {

[[nodiscard]] nlohmann::json dataset_meta(const ProcessedDataset& ds);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
[[nodiscard]] nlohmann::json read_json(const std::filesystem::path& path);
[[nodiscard]] ProcessedDataset read_dataset_files(const std::filesystem::path& dir, const std::string& y_file,
                                                  const std::string& d_file);

}  // namespace mtrack::detail
