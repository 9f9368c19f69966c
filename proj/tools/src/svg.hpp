#pragma once

// Minimal static SVG charts for the evaluate command.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mtrack::cli::svg {

struct Series {
    std::vector<double> y;  // plotted against 1..n
    std::string colour = "#1f77b4";
    double opacity = 0.6;
};

struct Band {
    double lo = 0.0;
    double hi = 0.0;
    std::string colour;
    std::string label;
};

void histogram(const std::filesystem::path& path, std::span<const double> values, const std::string& title,
               std::size_t bins = 30);

void lines(const std::filesystem::path& path, std::span<const Series> series, const std::string& title,
           const std::string& xlabel, std::span<const Band> bands = {});

}  // namespace mtrack::cli::svg
