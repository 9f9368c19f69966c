#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "mtrack/preprocess.hpp"
#include "mtrack/rng.hpp"
#include "mtrack/simulate.hpp"

namespace mtrack::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("mtrack_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// Dataset around a given angle matrix; D follows from Y, Z defaults to an
/// intercept-only design.
inline ProcessedDataset manual_dataset(std::size_t I, std::size_t J, Matrix Y, Matrix Z = {}) {
    ProcessedDataset ds;
    ds.I = I;
    ds.J = J;
    ds.N = Y.rows();
    ds.D = Matrix(Y.rows(), Y.cols());
    for (std::size_t n = 0; n < Y.rows(); ++n)
        for (std::size_t c = 0; c < Y.cols(); ++c) ds.D(n, c) = compute_d(Y(n, c));
    ds.Y = std::move(Y);
    ds.Z.Z = Z.empty() ? Matrix(J, 1, 1.0) : std::move(Z);
    for (std::size_t k = 0; k < ds.Z.Z.cols(); ++k) ds.Z.column_names.push_back("c" + std::to_string(k + 1));
    for (std::size_t i = 0; i < I; ++i) ds.subject_ids.push_back(static_cast<int>(i + 1));
    for (std::size_t j = 0; j < J; ++j) ds.trial_ids.push_back(static_cast<int>(j + 1));
    ds.validate();
    return ds;
}

/// Synthetic dataset from the generative model at a fixed gamma.
inline ProcessedDataset simulated_dataset(std::size_t I, std::size_t J, std::size_t N, std::vector<std::size_t> K,
                                          std::span<const double> gamma, std::uint64_t seed,
                                          const ModelConfig& cfg = {}) {
    DesignSpec spec;
    spec.I = I;
    spec.J = J;
    spec.N = N;
    spec.K = std::move(K);
    Rng rng = make_rng(seed, 0);
    const Design design = generate_design(spec, rng);
    Rng rep_rng = make_rng(seed, 1);
    return to_dataset(design, simulate_replicate(design, gamma, cfg, rep_rng));
}

/// Raw long-format records for a two-factor-free layout: `I` subjects with
/// `conditions` x `per_condition` trials of curved paths of varying length.
inline RawTrajectorySet synthetic_raw(int I, int conditions, int per_condition, std::uint64_t seed) {
    RawTrajectorySet raw;
    raw.factor_names = {"condition"};
    Rng rng = make_rng(seed, 0);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    std::uniform_int_distribution<int> length(40, 90);
    std::bernoulli_distribution right(0.5);
    for (int s = 1; s <= I; ++s) {
        int trial = 0;
        for (int c = 0; c < conditions; ++c)
            for (int r = 0; r < per_condition; ++r) {
                ++trial;
                const int T = length(rng);
                const double side = right(rng) ? 1.0 : -1.0;
                const double x0 = 300.0 + 5.0 * jitter(rng);
                const double y0 = 20.0 + 5.0 * jitter(rng);
                for (int t = 1; t <= T; ++t) {
                    const double u = static_cast<double>(t - 1) / (T - 1);
                    const double wobble = t == 1 || t == T ? 0.0 : jitter(rng);
                    const double x = x0 + side * 250.0 * (u * u) + 30.0 * std::sin(3.0 * u) * (1.0 - u) + wobble;
                    const double y = y0 + 400.0 * u + wobble;
                    raw.records.push_back({s, trial, {"c" + std::to_string(c + 1)}, t, x, y});
                }
            }
    }
    return raw;
}

}  // namespace mtrack::testing
