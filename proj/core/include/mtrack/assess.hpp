#pragma once

// Posterior-predictive assessment (PA indices, DTW) and the windowed
// evidence analysis on filtered states.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "mtrack/inference.hpp"
#include "mtrack/matrix.hpp"
#include "mtrack/preprocess.hpp"

namespace mtrack {

/// 1 - ||Y_sim - Y||^2 / ||Y||^2 (Frobenius). Throws when ||Y|| = 0.
[[nodiscard]] double pa_overall(const Matrix& y_sim, const Matrix& y);

/// pa_overall restricted to the J columns of `subject`.
[[nodiscard]] double pa_subject(const Matrix& y_sim, const Matrix& y, std::size_t subject, std::size_t J);

/// DTW with |a_i - b_j| local cost and the symmetric2 step pattern (diagonal
/// steps weigh 2), normalized by len(a) + len(b).
[[nodiscard]] double dtw_distance(std::span<const double> a, std::span<const double> b);

struct Evaluation {
    std::vector<double> pa_overall;  // M
    Matrix pa_subject;               // M x I
    Matrix dtw;                      // M x JI
    double mean_pa_overall = 0.0;
    std::vector<double> mean_pa_subject_by_subject;  // I
    double mean_pa_subject = 0.0;
    double mean_dtw = 0.0;
};

/// For each of M replicates: pick a stored posterior draw uniformly, rebuild
/// the locations from its filtered states and Z gamma, draw Y* from the von
/// Mises measurement and score it against the observed Y.
[[nodiscard]] Evaluation evaluate_ssm(const PosteriorDraws& fit, const ProcessedDataset& data,
                                      const ModelConfig& cfg, std::size_t M, std::uint64_t seed,
                                      std::size_t threads = 1);

/// evaluation.json plus PA_ov.csv, PA_sbj.csv and DTW.csv with the distributions.
void write_evaluation(const std::filesystem::path& dir, const Evaluation& ev, const ProcessedDataset& data);

struct Window {
    double lo = 0.0;  // percent of the normalized time axis
    double hi = 0.0;
};

/// "10:35,45:65,70:85" style list.
[[nodiscard]] std::vector<Window> parse_windows(std::string_view text);
[[nodiscard]] std::vector<Window> default_windows();

struct EvidenceRow {
    std::size_t window = 0;   // 0-based
    std::size_t subject = 0;  // 0-based
    std::size_t level = 0;    // 0-based gamma index
    double p = 0.0;
    double r = 0.0;           // log(p / (1 - p)), within [-709, 709]
};

/// Time steps n (0-based) whose position 100 n / (N - 1) lies inside the window.
[[nodiscard]] std::vector<std::size_t> window_steps(const Window& w, std::size_t N);

/// P = [1 + exp(x_hat 1' - 1 gamma_hat')]^-1 over each window, p = column means,
/// r = log-odds. `x_hat` is I x N. Logistic link only.
[[nodiscard]] std::vector<EvidenceRow> evidence_analysis(const Matrix& x_hat, std::span<const Window> windows,
                                                         std::span<const double> gamma_hat, Link link);

/// evidence.csv: window, lo, hi, sbj, level, p, r.
void write_evidence(const std::filesystem::path& path, std::span<const EvidenceRow> rows,
                    std::span<const Window> windows, std::span<const int> subject_ids);

}  // namespace mtrack
