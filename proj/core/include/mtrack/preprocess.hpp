#pragma once

// Raw trajectory ingestion, time normalization, atan2 projection and design
// matrices built from model formulas.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtrack/matrix.hpp"
#include "mtrack/rng.hpp"

namespace mtrack {

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

struct RawRecord {
    int sbj = 0;
    int trial = 0;
    std::vector<std::string> levels;  // one label per factor column
    int timestep = 0;
    double x = 0.0;
    double y = 0.0;
};

/// Long-format records: header `sbj,trial,<factor...>,timestep,x,y`.
struct RawTrajectorySet {
    std::vector<std::string> factor_names;
    std::vector<RawRecord> records;
};

[[nodiscard]] RawTrajectorySet read_raw_csv(std::istream& in);
[[nodiscard]] RawTrajectorySet read_raw_csv(const std::filesystem::path& path);
void write_raw_csv(std::ostream& out, const RawTrajectorySet& set);

/// Linear interpolation over a normalized time index; endpoints are kept exactly.
[[nodiscard]] std::vector<Point> resample_trajectory(std::span<const Point> points, std::size_t n);

/// Translates the start to (0,0) and scales the end to (-1,1), mirroring x
/// when the trajectory ends on the right. `label` is used in error messages.
[[nodiscard]] std::vector<Point> normalize_trajectory(std::span<const Point> points,
                                                      std::string_view label = {});

/// Polar angle of every point on (0, pi]. The start sample gets pi/2, and
/// non-positive angles are clamped to kAngleFloor.
[[nodiscard]] std::vector<double> project_atan2(std::span<const Point> points);

// ---- Design matrices ------------------------------------------------------

struct FactorLevels {
    std::string name;
    std::size_t level_count = 0;
};

/// One model term: the factors (indices into ColumnPlan::factors) it multiplies.
struct Term {
    std::vector<std::size_t> factors;
    friend bool operator==(const Term&, const Term&) = default;
};

struct ColumnPlan {
    std::string formula;
    std::vector<FactorLevels> factors;
    std::vector<Term> terms;  // main effects first, then interactions by degree

    /// Intercept plus the product of (levels - 1) over the factors of each term.
    [[nodiscard]] std::size_t column_count() const;
};

/// Grammar: `~ name (op name)*`, op in {+, *, :}. `:` binds tighter than
/// `*`, which binds tighter than `+`; `a*b` expands to `a + b + a:b`.
[[nodiscard]] ColumnPlan parse_formula(std::string_view formula,
                                       std::span<const FactorLevels> factors);

struct Factor {
    std::string name;
    std::vector<std::string> levels;  // the first level is the reference
};

struct DesignMatrix {
    Matrix Z;  // J x K, first column all ones
    std::vector<std::string> column_names;
    std::string formula;
};

/// Treatment-coded design. `assignment[j][f]` is the level index of factor f in trial j.
[[nodiscard]] DesignMatrix build_design(const ColumnPlan& plan, std::span<const Factor> factors,
                                        const std::vector<std::vector<std::size_t>>& assignment);

enum class AssignMethod { symmetric, random };

[[nodiscard]] AssignMethod parse_assign_method(std::string_view name);

struct GeneratedZ {
    std::vector<Factor> factors;                       // named Z1, Z2, ...
    std::vector<std::vector<std::size_t>> assignment;  // J x F level indices
    DesignMatrix design;
};

/// Assigns trials to factor levels. Symmetric uses contiguous blocks of J/K
/// trials; random permutes levels with equal counts, balanced inside the cells
/// of the preceding factors when the cell sizes allow it.
[[nodiscard]] GeneratedZ generate_Z(std::size_t J, std::span<const std::size_t> level_counts,
                                    std::span<const AssignMethod> methods,
                                    std::string_view formula, Rng& rng);

// ---- Processed dataset ----------------------------------------------------

struct ProcessedDataset {
    std::size_t I = 0;  // subjects
    std::size_t J = 0;  // trials per subject
    std::size_t N = 0;  // time steps
    Matrix Y;           // N x (J*I) angles; column i*J + j is subject i, trial j
    Matrix D;           // N x (J*I) distances
    DesignMatrix Z;
    std::vector<Factor> factors;
    std::vector<std::vector<std::size_t>> trial_levels;  // J x F
    std::vector<int> subject_ids;
    std::vector<int> trial_ids;

    [[nodiscard]] std::size_t K() const noexcept { return Z.Z.cols(); }
    [[nodiscard]] std::size_t columns() const noexcept { return I * J; }
    [[nodiscard]] std::size_t column(std::size_t subject, std::size_t trial) const noexcept {
        return subject * J + trial;
    }
    /// Shape checks between Y, D, Z and the stated dimensions.
    void validate() const;
};

struct PreparedData {
    ProcessedDataset dataset;
    RawTrajectorySet normalized;  // resampled + normalized x-y, same schema as the input
};

/// resample -> normalize -> project -> compute_D, plus the design matrix from `formula`.
[[nodiscard]] PreparedData prepare_data(const RawTrajectorySet& raw, std::size_t n,
                                        std::string_view formula);

/// Writes Y.csv, D.csv, Z.csv and meta.json into `dir` (created if missing).
void write_dataset(const std::filesystem::path& dir, const ProcessedDataset& ds);
[[nodiscard]] ProcessedDataset read_dataset(const std::filesystem::path& dir);

/// Column header labels `s<sbj>_t<trial>` in stacking order.
[[nodiscard]] std::vector<std::string> column_labels(const ProcessedDataset& ds);

}  // namespace mtrack
