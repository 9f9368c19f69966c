#pragma once

// Experimental designs and synthetic datasets drawn from the generative model.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mtrack/matrix.hpp"
#include "mtrack/model.hpp"
#include "mtrack/preprocess.hpp"
#include "mtrack/priors.hpp"

namespace mtrack {

struct DesignSpec {
    std::size_t I = 2;
    std::size_t J = 6;
    std::size_t N = 61;
    std::vector<std::size_t> K{2};       // levels per factor
    std::string formula;                 // defaults to ~Z1*Z2*...
    std::vector<AssignMethod> methods;   // defaults to symmetric for every factor

    /// Fills the defaults and checks divisibility for symmetric factors.
    void validate();
};

struct DesignRow {
    int sbj = 0;
    int trial = 0;
    std::vector<std::size_t> levels;  // 1-based level per factor
};

struct Design {
    DesignSpec spec;
    std::vector<DesignRow> table;  // I*J rows, subject-major
    GeneratedZ z;
};

[[nodiscard]] Design generate_design(DesignSpec spec, Rng& rng);

struct Replicate {
    std::vector<double> gamma;
    std::vector<double> beta;  // J
    Matrix X;                  // N x I latent states
    Matrix MU;                 // N x JI
    Matrix D;                  // N x JI, computed from MU
    Matrix Y;                  // N x JI
    std::size_t clamped = 0;   // von Mises draws moved onto [1e-4, pi]
};

/// One dataset for a fixed gamma. X starts at 1e-4 and follows a Gaussian
/// random walk; D is derived from the location MU.
[[nodiscard]] Replicate simulate_replicate(const Design& design, std::span<const double> gamma,
                                           const ModelConfig& cfg, Rng& rng);

struct SimulatedData {
    Design design;
    std::vector<Replicate> replicates;

    /// Replicate m packaged for fitting (D taken from the generative location).
    [[nodiscard]] ProcessedDataset dataset(std::size_t m) const;
};

/// gamma is drawn from the priors for every replicate, redrawn until the
/// Gompertz support holds. The design uses stream 0 of `seed`, replicate m
/// stream m + 1.
[[nodiscard]] SimulatedData generate_data(DesignSpec spec, std::span<const PriorSpec> priors,
                                          const ModelConfig& cfg, std::size_t M, std::uint64_t seed);

/// Packages a replicate into a dataset over `design`.
[[nodiscard]] ProcessedDataset to_dataset(const Design& design, const Replicate& rep);

/// params.csv, design.csv, Z.csv, meta.json and Y_<m>, X_<m>, D_<m>, MU_<m>
/// CSVs with m counted from 1.
void write_simulation(const std::filesystem::path& dir, const SimulatedData& sim);

/// Replicate m (1-based) of a simulation directory, ready for fitting.
[[nodiscard]] ProcessedDataset read_simulated_dataset(const std::filesystem::path& dir, std::size_t m);

/// N x JI location matrix G(x_i, beta_j) for latent states `x` given as I x N.
[[nodiscard]] Matrix link_angles(const Matrix& x, std::span<const double> beta, Link link);

}  // namespace mtrack
