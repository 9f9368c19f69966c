#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace mtrack::cli {

struct PrepareOptions {
    std::filesystem::path input;
    std::size_t n_steps = 101;
    std::string formula;
    std::filesystem::path out;
};

struct ModelOptions {
    std::string gfunction = "logistic";
    double sigma_x = 1.0;
    double lambda = 1.0;
    double kappa_lb = 5.0;
    double kappa_ub = 300.0;
};

struct FitOptions {
    std::filesystem::path dataset;
    std::optional<std::size_t> replicate;  // 1-based, for simulate output directories
    std::optional<std::filesystem::path> priors;
    ModelOptions model;
    std::size_t niter = 5000;
    std::size_t nwarmup = 2000;
    std::size_t nchains = 2;
    std::uint64_t seed = 1;
    std::string variant = "textbook";
    std::size_t threads = 0;
    std::size_t max_state_draws = 500;
    std::filesystem::path out;
};

struct SimulateOptions {
    std::filesystem::path spec;
    std::optional<std::filesystem::path> priors;
    std::size_t M = 1;
    std::uint64_t seed = 1;
    std::filesystem::path out;
};

struct EvaluateOptions {
    std::filesystem::path fit;
    std::filesystem::path dataset;
    std::optional<std::size_t> replicate;
    std::size_t M = 500;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    bool plots = false;
    std::filesystem::path out;
};

struct EvidenceOptions {
    std::filesystem::path fit;
    std::string windows = "10:35,45:65,70:85";
    std::filesystem::path out;
};

// Each returns the process exit code; validation problems surface as exceptions.
int cmd_prepare(const PrepareOptions& o);
int cmd_fit(const FitOptions& o);
int cmd_simulate(const SimulateOptions& o);
int cmd_evaluate(const EvaluateOptions& o);
int cmd_evidence(const EvidenceOptions& o);

}  // namespace mtrack::cli
