#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hc/kmeans.hpp"

namespace hc {

enum class CovarianceType { Full, Diagonal };

struct VdgmmConfig {
    uint32_t Kmax = 150;
    double weight_concentration = 0.0;  // Dirichlet alpha0; <= 0 means 1/Kmax
    double mean_precision = 1.0;        // beta0
    double tol = 1e-6;                  // stop when ELBO improvement drops below
    uint32_t max_iters = 200;
    uint64_t seed = 1;
    // Full covariance below this dimension, diagonal at or above (Normal-Wishart
    // updates get heavy in high d). Negative forces the type.
    int force_covariance = -1;  // 0 = full, 1 = diagonal, -1 = auto
    size_t diagonal_threshold = 32;
};

struct VdgmmResult {
    uint32_t Kmax = 0;
    size_t d = 0;
    CovarianceType covariance = CovarianceType::Full;
    std::vector<double> weights;           // E[pi_k], length Kmax
    std::vector<double> means;             // Kmax x d
    std::vector<double> covariances;       // Kmax x d x d (full) or Kmax x d (diagonal)
    std::vector<double> responsibilities;  // n x Kmax, rows sum to 1
    uint32_t effective_K = 0;              // components above the mass prune threshold
    std::vector<double> elbo_trace;        // non-decreasing
    uint32_t iterations = 0;
    bool singular_warning = false;  // covariance floor was applied at least once

    // Hard labels: argmax responsibility per point.
    std::vector<uint32_t> labels() const;
};

// Coordinate-ascent variational inference for a finite Bayesian GMM with a
// symmetric Dirichlet weight prior and Normal-Wishart (or per-dimension
// Normal-Gamma) component priors. Deterministic given the seed.
VdgmmResult vdgmm(const Points& points, const VdgmmConfig& cfg);

}  // namespace hc
