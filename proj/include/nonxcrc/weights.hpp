#pragma once

#include <cstddef>
#include <vector>

#include "nonxcrc/core.hpp"

namespace nonxcrc {

/// User-supplied estimates (or upper bounds) of d_TV(Z, Z^i), one per
/// calibration example, each in [0,1]. The true distances are unknowable;
/// only bounds enter the weight design.
class TvEstimates {
  public:
    explicit TvEstimates(std::vector<double> d);

    const std::vector<double>& values() const { return d_; }
    std::size_t size() const { return d_.size(); }

  private:
    std::vector<double> d_;
};

/// All-ones weights; downstream non-exchangeable CRC then coincides with
/// standard CRC exactly.
WeightVector uniform_weights(std::size_t n);

/// Exponential decay w_i = rho^{n+1-i}: the most recent calibration point
/// carries the largest weight. Requires rho in (0, 1].
WeightVector decay_weights(std::size_t n, double rho);

/// Closed-form entropy-regularized weights: raw w_i = exp(-beta (B-A) d_i),
/// so the test point (d = 0) has raw weight 1 and the standard
/// normalization reproduces the softmax over -beta (B-A) d.
WeightVector maxent_weights(const TvEstimates& d, double beta, const RiskSpec& spec);

/// Data-dependent weights from embedding dot products, min-max normalized
/// into [0,1]. If every dot product is equal the weights fall back to all
/// ones.
WeightVector similarity_weights(const std::vector<std::vector<double>>& calib_embeddings,
                                const std::vector<double>& test_embedding);

}  // namespace nonxcrc
