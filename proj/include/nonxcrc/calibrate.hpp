#pragma once

#include <cstddef>
#include <vector>

#include "nonxcrc/core.hpp"
#include "nonxcrc/weights.hpp"

namespace nonxcrc {

/// Calibration-set loss profiles aligned to one grid under one risk spec.
/// Every profile is checked against validate_profile at construction.
class CalibrationBatch {
  public:
    CalibrationBatch(std::vector<LossProfile> profiles, LambdaGrid grid, RiskSpec spec);

    const std::vector<LossProfile>& profiles() const { return profiles_; }
    const LambdaGrid& grid() const { return grid_; }
    const RiskSpec& risk_spec() const { return spec_; }
    std::size_t size() const { return profiles_.size(); }

  private:
    std::vector<LossProfile> profiles_;
    LambdaGrid grid_;
    RiskSpec spec_;
};

/// Selected set-size parameter. When no grid value satisfies the
/// calibration condition the infimum is over an empty set; we return
/// lambda_max and flag the result infeasible so harnesses can proceed.
struct LambdaHat {
    double value;
    std::size_t index;  // position in the grid (last index when infeasible)
    bool infeasible;
};

/// Weighted empirical risk (1/N_w) sum_i w_i L_i(lambda) at one grid index.
/// N_w must be positive; a zero weight sum leaves the risk undefined.
double weighted_risk(const CalibrationBatch& batch, const WeightVector& weights,
                     std::size_t lambda_index);

/// Standard CRC: smallest grid lambda with
///   (n/(n+1)) R_n(lambda) + B/(n+1) <= alpha,  R_n unweighted mean.
LambdaHat crc_lambda_hat(const CalibrationBatch& batch);

/// Non-exchangeable CRC: smallest grid lambda with
///   (N_w/(N_w+1)) R_n(lambda) + B/(N_w+1) <= alpha,
/// R_n the weighted empirical risk. With all-ones weights this equals
/// crc_lambda_hat bit-exactly.
LambdaHat nonx_lambda_hat(const CalibrationBatch& batch, const WeightVector& weights);

/// The slack added to alpha by non-exchangeability:
/// (B-A) sum_i w~_i d_i. Zero when all d_i are zero.
double coverage_gap_bound(const WeightVector& weights, const TvEstimates& d,
                          const RiskSpec& spec);

}  // namespace nonxcrc
