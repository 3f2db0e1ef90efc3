#include "nonxcrc/calibrate.hpp"

#include <stdexcept>

namespace nonxcrc {

namespace {

// First grid index satisfying (nw/(nw+1)) risk + B/(nw+1) <= alpha, by
// binary search. The per-example profiles are nonincreasing, so the
// condition flips from false to true at most once along the grid.
template <typename RiskAt>
LambdaHat first_feasible(const LambdaGrid& grid, const RiskSpec& spec, double nw,
                         RiskAt&& risk_at) {
    const double alpha = spec.alpha;
    const double b = spec.upper_bound_b;

    auto feasible = [&](std::size_t idx) {
        if (nw == 0.0) return b <= alpha;  // risk term carries no weight
        const double risk = risk_at(idx);
        return (nw / (nw + 1.0)) * risk + b / (nw + 1.0) <= alpha;
    };

    std::size_t lo = 0;
    std::size_t hi = grid.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (feasible(mid)) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if (lo == grid.size()) {
        return LambdaHat{grid.lambda_max(), grid.size() - 1, true};
    }
    return LambdaHat{grid[lo], lo, false};
}

}  // namespace

CalibrationBatch::CalibrationBatch(std::vector<LossProfile> profiles, LambdaGrid grid,
                                   RiskSpec spec)
    : profiles_(std::move(profiles)), grid_(std::move(grid)), spec_(spec) {
    for (const auto& p : profiles_) {
        if (p.size() != grid_.size()) {
            throw std::invalid_argument("CalibrationBatch: profile not aligned to grid");
        }
        if (!validate_profile(p, spec_)) {
            throw std::invalid_argument(
                "CalibrationBatch: profile not nonincreasing or out of bounds");
        }
    }
}

double weighted_risk(const CalibrationBatch& batch, const WeightVector& weights,
                     std::size_t lambda_index) {
    if (weights.size() != batch.size()) {
        throw std::invalid_argument("weighted_risk: weights/profiles length mismatch");
    }
    if (lambda_index >= batch.grid().size()) {
        throw std::invalid_argument("weighted_risk: lambda index out of range");
    }
    if (weights.weight_sum() == 0.0) {
        throw std::domain_error("weighted_risk: N_w is zero, risk undefined");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        sum += weights.raw()[i] * batch.profiles()[i][lambda_index];
    }
    return sum / weights.weight_sum();
}

LambdaHat crc_lambda_hat(const CalibrationBatch& batch) {
    const double n = static_cast<double>(batch.size());
    return first_feasible(batch.grid(), batch.risk_spec(), n, [&](std::size_t idx) {
        double sum = 0.0;
        for (const auto& p : batch.profiles()) sum += p[idx];
        return sum / n;
    });
}

LambdaHat nonx_lambda_hat(const CalibrationBatch& batch, const WeightVector& weights) {
    if (weights.size() != batch.size()) {
        throw std::invalid_argument("nonx_lambda_hat: weights/profiles length mismatch");
    }
    const double nw = weights.weight_sum();
    return first_feasible(batch.grid(), batch.risk_spec(), nw, [&](std::size_t idx) {
        double sum = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            sum += weights.raw()[i] * batch.profiles()[i][idx];
        }
        return sum / nw;
    });
}

double coverage_gap_bound(const WeightVector& weights, const TvEstimates& d,
                          const RiskSpec& spec) {
    if (weights.size() != d.size()) {
        throw std::invalid_argument("coverage_gap_bound: weights/estimates length mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        sum += weights.normalized()[i] * d.values()[i];
    }
    return spec.range() * sum;
}

}  // namespace nonxcrc
