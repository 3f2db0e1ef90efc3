#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nonxcrc/core.hpp"

namespace nonxcrc {

/// How a score vector is turned into a nested family of index sets.
///   one_minus_lambda: { m : f_m >= 1 - lambda }
///   neg_lambda:       { m : f_m >= -lambda }   (scores may be negative)
///   top_k:            the lambda highest-scoring indices, lambda integer
enum class SetMode { one_minus_lambda, neg_lambda, top_k };

/// Indices (0-based, ascending) of the prediction set at the given lambda.
/// For top_k, ties are broken by lower index first and lambda must be a
/// nonnegative integer no larger than the number of scores.
std::vector<std::size_t> threshold_set(const std::vector<double>& scores, double lambda,
                                       SetMode mode);

/// Nested family of index sets over a fixed score vector.
struct ThresholdSetFamily {
    std::vector<double> scores;
    SetMode mode;

    std::vector<std::size_t> set_at(double lambda) const {
        return threshold_set(scores, lambda, mode);
    }
};

/// Interval family [center - lambda, center + lambda].
struct IntervalFamily {
    double center;

    double lo(double lambda) const { return center - lambda; }
    double hi(double lambda) const { return center + lambda; }
    bool contains(double y, double lambda) const {
        return y >= lo(lambda) && y <= hi(lambda);
    }
};

/// False negative rate: fraction of gold indices missing from the
/// prediction set. Gold must be nonempty.
double fnr_loss(const std::vector<std::size_t>& gold, const std::vector<std::size_t>& predicted);

/// Absolute residual beyond a tolerance band of half-width lambda:
/// max(0, |prediction - target| - lambda).
double insensitive_abs_loss(double prediction, double target, double lambda);

using TokenSeq = std::vector<std::string>;

/// Lowercase, strip punctuation, collapse whitespace, split on whitespace.
TokenSeq normalize_tokens(std::string_view text);

/// Harmonic mean of token precision and recall using multiset overlap.
/// Both sequences empty -> 1.0; exactly one empty -> 0.0.
double token_f1(const TokenSeq& prediction, const TokenSeq& gold);
double token_f1(std::string_view prediction, std::string_view gold);

/// 1 - max token F1 over all (candidate, gold) pairs. An empty candidate
/// set yields the full loss 1.0; golds must be nonempty.
double best_f1_loss(const std::vector<std::string>& candidates,
                    const std::vector<std::string>& golds);

/// 1 if the gold index is absent from the prediction set, else 0.
double miscoverage_loss(std::size_t gold, const std::vector<std::size_t>& predicted);

/// Finite-support probability distribution; entries are nonnegative and
/// sum to one within 1e-12.
class DiscreteDistribution {
  public:
    explicit DiscreteDistribution(std::vector<double> probabilities);

    const std::vector<double>& probabilities() const { return probs_; }
    std::size_t size() const { return probs_.size(); }

  private:
    std::vector<double> probs_;
};

/// Total variation distance between two finite distributions with equal
/// support size: half the L1 distance.
double tv_distance(const DiscreteDistribution& p, const DiscreteDistribution& q);

// ---------------------------------------------------------------------------
// Profile builders: one example's loss evaluated across a whole grid.
// These are the hot path of the rolling harness; they agree with composing
// threshold_set / IntervalFamily with the loss functions above.
// ---------------------------------------------------------------------------

/// FNR of the threshold family at every grid value.
LossProfile fnr_profile(const std::vector<double>& scores, const std::vector<std::size_t>& gold,
                        const LambdaGrid& grid, SetMode mode);

/// Best-F1 loss at every grid value for a candidate list given each
/// candidate's score and its best token F1 against the gold answers.
/// Uses the neg_lambda family: candidate c is in the set once
/// lambda >= -score_c.
LossProfile best_f1_profile(const std::vector<double>& candidate_scores,
                            const std::vector<double>& candidate_best_f1,
                            const LambdaGrid& grid);

/// lambda-insensitive absolute loss at every grid value.
LossProfile insensitive_profile(double prediction, double target, const LambdaGrid& grid);

}  // namespace nonxcrc
