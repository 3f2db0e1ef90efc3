#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "nonxcrc/matrix.hpp"

namespace nonxcrc {

/// Linear predictor f(x) = coefficients . x + intercept.
struct LinearModel {
    std::vector<double> coefficients;
    double intercept = 0.0;

    double predict(const std::vector<double>& x) const;
    double predict(const double* x, std::size_t dim) const;
};

/// One independent logistic model per label; scores go through the
/// logistic link, so probabilities stay strictly inside (0,1).
struct MultiLabelLogistic {
    std::vector<LinearModel> per_label;

    std::size_t n_labels() const { return per_label.size(); }
    /// Estimated probability of each label for one input row.
    std::vector<double> predict_proba(const double* x, std::size_t dim) const;
    std::vector<double> predict_proba(const std::vector<double>& x) const;
};

struct LogisticFitConfig {
    double l2 = 1e-4;
    double grad_tol = 1e-6;
    std::size_t max_iter = 500;
    /// Optional starting point (e.g. the previous timestep's fit in a
    /// rolling harness); must have matching label count and dimension.
    const MultiLabelLogistic* warm_start = nullptr;
};

/// Fit M independent regularized logistic regressions on labels in {-1,+1}
/// (one column per label). Needs at least two examples.
MultiLabelLogistic fit_logistic(const Matrix& features, const Matrix& labels,
                                const LogisticFitConfig& config = {});

/// (Weighted) least squares via normal equations, intercept included.
/// Minimizes sum_i t_i (y_i - f(x_i))^2 with t_i = 1 when weights are
/// absent; a ridge term of 1e-8 engages on singularity.
LinearModel fit_least_squares(const Matrix& features, const std::vector<double>& targets,
                              const std::vector<double>* sample_weights = nullptr);

}  // namespace nonxcrc
