#include "nonxcrc/weights.hpp"

#include <cmath>
#include <stdexcept>

namespace nonxcrc {

TvEstimates::TvEstimates(std::vector<double> d) : d_(std::move(d)) {
    for (double v : d_) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("TvEstimates: entries must lie in [0,1]");
        }
    }
}

WeightVector uniform_weights(std::size_t n) {
    return WeightVector(std::vector<double>(n, 1.0));
}

WeightVector decay_weights(std::size_t n, double rho) {
    if (!(rho > 0.0 && rho <= 1.0)) {
        throw std::invalid_argument("decay_weights: rho must lie in (0,1]");
    }
    std::vector<double> raw(n);
    // raw[i] = rho^{n-i} for 0-based i, i.e. rho^{n+1-i} in 1-based terms.
    double power = rho;
    for (std::size_t i = n; i-- > 0;) {
        raw[i] = power;
        power *= rho;
    }
    return WeightVector(std::move(raw));
}

WeightVector maxent_weights(const TvEstimates& d, double beta, const RiskSpec& spec) {
    if (!(beta >= 0.0)) {
        throw std::invalid_argument("maxent_weights: beta must be nonnegative");
    }
    const double scale = beta * spec.range();
    std::vector<double> raw(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        raw[i] = std::exp(-scale * d.values()[i]);
    }
    return WeightVector(std::move(raw));
}

WeightVector similarity_weights(const std::vector<std::vector<double>>& calib_embeddings,
                                const std::vector<double>& test_embedding) {
    if (calib_embeddings.empty()) {
        throw std::invalid_argument("similarity_weights: need at least one calibration embedding");
    }
    std::vector<double> dots(calib_embeddings.size());
    for (std::size_t i = 0; i < calib_embeddings.size(); ++i) {
        const auto& e = calib_embeddings[i];
        if (e.size() != test_embedding.size()) {
            throw std::invalid_argument("similarity_weights: embedding dimension mismatch");
        }
        double dot = 0.0;
        for (std::size_t k = 0; k < e.size(); ++k) dot += e[k] * test_embedding[k];
        dots[i] = dot;
    }
    double lo = dots[0];
    double hi = dots[0];
    for (double v : dots) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo <= 0.0) {
        return uniform_weights(dots.size());
    }
    std::vector<double> raw(dots.size());
    for (std::size_t i = 0; i < dots.size(); ++i) raw[i] = (dots[i] - lo) / (hi - lo);
    return WeightVector(std::move(raw));
}

}  // namespace nonxcrc
