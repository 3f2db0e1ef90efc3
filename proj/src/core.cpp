#include "nonxcrc/core.hpp"

#include <cmath>

namespace nonxcrc {

RiskSpec::RiskSpec(double alpha_, double lower_a, double upper_b)
    : alpha(alpha_), lower_bound_a(lower_a), upper_bound_b(upper_b) {
    if (!std::isfinite(lower_bound_a) || !std::isfinite(upper_bound_b)) {
        throw std::invalid_argument("RiskSpec: loss bounds must be finite");
    }
    if (!(lower_bound_a < upper_bound_b)) {
        throw std::invalid_argument("RiskSpec: require A < B");
    }
    if (!(lower_bound_a <= alpha && alpha <= upper_bound_b)) {
        throw std::invalid_argument("RiskSpec: require A <= alpha <= B");
    }
}

LambdaGrid::LambdaGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw std::invalid_argument("LambdaGrid: empty grid");
    }
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
        if (!(values_[i] < values_[i + 1])) {
            throw std::invalid_argument("LambdaGrid: values must be strictly increasing");
        }
    }
}

LambdaGrid LambdaGrid::uniform(double lo, double hi, std::size_t count) {
    if (count == 0) throw std::invalid_argument("LambdaGrid::uniform: count == 0");
    std::vector<double> v(count);
    if (count == 1) {
        v[0] = lo;
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        }
    }
    return LambdaGrid(std::move(v));
}

LambdaGrid LambdaGrid::integers(std::size_t max_k) {
    std::vector<double> v(max_k + 1);
    for (std::size_t i = 0; i <= max_k; ++i) v[i] = static_cast<double>(i);
    return LambdaGrid(std::move(v));
}

WeightVector::WeightVector(std::vector<double> raw) : raw_(std::move(raw)) {
    double sum = 0.0;
    for (double w : raw_) {
        if (!(w >= 0.0 && w <= 1.0)) {
            throw std::invalid_argument("WeightVector: weights must lie in [0,1]");
        }
        sum += w;
    }
    weight_sum_ = sum;
    normalized_.resize(raw_.size() + 1);
    const double denom = weight_sum_ + 1.0;
    for (std::size_t i = 0; i < raw_.size(); ++i) normalized_[i] = raw_[i] / denom;
    normalized_.back() = 1.0 / denom;
}

bool validate_profile(const LossProfile& profile, const RiskSpec& spec) {
    for (std::size_t i = 0; i < profile.size(); ++i) {
        const double v = profile[i];
        if (!std::isfinite(v)) return false;
        if (v < spec.lower_bound_a - kMonotoneTol || v > spec.upper_bound_b + kMonotoneTol) {
            return false;
        }
        if (i > 0 && v > profile[i - 1] + kMonotoneTol) return false;
    }
    return true;
}

const char* method_name(Method m) {
    switch (m) {
        case Method::crc: return "crc";
        case Method::nonx_crc: return "nonx_crc";
        case Method::nonx_crc_wls: return "nonx_crc_wls";
    }
    return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
    if (name == "crc") return Method::crc;
    if (name == "nonx_crc") return Method::nonx_crc;
    if (name == "nonx_crc_wls") return Method::nonx_crc_wls;
    return std::nullopt;
}

}  // namespace nonxcrc
