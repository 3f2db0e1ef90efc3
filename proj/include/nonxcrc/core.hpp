#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nonxcrc {

/// Tolerance used when checking that a loss profile is nonincreasing.
/// Losses computed from model scores carry rounding noise.
inline constexpr double kMonotoneTol = 1e-9;

/// Target risk level alpha together with the loss bounds [A, B].
struct RiskSpec {
    double alpha;
    double lower_bound_a;
    double upper_bound_b;

    RiskSpec(double alpha_, double lower_a, double upper_b);

    double range() const { return upper_bound_b - lower_bound_a; }
};

/// Ordered finite set of candidate lambda values; the selection rules take
/// an infimum over this grid. lambda_max is the largest (last) value.
class LambdaGrid {
  public:
    explicit LambdaGrid(std::vector<double> values);

    /// count equally spaced values from lo to hi inclusive.
    static LambdaGrid uniform(double lo, double hi, std::size_t count);
    /// Integer grid 0, 1, ..., max_k (top-k set families).
    static LambdaGrid integers(std::size_t max_k);

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double lambda_max() const { return values_.back(); }

  private:
    std::vector<double> values_;
};

/// Per-example calibration weights w_i in [0,1] plus the normalized
/// weights w~_i = w_i / (N_w + 1); the final normalized entry is the
/// test point's share 1 / (N_w + 1).
class WeightVector {
  public:
    explicit WeightVector(std::vector<double> raw);

    const std::vector<double>& raw() const { return raw_; }
    const std::vector<double>& normalized() const { return normalized_; }
    double weight_sum() const { return weight_sum_; }  // N_w
    std::size_t size() const { return raw_.size(); }

  private:
    std::vector<double> raw_;
    std::vector<double> normalized_;  // length raw_.size() + 1
    double weight_sum_;
};

/// One example's loss evaluated at every grid value.
using LossProfile = std::vector<double>;

/// True iff the profile is nonincreasing (within kMonotoneTol) and every
/// entry lies inside [A, B]. Callers treat false as an input error.
bool validate_profile(const LossProfile& profile, const RiskSpec& spec);

enum class Method { crc, nonx_crc, nonx_crc_wls };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

/// One harness timestep's output for one method, as emitted to trace CSVs.
/// set_size holds a count for set-valued families and the interval width
/// for interval families; absent when the family has no size notion.
struct TracePoint {
    long trial;
    long timestep;
    Method method;
    double lambda_hat;
    double test_loss;
    std::optional<double> set_size;
};

}  // namespace nonxcrc
