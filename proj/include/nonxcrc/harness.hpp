#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nonxcrc/calibrate.hpp"
#include "nonxcrc/core.hpp"
#include "nonxcrc/data.hpp"
#include "nonxcrc/losses.hpp"
#include "nonxcrc/models.hpp"

namespace nonxcrc {

enum class WeightScheme { uniform, decay, maxent, similarity };

/// One calibration method evaluated by the harness: trace tag, weight
/// scheme for the lambda-hat rule, and (for the electricity task) whether
/// the underlying regression itself is weighted.
struct MethodConfig {
    Method method = Method::crc;
    WeightScheme scheme = WeightScheme::uniform;
    double rho = 0.99;         // decay scheme: w_i = rho^{n+1-i} over calibration positions
    double beta = 1.0;         // maxent scheme
    double tv_epsilon = 0.01;  // maxent: d_i = min(1, tv_epsilon * position gap)
    bool weighted_fit = false; // fit the model with per-point weights w_i
};

enum class TrainRule { odd_indices };
enum class CalibRule { even_indices };

struct RollingProtocol {
    std::size_t warmup = 200;
    TrainRule train_rule = TrainRule::odd_indices;
    CalibRule calib_rule = CalibRule::even_indices;
    /// When true (the default), a calibration point keeps the loss profile
    /// computed when it arrived as the test point, mirroring a deployment
    /// where scores are produced once per point. When false, every
    /// calibration profile is recomputed under the current timestep's fit.
    bool reuse_arrival_profiles = true;
    std::vector<MethodConfig> methods;
};

/// Task adapter for the rolling harness: how to refit models and score
/// individual points. fit_slot 0 is the shared unweighted fit; methods
/// with weighted_fit get their own slot. Implementations may keep per-slot
/// state between timesteps (e.g. warm starts); the rolling loop is
/// sequential within a trial.
class RollingTask {
  public:
    virtual ~RollingTask() = default;

    virtual std::size_t size() const = 0;

    /// Refit slot's model on the train split. train_weights is empty for
    /// unweighted slots, otherwise aligned with train_indices.
    virtual void fit(std::size_t fit_slot, const std::vector<std::size_t>& train_indices,
                     const std::vector<double>& train_weights) = 0;

    /// Loss of example `index` across the whole grid under slot's model.
    virtual LossProfile profile(std::size_t fit_slot, std::size_t index) const = 0;

    /// Size analogue of the prediction set at lambda (count or width).
    virtual std::optional<double> set_size(std::size_t fit_slot, std::size_t index,
                                           double lambda) const = 0;
};

/// Rolling evaluation: for each timestep, split the history by index
/// parity, refit, calibrate lambda-hat per method, and score the next
/// point. Emits one TracePoint per (timestep, method).
std::vector<TracePoint> run_rolling(RollingTask& task, const RollingProtocol& protocol,
                                    const RiskSpec& spec, const LambdaGrid& grid,
                                    long trial = 0);

/// Trailing (causal) moving average; output[t] averages the last
/// min(window, t+1) entries.
std::vector<double> rolling_average(const std::vector<double>& trace, std::size_t window);

struct MethodSummary {
    double mean_loss = 0.0;
    double median_loss = 0.0;
    double mean_lambda = 0.0;
    std::optional<double> mean_set_size;
    std::size_t count = 0;
};

struct TrialSummary {
    std::map<Method, MethodSummary> per_method;
};

TrialSummary summarize(const std::vector<TracePoint>& traces);

// ---------------------------------------------------------------------------
// Experiment runners
// ---------------------------------------------------------------------------

/// Multilabel FNR experiment on synthetic time series. A fresh dataset is
/// drawn per trial from a seed derived off the master seed; trials run in
/// parallel when jobs > 1 with output identical to the serial order.
struct SynthRunConfig {
    SyntheticConfig data;
    RollingProtocol protocol;
    RiskSpec spec{0.2, 0.0, 1.0};
    SetMode set_mode = SetMode::one_minus_lambda;
    LogisticFitConfig logistic{};
    std::size_t trials = 10;
    std::uint64_t master_seed = 0;
    int jobs = 1;
};

std::vector<TracePoint> run_synth_experiment(const SynthRunConfig& config,
                                             const LambdaGrid& grid);

/// Interval-width experiment on electricity records (single ordered pass).
struct ElecRunConfig {
    RollingProtocol protocol;
    RiskSpec spec{0.05, 0.0, 1.0};
};

std::vector<TracePoint> run_elec_experiment(const std::vector<ElecRecord>& records,
                                            const ElecRunConfig& config,
                                            const LambdaGrid& grid);

/// QA trials: seeded random calibration/evaluation splits; lambda-hat per
/// evaluation point when the weights depend on the test embedding.
struct QaRunConfig {
    std::size_t n_calib = 500;
    std::size_t trials = 50;
    RiskSpec spec{0.3, 0.0, 1.0};
    WeightScheme weight_mode = WeightScheme::uniform;  // uniform or similarity
    std::uint64_t master_seed = 0;
    int jobs = 1;
};

std::vector<TracePoint> run_qa_trials(const std::vector<QaRecord>& records,
                                      const QaRunConfig& config, const LambdaGrid& grid);

/// Write traces as CSV with header
/// trial,timestep,method,lambda_hat,test_loss,set_size
/// in (trial, timestep, method name) order. Deterministic byte-for-byte.
void write_trace_csv(const std::string& path, std::vector<TracePoint> traces);
std::string trace_csv_string(std::vector<TracePoint> traces);

}  // namespace nonxcrc
