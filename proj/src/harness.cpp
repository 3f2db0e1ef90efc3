#include "nonxcrc/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "nonxcrc/models.hpp"
#include "nonxcrc/parallel.hpp"
#include "nonxcrc/rng.hpp"
#include "nonxcrc/weights.hpp"

namespace nonxcrc {

namespace {

// Weights for the calibration sequence at one timestep. Positions follow
// the selection rule's indexing: i = 1..n over calibration examples in
// arrival order, the test point playing the role of position n+1.
WeightVector method_weights(const MethodConfig& m, std::size_t n_calib,
                            const RiskSpec& spec) {
    switch (m.scheme) {
        case WeightScheme::uniform:
            return uniform_weights(n_calib);
        case WeightScheme::decay:
            return decay_weights(n_calib, m.rho);
        case WeightScheme::maxent: {
            std::vector<double> d(n_calib);
            for (std::size_t i = 0; i < n_calib; ++i) {
                d[i] = std::min(1.0, m.tv_epsilon * static_cast<double>(n_calib - i));
            }
            return maxent_weights(TvEstimates(std::move(d)), m.beta, spec);
        }
        case WeightScheme::similarity:
            throw std::invalid_argument(
                "similarity weights need embeddings; use the QA runner");
    }
    throw std::invalid_argument("unknown weight scheme");
}

}  // namespace

std::vector<TracePoint> run_rolling(RollingTask& task, const RollingProtocol& protocol,
                                    const RiskSpec& spec, const LambdaGrid& grid, long trial) {
    const std::size_t n_points = task.size();
    if (n_points <= protocol.warmup + 1) {
        throw std::invalid_argument("run_rolling: need data length > warmup + 1");
    }
    if (protocol.methods.empty()) {
        throw std::invalid_argument("run_rolling: no methods configured");
    }

    // Fit slots: 0 is the shared unweighted fit; each weighted-fit method
    // gets its own slot (its train weights depend on its rho).
    std::vector<std::size_t> slot_of(protocol.methods.size(), 0);
    bool need_unweighted = false;
    std::size_t n_slots = 1;
    for (std::size_t mi = 0; mi < protocol.methods.size(); ++mi) {
        if (protocol.methods[mi].weighted_fit) {
            slot_of[mi] = n_slots++;
        } else {
            need_unweighted = true;
        }
    }

    std::vector<std::size_t> train;
    std::vector<std::size_t> calib;
    std::size_t next_index = 0;

    std::vector<TracePoint> traces;
    traces.reserve((n_points - protocol.warmup - 1) * protocol.methods.size());

    std::vector<char> slot_fitted(n_slots, 0);
    std::vector<std::vector<LossProfile>> slot_profiles(n_slots);
    // arrival-profile cache: profile[index] as computed the step it arrived
    std::vector<std::vector<LossProfile>> cached(n_slots,
                                                 std::vector<LossProfile>(n_points));

    for (std::size_t test_idx = protocol.warmup + 1; test_idx < n_points; ++test_idx) {
        const bool first_step = next_index == 0;
        while (next_index < test_idx) {
            if (next_index % 2 == 1) {
                train.push_back(next_index);
            } else {
                calib.push_back(next_index);
            }
            ++next_index;
        }

        std::fill(slot_fitted.begin(), slot_fitted.end(), 0);
        try {
            if (need_unweighted) {
                task.fit(0, train, {});
                slot_fitted[0] = 1;
            }
            for (std::size_t mi = 0; mi < protocol.methods.size(); ++mi) {
                if (!protocol.methods[mi].weighted_fit) continue;
                // t_j = rho^{n+1-j} over train positions; newest point largest
                std::vector<double> w(train.size());
                double power = protocol.methods[mi].rho;
                for (std::size_t j = train.size(); j-- > 0;) {
                    w[j] = power;
                    power *= protocol.methods[mi].rho;
                }
                task.fit(slot_of[mi], train, w);
                slot_fitted[slot_of[mi]] = 1;
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("timestep " + std::to_string(test_idx) +
                                     ": model fit failed: " + e.what());
        }

        for (std::size_t s = 0; s < n_slots; ++s) {
            if (!slot_fitted[s]) continue;
            auto& profiles = slot_profiles[s];
            profiles.clear();
            profiles.reserve(calib.size());
            if (protocol.reuse_arrival_profiles) {
                // warmup points never arrived as test points; score them once
                // under the first fitted model
                if (first_step) {
                    for (std::size_t idx : calib) cached[s][idx] = task.profile(s, idx);
                }
                for (std::size_t idx : calib) profiles.push_back(cached[s][idx]);
            } else {
                for (std::size_t idx : calib) profiles.push_back(task.profile(s, idx));
            }
        }

        // One batch per slot in use; methods sharing a slot share the batch.
        std::vector<std::unique_ptr<CalibrationBatch>> batches(n_slots);
        for (std::size_t s = 0; s < n_slots; ++s) {
            if (slot_fitted[s]) {
                batches[s] = std::make_unique<CalibrationBatch>(std::move(slot_profiles[s]),
                                                                grid, spec);
            }
        }

        std::vector<LossProfile> test_profile(n_slots);
        for (std::size_t s = 0; s < n_slots; ++s) {
            if (!slot_fitted[s]) continue;
            test_profile[s] = task.profile(s, test_idx);
            if (protocol.reuse_arrival_profiles && test_idx % 2 == 0) {
                cached[s][test_idx] = test_profile[s];  // future calibration point
            }
        }

        for (std::size_t mi = 0; mi < protocol.methods.size(); ++mi) {
            const MethodConfig& m = protocol.methods[mi];
            const std::size_t s = slot_of[mi];
            const CalibrationBatch& batch = *batches[s];

            LambdaHat lh{};
            if (m.method == Method::crc) {
                lh = crc_lambda_hat(batch);
            } else {
                lh = nonx_lambda_hat(batch, method_weights(m, calib.size(), spec));
            }

            TracePoint tp;
            tp.trial = trial;
            tp.timestep = static_cast<long>(test_idx);
            tp.method = m.method;
            tp.lambda_hat = lh.value;
            tp.test_loss = test_profile[s][lh.index];
            tp.set_size = task.set_size(s, test_idx, lh.value);
            traces.push_back(tp);
        }
    }
    return traces;
}

std::vector<double> rolling_average(const std::vector<double>& trace, std::size_t window) {
    if (window < 1) {
        throw std::invalid_argument("rolling_average: window must be >= 1");
    }
    std::vector<double> out(trace.size());
    double running = 0.0;
    for (std::size_t t = 0; t < trace.size(); ++t) {
        running += trace[t];
        if (t >= window) running -= trace[t - window];
        const std::size_t effective = std::min(window, t + 1);
        out[t] = running / static_cast<double>(effective);
    }
    return out;
}

TrialSummary summarize(const std::vector<TracePoint>& traces) {
    struct Accum {
        std::vector<double> losses;
        double lambda_sum = 0.0;
        double size_sum = 0.0;
        std::size_t size_count = 0;
    };
    std::map<Method, Accum> acc;
    for (const auto& tp : traces) {
        Accum& a = acc[tp.method];
        a.losses.push_back(tp.test_loss);
        a.lambda_sum += tp.lambda_hat;
        if (tp.set_size) {
            a.size_sum += *tp.set_size;
            ++a.size_count;
        }
    }
    TrialSummary summary;
    for (auto& [method, a] : acc) {
        MethodSummary ms;
        ms.count = a.losses.size();
        double sum = 0.0;
        for (double v : a.losses) sum += v;
        ms.mean_loss = sum / static_cast<double>(a.losses.size());
        std::sort(a.losses.begin(), a.losses.end());
        const std::size_t n = a.losses.size();
        ms.median_loss = (n % 2 == 1) ? a.losses[n / 2]
                                      : 0.5 * (a.losses[n / 2 - 1] + a.losses[n / 2]);
        ms.mean_lambda = a.lambda_sum / static_cast<double>(n);
        if (a.size_count > 0) {
            ms.mean_set_size = a.size_sum / static_cast<double>(a.size_count);
        }
        summary.per_method[method] = ms;
    }
    return summary;
}

// ---------------------------------------------------------------------------
// Synthetic multilabel task
// ---------------------------------------------------------------------------

namespace {

class SynthRollingTask final : public RollingTask {
  public:
    SynthRollingTask(const std::vector<SyntheticPoint>& points, SetMode mode,
                     const LambdaGrid& grid, const LogisticFitConfig& fit_config)
        : points_(points), mode_(mode), grid_(grid), fit_config_(fit_config) {
        gold_.reserve(points.size());
        for (const auto& p : points) gold_.push_back(gold_indices(p.labels));
    }

    std::size_t size() const override { return points_.size(); }

    void fit(std::size_t fit_slot, const std::vector<std::size_t>& train_indices,
             const std::vector<double>& train_weights) override {
        if (!train_weights.empty()) {
            throw std::invalid_argument("synthetic task: weighted logistic fit not supported");
        }
        const std::size_t m = points_.empty() ? 0 : points_[0].x.size();
        Matrix x(train_indices.size(), m);
        Matrix y(train_indices.size(), m);
        for (std::size_t r = 0; r < train_indices.size(); ++r) {
            const SyntheticPoint& p = points_[train_indices[r]];
            for (std::size_t j = 0; j < m; ++j) {
                x(r, j) = p.x[j];
                y(r, j) = static_cast<double>(p.labels[j]);
            }
        }
        if (models_.size() <= fit_slot) models_.resize(fit_slot + 1);
        LogisticFitConfig cfg = fit_config_;
        cfg.warm_start = models_[fit_slot].n_labels() == m ? &models_[fit_slot] : nullptr;
        models_[fit_slot] = fit_logistic(x, y, cfg);
    }

    LossProfile profile(std::size_t fit_slot, std::size_t index) const override {
        if (gold_[index].empty()) {
            // no positive labels: nothing to miss at any lambda
            return LossProfile(grid_.size(), 0.0);
        }
        const auto probs = models_[fit_slot].predict_proba(points_[index].x);
        return fnr_profile(probs, gold_[index], grid_, mode_);
    }

    std::optional<double> set_size(std::size_t fit_slot, std::size_t index,
                                   double lambda) const override {
        const auto probs = models_[fit_slot].predict_proba(points_[index].x);
        return static_cast<double>(threshold_set(probs, lambda, mode_).size());
    }

  private:
    const std::vector<SyntheticPoint>& points_;
    SetMode mode_;
    const LambdaGrid& grid_;
    LogisticFitConfig fit_config_;
    std::vector<std::vector<std::size_t>> gold_;
    std::vector<MultiLabelLogistic> models_;
};

}  // namespace

std::vector<TracePoint> run_synth_experiment(const SynthRunConfig& config,
                                             const LambdaGrid& grid) {
    if (config.trials < 1) {
        throw std::invalid_argument("run_synth_experiment: trials must be >= 1");
    }
    std::vector<std::vector<TracePoint>> per_trial(config.trials);
    parallel_for_index(config.trials, config.jobs, [&](std::size_t t) {
        SyntheticConfig data = config.data;
        data.seed = Rng::derive_seed(config.master_seed, t);
        const std::vector<SyntheticPoint> points = generate_synthetic(data);
        SynthRollingTask task(points, config.set_mode, grid, config.logistic);
        per_trial[t] =
            run_rolling(task, config.protocol, config.spec, grid, static_cast<long>(t));
    });
    std::vector<TracePoint> traces;
    for (auto& tr : per_trial) {
        traces.insert(traces.end(), tr.begin(), tr.end());
    }
    return traces;
}

// ---------------------------------------------------------------------------
// Electricity task
// ---------------------------------------------------------------------------

namespace {

class ElecRollingTask final : public RollingTask {
  public:
    ElecRollingTask(const std::vector<ElecRecord>& records, const LambdaGrid& grid)
        : grid_(grid), features_(records.size(), 4), targets_(records.size()) {
        for (std::size_t i = 0; i < records.size(); ++i) {
            features_(i, 0) = records[i].nswprice;
            features_(i, 1) = records[i].vicprice;
            features_(i, 2) = records[i].nswdemand;
            features_(i, 3) = records[i].vicdemand;
            targets_[i] = records[i].transfer;
        }
    }

    std::size_t size() const override { return targets_.size(); }

    void fit(std::size_t fit_slot, const std::vector<std::size_t>& train_indices,
             const std::vector<double>& train_weights) override {
        Matrix x(train_indices.size(), 4);
        std::vector<double> y(train_indices.size());
        for (std::size_t r = 0; r < train_indices.size(); ++r) {
            const std::size_t idx = train_indices[r];
            for (std::size_t j = 0; j < 4; ++j) x(r, j) = features_(idx, j);
            y[r] = targets_[idx];
        }
        if (models_.size() <= fit_slot) models_.resize(fit_slot + 1);
        models_[fit_slot] = fit_least_squares(
            x, y, train_weights.empty() ? nullptr : &train_weights);
    }

    LossProfile profile(std::size_t fit_slot, std::size_t index) const override {
        const double pred = prediction(fit_slot, index);
        return insensitive_profile(pred, targets_[index], grid_);
    }

    std::optional<double> set_size(std::size_t, std::size_t, double lambda) const override {
        return 2.0 * lambda;  // interval width
    }

  private:
    double prediction(std::size_t fit_slot, std::size_t index) const {
        // transfer lives in [0,1]; clamping keeps the loss within [A,B]
        const double raw = models_[fit_slot].predict(features_.row(index), 4);
        return std::clamp(raw, 0.0, 1.0);
    }

    const LambdaGrid& grid_;
    Matrix features_;
    std::vector<double> targets_;
    std::vector<LinearModel> models_;
};

}  // namespace

std::vector<TracePoint> run_elec_experiment(const std::vector<ElecRecord>& records,
                                            const ElecRunConfig& config,
                                            const LambdaGrid& grid) {
    ElecRollingTask task(records, grid);
    return run_rolling(task, config.protocol, config.spec, grid, /*trial=*/0);
}

// ---------------------------------------------------------------------------
// QA trials
// ---------------------------------------------------------------------------

std::vector<TracePoint> run_qa_trials(const std::vector<QaRecord>& records,
                                      const QaRunConfig& config, const LambdaGrid& grid) {
    if (config.n_calib < 1 || records.size() < config.n_calib + 1) {
        throw std::invalid_argument("run_qa_trials: need at least n_calib + 1 records");
    }
    Method tag;
    if (config.weight_mode == WeightScheme::uniform) {
        tag = Method::crc;
    } else if (config.weight_mode == WeightScheme::similarity) {
        tag = Method::nonx_crc;
    } else {
        throw std::invalid_argument("run_qa_trials: weight_mode must be uniform or similarity");
    }

    // Record-level precomputation shared by all trials.
    const std::size_t n = records.size();
    std::vector<std::vector<double>> scores(n);
    std::vector<LossProfile> profiles(n);
    for (std::size_t i = 0; i < n; ++i) {
        const QaRecord& rec = records[i];
        std::vector<double> best_f1(rec.candidates.size());
        scores[i].resize(rec.candidates.size());
        std::vector<TokenSeq> gold_tokens;
        gold_tokens.reserve(rec.gold_answers.size());
        for (const auto& g : rec.gold_answers) gold_tokens.push_back(normalize_tokens(g));
        for (std::size_t c = 0; c < rec.candidates.size(); ++c) {
            scores[i][c] = rec.candidates[c].score;
            const TokenSeq ct = normalize_tokens(rec.candidates[c].text);
            double best = 0.0;
            for (const auto& gt : gold_tokens) best = std::max(best, token_f1(ct, gt));
            best_f1[c] = best;
        }
        profiles[i] = best_f1_profile(scores[i], best_f1, grid);
    }

    std::vector<std::vector<TracePoint>> per_trial(config.trials);
    parallel_for_index(config.trials, config.jobs, [&](std::size_t t) {
        Rng rng(Rng::derive_seed(config.master_seed, t));
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);

        std::vector<LossProfile> calib_profiles;
        calib_profiles.reserve(config.n_calib);
        std::vector<std::vector<double>> calib_embeddings;
        calib_embeddings.reserve(config.n_calib);
        for (std::size_t i = 0; i < config.n_calib; ++i) {
            calib_profiles.push_back(profiles[order[i]]);
            calib_embeddings.push_back(records[order[i]].embedding);
        }
        const CalibrationBatch batch(std::move(calib_profiles), grid, config.spec);

        LambdaHat shared{};
        if (tag == Method::crc) shared = crc_lambda_hat(batch);

        auto& out = per_trial[t];
        for (std::size_t p = config.n_calib; p < n; ++p) {
            const std::size_t idx = order[p];
            LambdaHat lh = shared;
            if (tag == Method::nonx_crc) {
                const WeightVector w =
                    similarity_weights(calib_embeddings, records[idx].embedding);
                lh = nonx_lambda_hat(batch, w);
            }
            std::size_t set_count = 0;
            for (double s : scores[idx]) {
                if (s >= -lh.value) ++set_count;
            }
            TracePoint tp;
            tp.trial = static_cast<long>(t);
            tp.timestep = static_cast<long>(p - config.n_calib);
            tp.method = tag;
            tp.lambda_hat = lh.value;
            tp.test_loss = profiles[idx][lh.index];
            tp.set_size = static_cast<double>(set_count);
            out.push_back(tp);
        }
    });

    std::vector<TracePoint> traces;
    for (auto& tr : per_trial) traces.insert(traces.end(), tr.begin(), tr.end());
    return traces;
}

// ---------------------------------------------------------------------------
// Trace CSV
// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

std::string trace_csv_string(std::vector<TracePoint> traces) {
    std::stable_sort(traces.begin(), traces.end(), [](const TracePoint& a, const TracePoint& b) {
        if (a.trial != b.trial) return a.trial < b.trial;
        if (a.timestep != b.timestep) return a.timestep < b.timestep;
        return std::string(method_name(a.method)) < method_name(b.method);
    });
    std::string out = "trial,timestep,method,lambda_hat,test_loss,set_size\n";
    for (const auto& tp : traces) {
        out += std::to_string(tp.trial);
        out.push_back(',');
        out += std::to_string(tp.timestep);
        out.push_back(',');
        out += method_name(tp.method);
        out.push_back(',');
        out += format_double(tp.lambda_hat);
        out.push_back(',');
        out += format_double(tp.test_loss);
        out.push_back(',');
        if (tp.set_size) out += format_double(*tp.set_size);
        out.push_back('\n');
    }
    return out;
}

void write_trace_csv(const std::string& path, std::vector<TracePoint> traces) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open trace output file: " + path);
    }
    out << trace_csv_string(std::move(traces));
}

}  // namespace nonxcrc
