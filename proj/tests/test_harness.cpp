#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "nonxcrc/harness.hpp"
#include "nonxcrc/parallel.hpp"
#include "support.hpp"

using namespace nonxcrc;

namespace {

// Captures the index splits the rolling loop hands to the task.
class ProbeTask final : public RollingTask {
  public:
    explicit ProbeTask(std::size_t n, const LambdaGrid& grid) : n_(n), grid_(grid) {}

    std::size_t size() const override { return n_; }

    void fit(std::size_t slot, const std::vector<std::size_t>& train,
             const std::vector<double>& weights) override {
        last_train = train;
        fit_weights[slot] = weights;
        profile_calls.clear();
    }

    LossProfile profile(std::size_t, std::size_t index) const override {
        profile_calls.push_back(index);
        LossProfile p(grid_.size());
        for (std::size_t gi = 0; gi < grid_.size(); ++gi) {
            p[gi] = 1.0 - grid_[gi];  // linear, feasible somewhere
        }
        return p;
    }

    std::optional<double> set_size(std::size_t, std::size_t, double) const override {
        return std::nullopt;
    }

    std::size_t n_;
    const LambdaGrid& grid_;
    std::vector<std::size_t> last_train;
    std::map<std::size_t, std::vector<double>> fit_weights;
    mutable std::vector<std::size_t> profile_calls;
};

}  // namespace

TEST_CASE("run_rolling splits history by parity and scores the next point") {
    const LambdaGrid grid = LambdaGrid::uniform(0.0, 1.0, 11);
    const RiskSpec spec(0.5, 0.0, 1.0);
    RollingProtocol protocol;
    protocol.warmup = 6;
    protocol.reuse_arrival_profiles = false;  // observe every per-step profile call
    protocol.methods = {MethodConfig{Method::crc, WeightScheme::uniform}};

    ProbeTask task(10, grid);
    const auto traces = run_rolling(task, protocol, spec, grid);

    // timesteps 7, 8, 9
    REQUIRE(traces.size() == 3);
    CHECK(traces.front().timestep == 7);
    CHECK(traces.back().timestep == 9);

    // after the final step the context is indices 0..8
    std::set<std::size_t> train(task.last_train.begin(), task.last_train.end());
    CHECK(train == std::set<std::size_t>{1, 3, 5, 7});

    // profile() saw the calibration (even) indices and then the test point 9
    std::set<std::size_t> seen(task.profile_calls.begin(), task.profile_calls.end());
    CHECK(seen == std::set<std::size_t>{0, 2, 4, 6, 8, 9});
    CHECK(task.profile_calls.back() == 9);

    // parity split covers every context index exactly once
    std::set<std::size_t> all = train;
    for (std::size_t idx : task.profile_calls) {
        if (idx != 9) all.insert(idx);
    }
    CHECK(all.size() == 9);
}

namespace {

// Profiles are constant per fit generation, so lambda-hat exposes whether a
// calibration point kept its arrival profile or was rescored.
class GenerationTask final : public RollingTask {
  public:
    GenerationTask(std::size_t n, const LambdaGrid& grid) : n_(n), grid_(grid) {}

    std::size_t size() const override { return n_; }

    void fit(std::size_t, const std::vector<std::size_t>&,
             const std::vector<double>&) override {
        ++generation_;
    }

    LossProfile profile(std::size_t, std::size_t) const override {
        return LossProfile(grid_.size(), 0.1 * static_cast<double>(generation_));
    }

    std::optional<double> set_size(std::size_t, std::size_t, double) const override {
        return std::nullopt;
    }

  private:
    std::size_t n_;
    const LambdaGrid& grid_;
    std::size_t generation_ = 0;
};

}  // namespace

TEST_CASE("arrival profiles are kept, rescoring is opt-out") {
    const LambdaGrid grid({0.0, 1.0});
    const RiskSpec spec(0.4, 0.0, 1.0);
    RollingProtocol protocol;
    protocol.warmup = 2;
    protocol.methods = {MethodConfig{Method::crc, WeightScheme::uniform}};

    // Context at the last step holds calibration points 0, 2 (scored by the
    // first fit, value 0.1) and 4 (scored at its arrival, value 0.2). A full
    // rescore under the third fit would put every profile at 0.3 instead.
    // With n = 3 the rule needs 0.75 R + 0.25 <= 0.4, i.e. R <= 0.2.
    SUBCASE("arrival profiles: risk stays at the recorded values") {
        GenerationTask task(6, grid);
        const auto traces = run_rolling(task, protocol, spec, grid);
        REQUIRE(traces.size() == 3);
        CHECK(traces.back().lambda_hat == 0.0);  // R = 0.1333 feasible
    }
    SUBCASE("rescoring: current model repricing every profile") {
        GenerationTask task(6, grid);
        protocol.reuse_arrival_profiles = false;
        const auto traces = run_rolling(task, protocol, spec, grid);
        REQUIRE(traces.size() == 3);
        CHECK(traces.back().lambda_hat == 1.0);  // R = 0.3 infeasible everywhere
    }
}

TEST_CASE("run_rolling boundary: length warmup+2 gives exactly one timestep") {
    const LambdaGrid grid = LambdaGrid::uniform(0.0, 1.0, 11);
    const RiskSpec spec(0.5, 0.0, 1.0);
    RollingProtocol protocol;
    protocol.warmup = 200;
    protocol.methods = {MethodConfig{Method::crc, WeightScheme::uniform}};

    ProbeTask task(202, grid);
    CHECK(run_rolling(task, protocol, spec, grid).size() == 1);

    ProbeTask short_task(201, grid);
    CHECK_THROWS_AS(run_rolling(short_task, protocol, spec, grid), std::invalid_argument);
}

TEST_CASE("weighted-fit methods get their own slot and decay train weights") {
    const LambdaGrid grid = LambdaGrid::uniform(0.0, 1.0, 11);
    const RiskSpec spec(0.5, 0.0, 1.0);
    RollingProtocol protocol;
    protocol.warmup = 6;
    MethodConfig wls{Method::nonx_crc_wls, WeightScheme::decay};
    wls.rho = 0.9;
    wls.weighted_fit = true;
    protocol.methods = {MethodConfig{Method::crc, WeightScheme::uniform}, wls};

    ProbeTask task(8, grid);
    run_rolling(task, protocol, spec, grid);

    REQUIRE(task.fit_weights.count(0) == 1);
    REQUIRE(task.fit_weights.count(1) == 1);
    CHECK(task.fit_weights[0].empty());
    // final timestep: train {1,3,5}, position weights 0.9^{n+1-i}
    const auto& w = task.fit_weights[1];
    REQUIRE(w.size() == 3);
    CHECK(w[0] == doctest::Approx(std::pow(0.9, 3)).epsilon(1e-12));
    CHECK(w[2] == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("crc and uniform nonx produce identical traces") {
    const auto records = testsupport::make_elec_fixture(260, 4);
    const LambdaGrid grid = LambdaGrid::uniform(0.0, 1.0, 101);
    ElecRunConfig config;
    config.protocol.warmup = 200;
    config.protocol.methods = {MethodConfig{Method::crc, WeightScheme::uniform},
                               MethodConfig{Method::nonx_crc, WeightScheme::uniform}};
    const auto traces = run_elec_experiment(records, config, grid);
    REQUIRE(traces.size() == 2 * (260 - 201));

    std::map<long, double> crc_lambda;
    for (const auto& tp : traces) {
        if (tp.method == Method::crc) crc_lambda[tp.timestep] = tp.lambda_hat;
    }
    for (const auto& tp : traces) {
        if (tp.method == Method::nonx_crc) {
            CHECK(tp.lambda_hat == crc_lambda.at(tp.timestep));
        }
    }

    // every selected lambda lies on the grid
    for (const auto& tp : traces) {
        const auto& v = grid.values();
        CHECK(std::find(v.begin(), v.end(), tp.lambda_hat) != v.end());
    }
}

TEST_CASE("rolling_average") {
    CHECK(rolling_average({3.0, 1.0, 4.0}, 1) == std::vector<double>{3.0, 1.0, 4.0});
    const auto out = rolling_average({0.0, 1.0, 2.0, 3.0}, 2);
    REQUIRE(out.size() == 4);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == doctest::Approx(0.5));
    CHECK(out[2] == doctest::Approx(1.5));
    CHECK(out[3] == doctest::Approx(2.5));
    CHECK(rolling_average({2.0, 2.0, 2.0}, 30) == std::vector<double>{2.0, 2.0, 2.0});
    CHECK_THROWS_AS(rolling_average({1.0}, 0), std::invalid_argument);
}

TEST_CASE("summarize") {
    auto tp = [](Method m, double loss, double lambda) {
        TracePoint t;
        t.trial = 0;
        t.timestep = 0;
        t.method = m;
        t.lambda_hat = lambda;
        t.test_loss = loss;
        return t;
    };
    SUBCASE("two losses") {
        const auto s = summarize({tp(Method::crc, 0.1, 0.2), tp(Method::crc, 0.3, 0.4)});
        const auto& ms = s.per_method.at(Method::crc);
        CHECK(ms.mean_loss == doctest::Approx(0.2));
        CHECK(ms.median_loss == doctest::Approx(0.2));
        CHECK(ms.mean_lambda == doctest::Approx(0.3));
        CHECK_FALSE(ms.mean_set_size.has_value());
        CHECK(ms.count == 2);
    }
    SUBCASE("odd count median") {
        const auto s = summarize(
            {tp(Method::crc, 0.0, 0.0), tp(Method::crc, 0.0, 0.0), tp(Method::crc, 1.0, 0.0)});
        CHECK(s.per_method.at(Method::crc).mean_loss == doctest::Approx(1.0 / 3.0));
        CHECK(s.per_method.at(Method::crc).median_loss == 0.0);
    }
    SUBCASE("methods are grouped") {
        const auto s = summarize({tp(Method::crc, 0.2, 0.0), tp(Method::nonx_crc, 0.4, 0.0)});
        CHECK(s.per_method.size() == 2);
        CHECK(s.per_method.at(Method::nonx_crc).mean_loss == doctest::Approx(0.4));
    }
}

TEST_CASE("synthetic experiment runs and parallel output matches serial") {
    SynthRunConfig config;
    config.data.n_points = 240;
    config.data.n_labels = 4;
    config.data.setting = Setting::iid;
    config.protocol.warmup = 200;
    config.protocol.methods = {MethodConfig{Method::crc, WeightScheme::uniform},
                               MethodConfig{Method::nonx_crc, WeightScheme::decay}};
    config.trials = 3;
    config.master_seed = 99;
    config.jobs = 1;
    const LambdaGrid grid = LambdaGrid::uniform(0.0, 1.0, 101);

    const auto serial = run_synth_experiment(config, grid);
    REQUIRE(serial.size() == 3 * 39 * 2);

    config.jobs = std::max(2, hardware_jobs());
    const auto parallel = run_synth_experiment(config, grid);
    CHECK(trace_csv_string(serial) == trace_csv_string(parallel));

    // fresh dataset per trial: traces differ across trials
    const auto s = summarize(serial);
    CHECK(s.per_method.at(Method::crc).count == 3 * 39);
}

TEST_CASE("top_k set mode works through the synthetic experiment") {
    SynthRunConfig config;
    config.data.n_points = 215;
    config.data.n_labels = 5;
    config.protocol.warmup = 200;
    config.protocol.methods = {MethodConfig{Method::crc, WeightScheme::uniform}};
    config.trials = 1;
    config.set_mode = SetMode::top_k;
    const LambdaGrid grid = LambdaGrid::integers(5);

    const auto traces = run_synth_experiment(config, grid);
    REQUIRE(traces.size() == 14);
    for (const auto& tp : traces) {
        CHECK(tp.lambda_hat == std::round(tp.lambda_hat));
        REQUIRE(tp.set_size.has_value());
        CHECK(*tp.set_size == tp.lambda_hat);  // top-k set has exactly k elements
    }
}

TEST_CASE("qa trials") {
    const auto records = generate_qa_fixture(60, 17);
    const LambdaGrid grid = LambdaGrid::uniform(0.0, 1.0, 101);

    SUBCASE("uniform mode: one lambda per trial, one trace per eval point") {
        QaRunConfig config;
        config.n_calib = 58;
        config.trials = 1;
        config.weight_mode = WeightScheme::uniform;
        config.master_seed = 5;
        const auto traces = run_qa_trials(records, config, grid);
        REQUIRE(traces.size() == 2);
        CHECK(traces[0].method == Method::crc);
        CHECK(traces[0].lambda_hat == traces[1].lambda_hat);
    }
    SUBCASE("similarity mode tags nonx and adapts per point") {
        QaRunConfig config;
        config.n_calib = 40;
        config.trials = 2;
        config.weight_mode = WeightScheme::similarity;
        config.master_seed = 5;
        const auto traces = run_qa_trials(records, config, grid);
        REQUIRE(traces.size() == 2 * 20);
        for (const auto& tp : traces) {
            CHECK(tp.method == Method::nonx_crc);
            REQUIRE(tp.set_size.has_value());
            CHECK(*tp.set_size >= 0.0);
        }
    }
    SUBCASE("deterministic and identical across jobs") {
        QaRunConfig config;
        config.n_calib = 40;
        config.trials = 4;
        config.weight_mode = WeightScheme::similarity;
        config.master_seed = 31;
        config.jobs = 1;
        const auto a = run_qa_trials(records, config, grid);
        config.jobs = 2;
        const auto b = run_qa_trials(records, config, grid);
        CHECK(trace_csv_string(a) == trace_csv_string(b));
    }
    SUBCASE("needs n_calib + 1 records") {
        QaRunConfig config;
        config.n_calib = 60;
        CHECK_THROWS_AS(run_qa_trials(records, config, grid), std::invalid_argument);
    }
}

TEST_CASE("trace csv format") {
    TracePoint a;
    a.trial = 1;
    a.timestep = 5;
    a.method = Method::nonx_crc;
    a.lambda_hat = 0.25;
    a.test_loss = 0.125;
    a.set_size = 23.0;
    TracePoint b = a;
    b.trial = 0;
    b.method = Method::crc;
    b.set_size = std::nullopt;

    const std::string csv = trace_csv_string({a, b});
    CHECK(csv ==
          "trial,timestep,method,lambda_hat,test_loss,set_size\n"
          "0,5,crc,0.25,0.125,\n"
          "1,5,nonx_crc,0.25,0.125,23\n");

    // rows sort by trial, then timestep, then method name
    TracePoint c = a;
    c.trial = 0;
    c.timestep = 5;
    c.method = Method::nonx_crc_wls;
    const std::string multi = trace_csv_string({a, c, b});
    const auto crc_pos = multi.find(",crc,");
    const auto wls_pos = multi.find(",nonx_crc_wls,");
    REQUIRE(crc_pos != std::string::npos);
    REQUIRE(wls_pos != std::string::npos);
    CHECK(crc_pos < wls_pos);
}
