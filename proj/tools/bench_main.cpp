// Benchmark: the same experiment workloads through the serial reference
// loop (jobs = 1) and the OpenMP parallel-for, with a byte-identity check
// on the traces. Trials are the parallel axis.

#include <chrono>
#include <cstdio>
#include <string>

#include "nonxcrc/harness.hpp"
#include "nonxcrc/parallel.hpp"

using namespace nonxcrc;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void bench_synth(std::size_t trials, std::size_t n_points, int jobs) {
    SynthRunConfig config;
    config.data.n_points = n_points;
    config.data.setting = Setting::changepoints;
    config.data.changepoint_steps = {n_points / 4, 3 * n_points / 4};
    config.protocol.methods = {MethodConfig{Method::crc, WeightScheme::uniform},
                               MethodConfig{Method::nonx_crc, WeightScheme::decay}};
    config.trials = trials;
    config.master_seed = 42;
    const LambdaGrid grid = LambdaGrid::uniform(0.0, 1.0, 101);

    config.jobs = 1;
    auto t0 = std::chrono::steady_clock::now();
    const auto serial = run_synth_experiment(config, grid);
    const double serial_s = seconds_since(t0);

    config.jobs = jobs;
    t0 = std::chrono::steady_clock::now();
    const auto parallel = run_synth_experiment(config, grid);
    const double parallel_s = seconds_since(t0);

    const bool identical = trace_csv_string(serial) == trace_csv_string(parallel);
    std::printf("synth   %4zu trials x %5zu pts   serial %7.2fs   %d jobs %7.2fs   "
                "speedup %.2fx   traces %s\n",
                trials, n_points, serial_s, jobs, parallel_s, serial_s / parallel_s,
                identical ? "identical" : "DIFFER");
}

void bench_qa(std::size_t records, std::size_t trials, int jobs) {
    const auto data = generate_qa_fixture(records, 5);
    QaRunConfig config;
    config.n_calib = records * 5 / 8;
    config.trials = trials;
    config.weight_mode = WeightScheme::similarity;
    config.master_seed = 42;
    const LambdaGrid grid = LambdaGrid::uniform(0.0, 1.0, 101);

    config.jobs = 1;
    auto t0 = std::chrono::steady_clock::now();
    const auto serial = run_qa_trials(data, config, grid);
    const double serial_s = seconds_since(t0);

    config.jobs = jobs;
    t0 = std::chrono::steady_clock::now();
    const auto parallel = run_qa_trials(data, config, grid);
    const double parallel_s = seconds_since(t0);

    const bool identical = trace_csv_string(serial) == trace_csv_string(parallel);
    std::printf("qa      %4zu trials x %5zu rec   serial %7.2fs   %d jobs %7.2fs   "
                "speedup %.2fx   traces %s\n",
                trials, records, serial_s, jobs, parallel_s, serial_s / parallel_s,
                identical ? "identical" : "DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t trials = 8;
    std::size_t n_points = 800;
    if (argc > 1) trials = std::stoul(argv[1]);
    if (argc > 2) n_points = std::stoul(argv[2]);
    const int jobs = hardware_jobs();
    std::printf("hardware jobs: %d\n", jobs);
    bench_synth(trials, n_points, jobs);
    bench_qa(1200, 200, jobs);
    return 0;
}
