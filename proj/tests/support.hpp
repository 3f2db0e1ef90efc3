#pragma once

// Shared test helpers: independent oracles and fixture generators. These
// deliberately re-derive results by the most direct route available (linear
// scans, definitional formulas) so the library implementations are checked
// against something that does not share their shortcuts.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nonxcrc/calibrate.hpp"
#include "nonxcrc/core.hpp"
#include "nonxcrc/data.hpp"
#include "nonxcrc/rng.hpp"

namespace testsupport {

// Exhaustive left-to-right scan for the smallest feasible lambda. Passing
// raw_weights = nullptr gives the unweighted CRC rule.
inline nonxcrc::LambdaHat scan_lambda_hat(const nonxcrc::CalibrationBatch& batch,
                                          const std::vector<double>* raw_weights) {
    const auto& grid = batch.grid();
    const auto& spec = batch.risk_spec();
    const std::size_t n = batch.size();
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        double sum = 0.0;
        double nw = 0.0;
        if (raw_weights != nullptr) {
            for (std::size_t i = 0; i < n; ++i) {
                sum += (*raw_weights)[i] * batch.profiles()[i][gi];
            }
            for (std::size_t i = 0; i < n; ++i) nw += (*raw_weights)[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) sum += batch.profiles()[i][gi];
            nw = static_cast<double>(n);
        }
        bool feasible;
        if (nw == 0.0) {
            feasible = spec.upper_bound_b <= spec.alpha;
        } else {
            const double risk = sum / nw;
            feasible =
                (nw / (nw + 1.0)) * risk + spec.upper_bound_b / (nw + 1.0) <= spec.alpha;
        }
        if (feasible) return nonxcrc::LambdaHat{grid[gi], gi, false};
    }
    return nonxcrc::LambdaHat{grid.lambda_max(), grid.size() - 1, true};
}

// Random strictly increasing grid with size points.
inline nonxcrc::LambdaGrid random_grid(nonxcrc::Rng& rng, std::size_t size) {
    std::vector<double> v(size);
    double x = rng.uniform01();
    for (std::size_t i = 0; i < size; ++i) {
        v[i] = x;
        x += 0.01 + rng.uniform01();
    }
    return nonxcrc::LambdaGrid(std::move(v));
}

// Random batch of exactly nonincreasing profiles within [A, B].
inline nonxcrc::CalibrationBatch random_batch(nonxcrc::Rng& rng, std::size_t n,
                                              const nonxcrc::LambdaGrid& grid,
                                              const nonxcrc::RiskSpec& spec) {
    std::vector<nonxcrc::LossProfile> profiles(n);
    for (auto& p : profiles) {
        p.resize(grid.size());
        for (auto& v : p) {
            v = rng.uniform(spec.lower_bound_a, spec.upper_bound_b);
        }
        std::sort(p.begin(), p.end(), std::greater<double>());
    }
    return nonxcrc::CalibrationBatch(std::move(profiles), grid, spec);
}

// The entropy-regularized coverage-gap objective whose minimizer over the
// feasible normalized weights is the closed-form maxent solution:
//   J(w~) = (B - A) sum_i w~_i d_i - (1/beta) H(w~).
inline double maxent_objective(const std::vector<double>& normalized,
                               const std::vector<double>& d, double beta,
                               const nonxcrc::RiskSpec& spec) {
    double gap = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) gap += normalized[i] * d[i];
    gap *= spec.range();
    double entropy = 0.0;
    for (double w : normalized) {
        if (w > 0.0) entropy -= w * std::log(w);
    }
    return gap - entropy / beta;
}

// Electricity-style series: four smooth features in [0,1], a linear target
// whose coefficients drift across the middle of the range while the noise
// level rises, mimicking the noisy mid-region of the real transfer data.
inline std::vector<nonxcrc::ElecRecord> make_elec_fixture(std::size_t n,
                                                          std::uint64_t seed) {
    nonxcrc::Rng rng(seed);
    std::vector<nonxcrc::ElecRecord> records(n);
    double state[4] = {0.5, 0.5, 0.5, 0.5};
    const double theta_a[4] = {0.35, 0.15, -0.25, 0.10};
    const double theta_b[4] = {-0.15, 0.40, 0.25, -0.30};
    const double bias_a = 0.30;
    const double bias_b = 0.35;
    for (std::size_t t = 0; t < n; ++t) {
        const double u = static_cast<double>(t) / static_cast<double>(n - 1);
        double x[4];
        for (int j = 0; j < 4; ++j) {
            state[j] = 0.5 + 0.85 * (state[j] - 0.5) + 0.06 * rng.gaussian();
            x[j] = std::clamp(state[j], 0.0, 1.0);
        }
        double mix = 0.0;
        if (u >= 0.65) {
            mix = 1.0;
        } else if (u > 0.35) {
            mix = (u - 0.35) / 0.30;
        }
        double sigma = 0.03;
        if (u > 0.38 && u < 0.62) sigma += 0.09;
        double y = (1.0 - mix) * bias_a + mix * bias_b;
        for (int j = 0; j < 4; ++j) {
            y += ((1.0 - mix) * theta_a[j] + mix * theta_b[j]) * x[j];
        }
        y += sigma * rng.gaussian();
        records[t] = nonxcrc::ElecRecord{x[0], x[1], x[2], x[3], std::clamp(y, 0.0, 1.0)};
    }
    return records;
}

inline void write_elec_csv(const std::string& path,
                           const std::vector<nonxcrc::ElecRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    out << "nswprice,vicprice,nswdemand,vicdemand,transfer\n";
    out.precision(17);
    for (const auto& r : records) {
        out << r.nswprice << ',' << r.vicprice << ',' << r.nswdemand << ',' << r.vicdemand
            << ',' << r.transfer << '\n';
    }
}

inline std::vector<nonxcrc::TracePoint> read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_trace_csv: cannot open " + path);
    std::vector<nonxcrc::TracePoint> out;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        nonxcrc::TracePoint tp;
        std::getline(ss, field, ',');
        tp.trial = std::stol(field);
        std::getline(ss, field, ',');
        tp.timestep = std::stol(field);
        std::getline(ss, field, ',');
        const auto method = nonxcrc::method_from_name(field);
        if (!method) throw std::runtime_error("read_trace_csv: unknown method " + field);
        tp.method = *method;
        std::getline(ss, field, ',');
        tp.lambda_hat = std::stod(field);
        std::getline(ss, field, ',');
        tp.test_loss = std::stod(field);
        if (std::getline(ss, field, ',') && !field.empty()) {
            tp.set_size = std::stod(field);
        }
        out.push_back(tp);
    }
    return out;
}

}  // namespace testsupport
