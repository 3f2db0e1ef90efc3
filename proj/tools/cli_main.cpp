// Command-line front end: the three experiments (synth, elec, qa) plus the
// randomized self-check audits. All trace output is deterministic CSV.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nonxcrc/calibrate.hpp"
#include "nonxcrc/data.hpp"
#include "nonxcrc/harness.hpp"
#include "nonxcrc/losses.hpp"
#include "nonxcrc/parallel.hpp"
#include "nonxcrc/rng.hpp"
#include "nonxcrc/weights.hpp"

namespace {

using namespace nonxcrc;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitAudit = 3;

std::string default_out_path(const std::string& command, const std::string& explicit_path) {
    if (!explicit_path.empty()) return explicit_path;
    const char* dir = std::getenv("NONXCRC_OUT_DIR");
    const std::string base = (dir != nullptr && *dir != '\0') ? std::string(dir) : ".";
    return base + "/" + command + "_trace.csv";
}

struct WeightFlag {
    WeightScheme scheme = WeightScheme::decay;
    double rho = 0.99;
    double beta = 1.0;
};

// --weights uniform | decay:<rho> | maxent:<beta> | similarity
WeightFlag parse_weights_flag(const std::string& text) {
    WeightFlag w;
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (name == "uniform") {
        w.scheme = WeightScheme::uniform;
    } else if (name == "decay") {
        w.scheme = WeightScheme::decay;
        if (!arg.empty()) w.rho = std::stod(arg);
    } else if (name == "maxent") {
        w.scheme = WeightScheme::maxent;
        if (!arg.empty()) w.beta = std::stod(arg);
    } else if (name == "similarity") {
        w.scheme = WeightScheme::similarity;
    } else {
        throw CLI::ValidationError("--weights", "unknown weight scheme '" + text + "'");
    }
    return w;
}

void print_summary(const TrialSummary& summary) {
    std::printf("%-14s %12s %12s %12s %14s\n", "method", "mean_loss", "median_loss",
                "mean_lambda", "mean_set_size");
    for (const auto& [method, ms] : summary.per_method) {
        if (ms.mean_set_size) {
            std::printf("%-14s %12.6f %12.6f %12.6f %14.4f\n", method_name(method),
                        ms.mean_loss, ms.median_loss, ms.mean_lambda, *ms.mean_set_size);
        } else {
            std::printf("%-14s %12.6f %12.6f %12.6f %14s\n", method_name(method),
                        ms.mean_loss, ms.median_loss, ms.mean_lambda, "-");
        }
    }
}

// Per-trial aggregation: mean +- std of the trial means.
void print_trial_spread(const std::vector<TracePoint>& traces) {
    struct Acc {
        double loss = 0.0;
        double size = 0.0;
        std::size_t n = 0;
    };
    std::map<Method, std::map<long, Acc>> per;
    for (const auto& tp : traces) {
        Acc& a = per[tp.method][tp.trial];
        a.loss += tp.test_loss;
        if (tp.set_size) a.size += *tp.set_size;
        ++a.n;
    }
    for (const auto& [method, trials] : per) {
        std::vector<double> losses;
        std::vector<double> sizes;
        for (const auto& [trial, a] : trials) {
            losses.push_back(a.loss / static_cast<double>(a.n));
            sizes.push_back(a.size / static_cast<double>(a.n));
        }
        auto mean_std = [](const std::vector<double>& v) {
            double m = 0.0;
            for (double x : v) m += x;
            m /= static_cast<double>(v.size());
            double s2 = 0.0;
            for (double x : v) s2 += (x - m) * (x - m);
            const double sd = v.size() > 1
                                  ? std::sqrt(s2 / static_cast<double>(v.size() - 1))
                                  : 0.0;
            return std::pair<double, double>(m, sd);
        };
        const auto [lm, ls] = mean_std(losses);
        const auto [sm, ss] = mean_std(sizes);
        std::printf("%-14s risk %.4f +- %.4f   set size %.2f +- %.2f   (%zu trials)\n",
                    method_name(method), lm, ls, sm, ss, losses.size());
    }
}

int cmd_synth(const std::string& setting_flag, double alpha, std::size_t trials,
              std::uint64_t seed, std::size_t n_points, std::size_t labels,
              const std::string& weights_flag, const std::string& set_mode_name,
              const std::string& methods_csv, double tv_eps, const std::string& out_flag,
              int jobs) {
    SynthRunConfig config;
    config.data.n_points = n_points;
    config.data.n_labels = labels;
    if (setting_flag == "iid") {
        config.data.setting = Setting::iid;
    } else if (setting_flag == "changepoints") {
        config.data.setting = Setting::changepoints;
    } else if (setting_flag == "drift") {
        config.data.setting = Setting::drift;
    } else {
        throw CLI::ValidationError("--setting", "must be iid, changepoints, or drift");
    }
    config.spec = RiskSpec(alpha, 0.0, 1.0);
    config.trials = trials;
    config.master_seed = seed;
    config.jobs = jobs;

    LambdaGrid grid = LambdaGrid::uniform(0.0, 1.0, 101);
    if (set_mode_name == "top_k") {
        config.set_mode = SetMode::top_k;
        grid = LambdaGrid::integers(labels);
    } else if (set_mode_name != "threshold") {
        throw CLI::ValidationError("--set-mode", "must be threshold or top_k");
    }

    const WeightFlag wf = parse_weights_flag(weights_flag);
    if (wf.scheme == WeightScheme::similarity) {
        throw CLI::ValidationError("--weights", "similarity weights apply to the qa command");
    }
    std::stringstream methods(methods_csv);
    std::string name;
    while (std::getline(methods, name, ',')) {
        MethodConfig m;
        if (name == "crc") {
            m.method = Method::crc;
            m.scheme = WeightScheme::uniform;
        } else if (name == "nonx_crc") {
            m.method = Method::nonx_crc;
            m.scheme = wf.scheme;
            m.rho = wf.rho;
            m.beta = wf.beta;
            m.tv_epsilon = tv_eps;
        } else {
            throw CLI::ValidationError("--methods", "synth methods are crc, nonx_crc");
        }
        config.protocol.methods.push_back(m);
    }
    if (config.protocol.methods.empty()) {
        throw CLI::ValidationError("--methods", "need at least one method");
    }

    const auto traces = run_synth_experiment(config, grid);
    const std::string out = default_out_path("synth", out_flag);
    write_trace_csv(out, traces);
    std::printf("setting %s, alpha %.3f, %zu trials, %zu points\n",
                setting_name(config.data.setting), alpha, trials, n_points);
    print_summary(summarize(traces));
    std::printf("trace written to %s\n", out.c_str());
    return kExitOk;
}

int cmd_elec(const std::string& csv_path, double alpha, bool permute, std::uint64_t seed,
             const std::string& methods_csv, double rho, std::size_t warmup,
             const std::string& out_flag) {
    ElecRunConfig config;
    config.spec = RiskSpec(alpha, 0.0, 1.0);
    config.protocol.warmup = warmup;

    std::stringstream methods(methods_csv);
    std::string name;
    while (std::getline(methods, name, ',')) {
        MethodConfig m;
        m.rho = rho;
        if (name == "crc_ls") {
            m.method = Method::crc;
            m.scheme = WeightScheme::uniform;
        } else if (name == "nonx_ls") {
            m.method = Method::nonx_crc;
            m.scheme = WeightScheme::decay;
        } else if (name == "nonx_wls") {
            m.method = Method::nonx_crc_wls;
            m.scheme = WeightScheme::decay;
            m.weighted_fit = true;
        } else {
            throw CLI::ValidationError("--methods",
                                       "elec methods are crc_ls, nonx_ls, nonx_wls");
        }
        config.protocol.methods.push_back(m);
    }
    if (config.protocol.methods.empty()) {
        throw CLI::ValidationError("--methods", "need at least one method");
    }

    const auto records = load_elec_csv(csv_path, permute, seed);
    const LambdaGrid grid = LambdaGrid::uniform(0.0, 1.0, 101);
    const auto traces = run_elec_experiment(records, config, grid);
    const std::string out = default_out_path("elec", out_flag);
    write_trace_csv(out, traces);
    std::printf("%zu records%s, alpha %.3f\n", records.size(), permute ? " (permuted)" : "",
                alpha);
    print_summary(summarize(traces));
    std::printf("trace written to %s\n", out.c_str());
    return kExitOk;
}

int cmd_qa(const std::string& jsonl_path, std::size_t fixture_n,
           const std::string& dump_fixture, std::size_t n_calib, std::size_t trials,
           double alpha, const std::string& mode, std::uint64_t seed,
           const std::string& out_flag, int jobs) {
    std::vector<QaRecord> records;
    if (!jsonl_path.empty()) {
        records = load_qa_jsonl(jsonl_path);
    } else if (fixture_n > 0) {
        records = generate_qa_fixture(fixture_n, seed);
    } else {
        throw CLI::ValidationError("--jsonl", "provide --jsonl PATH or --fixture N");
    }
    if (!dump_fixture.empty()) {
        std::ofstream dump(dump_fixture, std::ios::binary);
        if (!dump) throw IngestError("cannot open fixture output: " + dump_fixture);
        for (const auto& rec : records) {
            nlohmann::json obj;
            obj["id"] = rec.id;
            obj["question"] = rec.question;
            obj["embedding"] = rec.embedding;
            obj["gold_answers"] = rec.gold_answers;
            auto& cands = obj["candidates"] = nlohmann::json::array();
            for (const auto& c : rec.candidates) {
                cands.push_back({{"text", c.text}, {"score", c.score}});
            }
            dump << obj.dump() << '\n';
        }
    }

    QaRunConfig config;
    config.n_calib = n_calib;
    config.trials = trials;
    config.spec = RiskSpec(alpha, 0.0, 1.0);
    config.master_seed = seed;
    config.jobs = jobs;
    const LambdaGrid grid = LambdaGrid::uniform(0.0, 1.0, 101);

    std::vector<TracePoint> traces;
    std::vector<std::string> modes;
    if (mode == "both") {
        modes = {"uniform", "similarity"};
    } else if (mode == "uniform" || mode == "similarity") {
        modes = {mode};
    } else {
        throw CLI::ValidationError("--weight-mode", "must be uniform, similarity, or both");
    }
    for (const auto& m : modes) {
        config.weight_mode =
            (m == "uniform") ? WeightScheme::uniform : WeightScheme::similarity;
        auto part = run_qa_trials(records, config, grid);
        traces.insert(traces.end(), part.begin(), part.end());
    }

    const std::string out = default_out_path("qa", out_flag);
    write_trace_csv(out, traces);
    std::printf("%zu records, %zu calibration, %zu trials, alpha %.3f\n", records.size(),
                n_calib, trials, alpha);
    print_trial_spread(traces);
    print_summary(summarize(traces));
    std::printf("trace written to %s\n", out.c_str());
    return kExitOk;
}

// Randomized audits: the bounded-expectation inequality and the
// uniform-weight equivalence of the two selection rules.
int cmd_check(std::size_t draws, std::size_t batches, std::uint64_t seed) {
    Rng rng(seed);
    std::size_t lemma_violations = 0;
    for (std::size_t rep = 0; rep < draws; ++rep) {
        const std::size_t s = 1 + rng.below(10);
        std::vector<double> p(s), q(s), f(s);
        double ps = 0.0, qs = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            p[i] = rng.uniform01();
            q[i] = rng.uniform01();
            ps += p[i];
            qs += q[i];
        }
        if (ps == 0.0 || qs == 0.0) continue;
        for (std::size_t i = 0; i < s; ++i) {
            p[i] /= ps;
            q[i] /= qs;
        }
        const double a = rng.uniform(-5.0, 5.0);
        const double b = a + rng.uniform(0.1, 10.0);
        for (auto& v : f) v = rng.uniform(a, b);
        double ep = 0.0, eq = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            ep += p[i] * f[i];
            eq += q[i] * f[i];
        }
        const double tv = tv_distance(DiscreteDistribution(p), DiscreteDistribution(q));
        if (std::abs(ep - eq) > (b - a) * tv + 1e-12) ++lemma_violations;
    }
    std::printf("expectation-bound audit: %zu draws, %zu violations\n", draws,
                lemma_violations);

    std::size_t equivalence_mismatches = 0;
    for (std::size_t rep = 0; rep < batches; ++rep) {
        const RiskSpec spec(rng.uniform01(), 0.0, 1.0);
        const std::size_t g = 1 + rng.below(25);
        std::vector<double> vals(g);
        double x = rng.uniform01();
        for (auto& v : vals) {
            v = x;
            x += 0.01 + rng.uniform01();
        }
        const LambdaGrid grid(vals);
        const std::size_t n = rng.below(30);
        std::vector<LossProfile> profiles(n);
        for (auto& pr : profiles) {
            pr.resize(g);
            for (auto& v : pr) v = rng.uniform01();
            std::sort(pr.begin(), pr.end(), std::greater<double>());
        }
        const CalibrationBatch batch(std::move(profiles), grid, spec);
        const LambdaHat a = crc_lambda_hat(batch);
        const LambdaHat b = nonx_lambda_hat(batch, uniform_weights(n));
        if (a.value != b.value || a.index != b.index || a.infeasible != b.infeasible) {
            ++equivalence_mismatches;
        }
    }
    std::printf("uniform-weight equivalence audit: %zu batches, %zu mismatches\n", batches,
                equivalence_mismatches);

    if (lemma_violations > 0 || equivalence_mismatches > 0) {
        std::printf("FAIL\n");
        return kExitAudit;
    }
    std::printf("PASS\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"non-exchangeable conformal risk control experiments"};
    app.require_subcommand(1);

    // synth
    std::string synth_setting = "iid";
    double synth_alpha = 0.2;
    std::size_t synth_trials = 10;
    std::uint64_t synth_seed = 0;
    std::size_t synth_points = 2000;
    std::size_t synth_labels = 10;
    std::string synth_weights = "decay:0.99";
    std::string synth_set_mode = "threshold";
    std::string synth_methods = "crc,nonx_crc";
    double synth_tv_eps = 0.01;
    std::string synth_out;
    int synth_jobs = hardware_jobs();
    auto* synth = app.add_subcommand("synth", "multilabel FNR control on synthetic series");
    synth->add_option("--setting", synth_setting, "iid | changepoints | drift");
    synth->add_option("--alpha", synth_alpha, "target risk level");
    synth->add_option("--trials", synth_trials)->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed);
    synth->add_option("--n-points", synth_points)->check(CLI::PositiveNumber);
    synth->add_option("--labels", synth_labels)->check(CLI::PositiveNumber);
    synth->add_option("--weights", synth_weights,
                      "uniform | decay:<rho> | maxent:<beta> (non-X methods)");
    synth->add_option("--set-mode", synth_set_mode, "threshold | top_k");
    synth->add_option("--methods", synth_methods, "comma list: crc,nonx_crc");
    synth->add_option("--tv-eps", synth_tv_eps, "TV slope for maxent weights");
    synth->add_option("--out", synth_out, "trace CSV path");
    synth->add_option("--jobs", synth_jobs, "parallel trial workers");

    // elec
    std::string elec_csv;
    double elec_alpha = 0.05;
    bool elec_permute = false;
    std::uint64_t elec_seed = 0;
    std::string elec_methods = "crc_ls,nonx_ls,nonx_wls";
    double elec_rho = 0.99;
    std::size_t elec_warmup = 200;
    std::string elec_out;
    auto* elec = app.add_subcommand("elec", "interval-width control on electricity data");
    elec->add_option("--csv", elec_csv, "normalized electricity CSV")->required();
    elec->add_option("--alpha", elec_alpha);
    elec->add_flag("--permute", elec_permute, "shuffle rows (exchangeable control)");
    elec->add_option("--seed", elec_seed);
    elec->add_option("--methods", elec_methods, "comma list: crc_ls,nonx_ls,nonx_wls");
    elec->add_option("--rho", elec_rho, "decay rate for non-X weights");
    elec->add_option("--warmup", elec_warmup);
    elec->add_option("--out", elec_out, "trace CSV path");

    // qa
    std::string qa_jsonl;
    std::size_t qa_fixture = 0;
    std::string qa_dump;
    std::size_t qa_calib = 500;
    std::size_t qa_trials = 50;
    double qa_alpha = 0.3;
    std::string qa_mode = "both";
    std::uint64_t qa_seed = 0;
    std::string qa_out;
    int qa_jobs = hardware_jobs();
    auto* qa = app.add_subcommand("qa", "best-F1 control on question answering candidates");
    qa->add_option("--jsonl", qa_jsonl, "QA records (JSONL)");
    qa->add_option("--fixture", qa_fixture, "generate a synthetic fixture of N records");
    qa->add_option("--dump-fixture", qa_dump, "also write the records as JSONL");
    qa->add_option("--n-calib", qa_calib)->check(CLI::PositiveNumber);
    qa->add_option("--trials", qa_trials)->check(CLI::PositiveNumber);
    qa->add_option("--alpha", qa_alpha);
    qa->add_option("--weight-mode", qa_mode, "uniform | similarity | both");
    qa->add_option("--seed", qa_seed);
    qa->add_option("--out", qa_out, "trace CSV path");
    qa->add_option("--jobs", qa_jobs, "parallel trial workers");

    // check
    std::size_t check_draws = 10000;
    std::size_t check_batches = 1000;
    std::uint64_t check_seed = 0;
    auto* check = app.add_subcommand("check", "randomized property audits");
    check->add_option("--draws", check_draws)->check(CLI::PositiveNumber);
    check->add_option("--batches", check_batches)->check(CLI::PositiveNumber);
    check->add_option("--seed", check_seed);

    try {
        app.parse(argc, argv);
        if (synth->parsed()) {
            return cmd_synth(synth_setting, synth_alpha, synth_trials, synth_seed,
                             synth_points, synth_labels, synth_weights, synth_set_mode,
                             synth_methods, synth_tv_eps, synth_out, synth_jobs);
        }
        if (elec->parsed()) {
            return cmd_elec(elec_csv, elec_alpha, elec_permute, elec_seed, elec_methods,
                            elec_rho, elec_warmup, elec_out);
        }
        if (qa->parsed()) {
            return cmd_qa(qa_jsonl, qa_fixture, qa_dump, qa_calib, qa_trials, qa_alpha,
                          qa_mode, qa_seed, qa_out, qa_jobs);
        }
        if (check->parsed()) {
            return cmd_check(check_draws, check_batches, check_seed);
        }
        return kExitUsage;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const IngestError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
