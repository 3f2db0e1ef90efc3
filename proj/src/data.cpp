#include "nonxcrc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nonxcrc/losses.hpp"
#include "nonxcrc/rng.hpp"

namespace nonxcrc {

const char* setting_name(Setting s) {
    switch (s) {
        case Setting::iid: return "iid";
        case Setting::changepoints: return "changepoints";
        case Setting::drift: return "drift";
    }
    return "?";
}

std::vector<std::size_t> gold_indices(const std::vector<int>& labels) {
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < labels.size(); ++m) {
        if (labels[m] > 0) out.push_back(m);
    }
    return out;
}

Matrix rotate_rows(const Matrix& w) {
    const std::size_t m = w.rows();
    Matrix out(m, w.cols());
    for (std::size_t j = 0; j < w.cols(); ++j) {
        out(0, j) = w(m - 1, j);
        for (std::size_t i = 1; i < m; ++i) out(i, j) = w(i - 1, j);
    }
    return out;
}

namespace {

Matrix final_changepoint_matrix(const SyntheticConfig& config) {
    Matrix w = Matrix::identity(config.n_labels);
    for (std::size_t k = 0; k < config.changepoint_steps.size(); ++k) w = rotate_rows(w);
    return w;
}

void validate_changepoints(const SyntheticConfig& config) {
    if (config.setting == Setting::iid) return;  // steps unused
    const auto& steps = config.changepoint_steps;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i] > config.n_points) {
            throw std::invalid_argument("SyntheticConfig: changepoint beyond n_points");
        }
        if (i > 0 && !(steps[i - 1] < steps[i])) {
            throw std::invalid_argument("SyntheticConfig: changepoints must be increasing");
        }
    }
}

}  // namespace

Matrix synthetic_weight_matrix(const SyntheticConfig& config, std::size_t t) {
    validate_changepoints(config);
    switch (config.setting) {
        case Setting::iid:
            return Matrix::identity(config.n_labels);
        case Setting::changepoints: {
            Matrix w = Matrix::identity(config.n_labels);
            for (std::size_t step : config.changepoint_steps) {
                if (t >= step) w = rotate_rows(w);
            }
            return w;
        }
        case Setting::drift: {
            const Matrix w0 = Matrix::identity(config.n_labels);
            const Matrix wn = final_changepoint_matrix(config);
            const double frac =
                static_cast<double>(t) / static_cast<double>(config.n_points);
            Matrix w(config.n_labels, config.n_labels);
            for (std::size_t i = 0; i < w.rows(); ++i) {
                for (std::size_t j = 0; j < w.cols(); ++j) {
                    w(i, j) = (1.0 - frac) * w0(i, j) + frac * wn(i, j);
                }
            }
            return w;
        }
    }
    throw std::invalid_argument("synthetic_weight_matrix: unknown setting");
}

std::vector<SyntheticPoint> generate_synthetic(const SyntheticConfig& config) {
    validate_changepoints(config);
    Rng rng(config.seed);
    const std::size_t m = config.n_labels;

    std::vector<SyntheticPoint> out(config.n_points);
    Matrix w = synthetic_weight_matrix(config, 0);
    for (std::size_t t = 0; t < config.n_points; ++t) {
        // changepoints: refresh only at segment boundaries; drift: every step
        if (config.setting == Setting::drift) {
            w = synthetic_weight_matrix(config, t);
        } else if (config.setting == Setting::changepoints &&
                   std::find(config.changepoint_steps.begin(), config.changepoint_steps.end(),
                             t) != config.changepoint_steps.end()) {
            w = synthetic_weight_matrix(config, t);
        }

        SyntheticPoint& p = out[t];
        p.x.resize(m);
        for (std::size_t j = 0; j < m; ++j) p.x[j] = rng.gaussian();
        p.labels.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            double z = config.bias;
            for (std::size_t j = 0; j < m; ++j) z += w(i, j) * p.x[j];
            z += config.noise_scale * rng.gaussian();
            p.labels[i] = (z < 0.0) ? -1 : 1;
        }
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (std::isspace(static_cast<unsigned char>(s[b])) != 0)) ++b;
    while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) != 0)) --e;
    return s.substr(b, e - b);
}

double parse_unit_value(const std::string& raw, std::size_t line_no, const std::string& column) {
    const std::string text = trim(raw);
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw IngestError("row " + std::to_string(line_no) + ", column " + column +
                          ": cannot parse value '" + text + "'");
    }
    if (!(value >= 0.0 && value <= 1.0)) {
        throw IngestError("row " + std::to_string(line_no) + ", column " + column +
                          ": value " + text + " outside [0,1]");
    }
    return value;
}

}  // namespace

std::vector<ElecRecord> load_elec_csv(const std::string& path, bool permute,
                                      std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError("cannot open CSV file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw IngestError(path + ": empty file, header expected");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_csv_line(line);
    const std::vector<std::string> needed = {"nswprice", "vicprice", "nswdemand", "vicdemand",
                                             "transfer"};
    std::vector<std::size_t> col(needed.size());
    for (std::size_t k = 0; k < needed.size(); ++k) {
        auto it = std::find_if(header.begin(), header.end(),
                               [&](const std::string& h) { return trim(h) == needed[k]; });
        if (it == header.end()) {
            throw IngestError(path + ": header missing column '" + needed[k] + "'");
        }
        col[k] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<ElecRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        for (std::size_t k = 0; k < needed.size(); ++k) {
            if (col[k] >= fields.size()) {
                throw IngestError("row " + std::to_string(line_no) + ": missing column '" +
                                  needed[k] + "'");
            }
        }
        ElecRecord r;
        r.nswprice = parse_unit_value(fields[col[0]], line_no, "nswprice");
        r.vicprice = parse_unit_value(fields[col[1]], line_no, "vicprice");
        r.nswdemand = parse_unit_value(fields[col[2]], line_no, "nswdemand");
        r.vicdemand = parse_unit_value(fields[col[3]], line_no, "vicdemand");
        r.transfer = parse_unit_value(fields[col[4]], line_no, "transfer");
        records.push_back(r);
    }

    if (permute) {
        Rng rng(seed);
        rng.shuffle(records);
    }
    return records;
}

std::vector<QaRecord> load_qa_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError("cannot open JSONL file: " + path);
    }
    std::vector<QaRecord> records;
    std::string line;
    std::size_t line_no = 0;
    std::size_t embed_dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IngestError("line " + std::to_string(line_no) + ": invalid JSON (" +
                              e.what() + ")");
        }
        QaRecord rec;
        try {
            rec.id = obj.at("id").get<std::string>();
            rec.question = obj.at("question").get<std::string>();
            rec.embedding = obj.at("embedding").get<std::vector<double>>();
            rec.gold_answers = obj.at("gold_answers").get<std::vector<std::string>>();
            for (const auto& c : obj.at("candidates")) {
                rec.candidates.push_back(
                    QaCandidate{c.at("text").get<std::string>(), c.at("score").get<double>()});
            }
        } catch (const nlohmann::json::exception& e) {
            throw IngestError("line " + std::to_string(line_no) + ": missing or invalid field (" +
                              e.what() + ")");
        }
        if (rec.gold_answers.empty()) {
            throw IngestError("line " + std::to_string(line_no) + ": empty gold_answers");
        }
        if (records.empty()) {
            embed_dim = rec.embedding.size();
        } else if (rec.embedding.size() != embed_dim) {
            throw IngestError("line " + std::to_string(line_no) +
                              ": embedding length mismatch with earlier records");
        }
        std::stable_sort(rec.candidates.begin(), rec.candidates.end(),
                         [](const QaCandidate& a, const QaCandidate& b) {
                             return a.score > b.score;
                         });
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

std::string cluster_token(std::size_t cluster, std::size_t word) {
    return "c" + std::to_string(cluster) + "w" + std::to_string(word);
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

}  // namespace

std::vector<QaRecord> generate_qa_fixture(std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw std::invalid_argument("generate_qa_fixture: n must be >= 1");
    }
    constexpr std::size_t kClusters = 8;
    constexpr std::size_t kHardClusters = 3;  // clusters 0..2 carry deep answers
    constexpr std::size_t kDim = 16;
    constexpr std::size_t kVocab = 40;
    constexpr std::size_t kDistractors = 38;

    Rng rng(seed);

    // Orthonormal cluster centers keep cross-cluster dot products near zero.
    std::vector<std::vector<double>> centers(kClusters, std::vector<double>(kDim));
    for (auto& c : centers) {
        for (double& v : c) v = rng.gaussian();
    }
    for (std::size_t a = 0; a < kClusters; ++a) {
        for (std::size_t b = 0; b < a; ++b) {
            double dot = 0.0;
            for (std::size_t k = 0; k < kDim; ++k) dot += centers[a][k] * centers[b][k];
            for (std::size_t k = 0; k < kDim; ++k) centers[a][k] -= dot * centers[b][k];
        }
        double norm = 0.0;
        for (double v : centers[a]) norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : centers[a]) v /= norm;
    }

    std::vector<QaRecord> records(n);
    for (std::size_t i = 0; i < n; ++i) {
        QaRecord& rec = records[i];
        const std::size_t cluster = static_cast<std::size_t>(rng.below(kClusters));
        const bool hard = cluster < kHardClusters;

        rec.id = "q" + std::to_string(i);

        rec.embedding.resize(kDim);
        double norm = 0.0;
        for (std::size_t k = 0; k < kDim; ++k) {
            rec.embedding[k] = centers[cluster][k] + 0.08 * rng.gaussian();
            norm += rec.embedding[k] * rec.embedding[k];
        }
        norm = std::sqrt(norm);
        for (double& v : rec.embedding) v /= norm;

        // Three-token gold phrase from the cluster's private vocabulary.
        std::vector<std::string> gold_tokens(3);
        for (auto& t : gold_tokens) {
            t = cluster_token(cluster, static_cast<std::size_t>(rng.below(kVocab)));
        }
        const std::string gold = join_tokens(gold_tokens);
        rec.gold_answers.push_back(gold);
        if (rng.uniform01() < 0.3) {
            rec.gold_answers.push_back(join_tokens({gold_tokens[0], gold_tokens[1]}));
        }
        rec.question = "which passage mentions " + gold;

        const bool answerable = rng.uniform01() >= (hard ? 0.45 : 0.2);
        const double gold_depth = hard ? rng.uniform(0.45, 0.60) : rng.uniform(0.06, 0.16);

        auto clamp_score = [](double s) { return std::clamp(s, -0.999, -0.001); };

        if (answerable) {
            rec.candidates.push_back(
                QaCandidate{gold, clamp_score(-gold_depth + 0.01 * rng.uniform01())});
        }
        // A partial-overlap span (token F1 about 4/7) sits near the gold depth,
        // so unanswerable records still have a candidate with F1 >= 0.5.
        {
            std::vector<std::string> part = {gold_tokens[0], gold_tokens[1],
                                             cluster_token(cluster, kVocab + i % 7),
                                             cluster_token(cluster, kVocab + 7 + i % 5)};
            const double depth = gold_depth * rng.uniform(0.85, 1.0);
            rec.candidates.push_back(QaCandidate{join_tokens(part), clamp_score(-depth)});
        }
        for (std::size_t k = 0; k < kDistractors; ++k) {
            std::size_t other = static_cast<std::size_t>(rng.below(kClusters - 1));
            if (other >= cluster) ++other;
            std::vector<std::string> tokens(2 + rng.below(3));
            for (auto& t : tokens) {
                t = cluster_token(other, static_cast<std::size_t>(rng.below(kVocab)));
            }
            rec.candidates.push_back(
                QaCandidate{join_tokens(tokens), clamp_score(-rng.uniform(0.05, 0.999))});
        }
        std::stable_sort(rec.candidates.begin(), rec.candidates.end(),
                         [](const QaCandidate& a, const QaCandidate& b) {
                             return a.score > b.score;
                         });
    }
    return records;
}

}  // namespace nonxcrc
