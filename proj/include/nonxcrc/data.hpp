#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nonxcrc/matrix.hpp"

namespace nonxcrc {

/// Raised by the loaders; the message carries row/line and column context.
class IngestError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Setting { iid, changepoints, drift };

const char* setting_name(Setting s);

struct SyntheticConfig {
    std::size_t n_points = 2000;
    std::size_t n_labels = 10;  // M
    Setting setting = Setting::iid;
    std::vector<std::size_t> changepoint_steps = {500, 1500};
    double noise_scale = 0.1;
    double bias = -0.5;
    std::uint64_t seed = 0;
};

struct SyntheticPoint {
    std::vector<double> x;       // length M
    std::vector<int> labels;     // +-1, length M
};

/// Indices of the +1 labels (the gold set of the FNR loss).
std::vector<std::size_t> gold_indices(const std::vector<int>& labels);

/// Rows shifted down by one, last row wrapping to the top.
Matrix rotate_rows(const Matrix& w);

/// Coefficient matrix in effect at timestep t for the given setting:
/// identity for iid; rotated at each changepoint; entrywise interpolation
/// from the identity to the final changepoint matrix for drift.
Matrix synthetic_weight_matrix(const SyntheticConfig& config, std::size_t t);

/// Multilabel time series Y = sign(W_t X + b + noise_scale * N(0, I)).
/// Deterministic given the seed.
std::vector<SyntheticPoint> generate_synthetic(const SyntheticConfig& config);

struct ElecRecord {
    double nswprice;
    double vicprice;
    double nswdemand;
    double vicdemand;
    double transfer;
};

/// Load the normalized electricity CSV (header must contain nswprice,
/// vicprice, nswdemand, vicdemand, transfer; all values in [0,1]).
/// With permute set, rows are returned in a seeded uniform random order.
std::vector<ElecRecord> load_elec_csv(const std::string& path, bool permute = false,
                                      std::uint64_t seed = 0);

struct QaCandidate {
    std::string text;
    double score;
};

struct QaRecord {
    std::string id;
    std::string question;
    std::vector<double> embedding;
    std::vector<std::string> gold_answers;
    std::vector<QaCandidate> candidates;  // sorted by descending score
};

/// Load QA records from JSONL (one object per line):
/// {"id": str, "question": str, "embedding": [float,...],
///  "gold_answers": [str,...], "candidates": [{"text": str, "score": float},...]}
/// Candidates are re-sorted by descending score if needed.
std::vector<QaRecord> load_qa_jsonl(const std::string& path);

/// Deterministic synthetic QA corpus with cluster-structured embeddings;
/// candidate scores correlate with token overlap against the gold answers,
/// and clusters differ in how deep the scores of the good candidates sit.
std::vector<QaRecord> generate_qa_fixture(std::size_t n, std::uint64_t seed);

}  // namespace nonxcrc
