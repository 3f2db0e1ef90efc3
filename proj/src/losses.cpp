#include "nonxcrc/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace nonxcrc {

namespace {

bool is_integral(double x) { return std::abs(x - std::round(x)) <= 1e-9; }

// Label order for top_k: descending score, ties by lower index.
std::vector<std::size_t> rank_order(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

std::vector<std::size_t> threshold_set(const std::vector<double>& scores, double lambda,
                                       SetMode mode) {
    std::vector<std::size_t> out;
    switch (mode) {
        case SetMode::one_minus_lambda:
            for (std::size_t m = 0; m < scores.size(); ++m) {
                if (scores[m] >= 1.0 - lambda) out.push_back(m);
            }
            break;
        case SetMode::neg_lambda:
            for (std::size_t m = 0; m < scores.size(); ++m) {
                if (scores[m] >= -lambda) out.push_back(m);
            }
            break;
        case SetMode::top_k: {
            if (lambda < 0.0 || !is_integral(lambda) ||
                lambda > static_cast<double>(scores.size())) {
                throw std::invalid_argument(
                    "threshold_set: top_k lambda must be an integer in [0, #scores]");
            }
            const auto k = static_cast<std::size_t>(std::llround(lambda));
            const auto order = rank_order(scores);
            out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
            std::sort(out.begin(), out.end());
            break;
        }
    }
    return out;
}

double fnr_loss(const std::vector<std::size_t>& gold, const std::vector<std::size_t>& predicted) {
    if (gold.empty()) {
        throw std::invalid_argument("fnr_loss: gold set must be nonempty");
    }
    std::size_t hit = 0;
    for (std::size_t g : gold) {
        if (std::find(predicted.begin(), predicted.end(), g) != predicted.end()) ++hit;
    }
    return 1.0 - static_cast<double>(hit) / static_cast<double>(gold.size());
}

double insensitive_abs_loss(double prediction, double target, double lambda) {
    const double residual = std::abs(prediction - target);
    return std::max(0.0, residual - lambda);
}

TokenSeq normalize_tokens(std::string_view text) {
    TokenSeq tokens;
    std::string current;
    for (char ch : text) {
        const auto uc = static_cast<unsigned char>(ch);
        if (std::isspace(uc)) {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
        } else if (!std::ispunct(uc)) {
            current.push_back(static_cast<char>(std::tolower(uc)));
        }
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

double token_f1(const TokenSeq& prediction, const TokenSeq& gold) {
    if (prediction.empty() && gold.empty()) return 1.0;
    if (prediction.empty() || gold.empty()) return 0.0;
    std::unordered_map<std::string, long> counts;
    for (const auto& t : gold) ++counts[t];
    long overlap = 0;
    for (const auto& t : prediction) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    return 2.0 * static_cast<double>(overlap) /
           static_cast<double>(prediction.size() + gold.size());
}

double token_f1(std::string_view prediction, std::string_view gold) {
    return token_f1(normalize_tokens(prediction), normalize_tokens(gold));
}

double best_f1_loss(const std::vector<std::string>& candidates,
                    const std::vector<std::string>& golds) {
    if (golds.empty()) {
        throw std::invalid_argument("best_f1_loss: golds must be nonempty");
    }
    std::vector<TokenSeq> gold_tokens;
    gold_tokens.reserve(golds.size());
    for (const auto& g : golds) gold_tokens.push_back(normalize_tokens(g));

    double best = 0.0;
    for (const auto& c : candidates) {
        const TokenSeq ct = normalize_tokens(c);
        for (const auto& gt : gold_tokens) {
            best = std::max(best, token_f1(ct, gt));
        }
    }
    if (candidates.empty()) return 1.0;
    return 1.0 - best;
}

double miscoverage_loss(std::size_t gold, const std::vector<std::size_t>& predicted) {
    const bool covered = std::find(predicted.begin(), predicted.end(), gold) != predicted.end();
    return covered ? 0.0 : 1.0;
}

DiscreteDistribution::DiscreteDistribution(std::vector<double> probabilities)
    : probs_(std::move(probabilities)) {
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0)) {
            throw std::invalid_argument("DiscreteDistribution: negative probability");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("DiscreteDistribution: probabilities must sum to 1");
    }
}

double tv_distance(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("tv_distance: support sizes differ");
    }
    double l1 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        l1 += std::abs(p.probabilities()[i] - q.probabilities()[i]);
    }
    return 0.5 * l1;
}

LossProfile fnr_profile(const std::vector<double>& scores, const std::vector<std::size_t>& gold,
                        const LambdaGrid& grid, SetMode mode) {
    if (gold.empty()) {
        throw std::invalid_argument("fnr_profile: gold set must be nonempty");
    }
    // Entry point of each gold label along the grid: the smallest lambda at
    // which it joins the set. The miss count at lambda is then a sweep.
    std::vector<double> entry;
    entry.reserve(gold.size());
    switch (mode) {
        case SetMode::one_minus_lambda:
            for (std::size_t g : gold) entry.push_back(1.0 - scores[g]);
            break;
        case SetMode::neg_lambda:
            for (std::size_t g : gold) entry.push_back(-scores[g]);
            break;
        case SetMode::top_k: {
            const auto order = rank_order(scores);
            std::vector<double> rank(scores.size());
            for (std::size_t pos = 0; pos < order.size(); ++pos) {
                rank[order[pos]] = static_cast<double>(pos + 1);
            }
            for (std::size_t g : gold) entry.push_back(rank[g]);
            break;
        }
    }
    std::sort(entry.begin(), entry.end());

    LossProfile profile(grid.size());
    std::size_t in_set = 0;
    const double denom = static_cast<double>(gold.size());
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        while (in_set < entry.size() && entry[in_set] <= grid[gi]) ++in_set;
        profile[gi] = static_cast<double>(entry.size() - in_set) / denom;
    }
    return profile;
}

LossProfile best_f1_profile(const std::vector<double>& candidate_scores,
                            const std::vector<double>& candidate_best_f1,
                            const LambdaGrid& grid) {
    if (candidate_scores.size() != candidate_best_f1.size()) {
        throw std::invalid_argument("best_f1_profile: size mismatch");
    }
    // Candidates sorted by entry lambda; running max of best F1 as the set grows.
    std::vector<std::size_t> order(candidate_scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return -candidate_scores[a] < -candidate_scores[b];
    });

    LossProfile profile(grid.size());
    double best = 0.0;
    std::size_t next = 0;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        while (next < order.size() && -candidate_scores[order[next]] <= grid[gi]) {
            best = std::max(best, candidate_best_f1[order[next]]);
            ++next;
        }
        profile[gi] = (next == 0) ? 1.0 : 1.0 - best;
    }
    return profile;
}

LossProfile insensitive_profile(double prediction, double target, const LambdaGrid& grid) {
    LossProfile profile(grid.size());
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        profile[gi] = insensitive_abs_loss(prediction, target, grid[gi]);
    }
    return profile;
}

}  // namespace nonxcrc
