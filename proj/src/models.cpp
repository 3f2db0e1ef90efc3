#include "nonxcrc/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nonxcrc {

namespace {

double sigmoid(double z) {
    // clamped so the result stays strictly inside (0,1)
    z = std::clamp(z, -36.0, 36.0);
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double u) {
    if (u > 30.0) return u;
    if (u < -30.0) return std::exp(u);
    return std::log1p(std::exp(u));
}

// Regularized negative log-likelihood and gradient for one label.
// theta has dim+1 entries, intercept last and unregularized.
struct LogisticProblem {
    const Matrix& x;
    const std::vector<double>& y;  // +-1
    double l2;

    std::size_t dim() const { return x.cols(); }

    double margin(const std::vector<double>& theta, std::size_t i) const {
        const double* row = x.row(i);
        double z = theta[dim()];
        for (std::size_t j = 0; j < dim(); ++j) z += theta[j] * row[j];
        return z;
    }

    double value(const std::vector<double>& theta) const {
        const std::size_t n = x.rows();
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += softplus(-y[i] * margin(theta, i));
        }
        total /= static_cast<double>(n);
        for (std::size_t j = 0; j < dim(); ++j) total += 0.5 * l2 * theta[j] * theta[j];
        return total;
    }

    void gradient(const std::vector<double>& theta, std::vector<double>& g,
                  std::vector<double>& margins) const {
        const std::size_t n = x.rows();
        const std::size_t d = dim();
        std::fill(g.begin(), g.end(), 0.0);
        margins.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = margin(theta, i);
            margins[i] = z;
            const double coef = -y[i] * sigmoid(-y[i] * z);
            const double* row = x.row(i);
            for (std::size_t j = 0; j < d; ++j) g[j] += coef * row[j];
            g[d] += coef;
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j <= d; ++j) g[j] *= inv_n;
        for (std::size_t j = 0; j < d; ++j) g[j] += l2 * theta[j];
    }
};

// Damped Newton step: solve (Hessian + jitter) delta = gradient.
std::vector<double> newton_direction(const LogisticProblem& prob,
                                     const std::vector<double>& margins,
                                     const std::vector<double>& g) {
    const std::size_t n = prob.x.rows();
    const std::size_t d = prob.dim();
    Matrix h(d + 1, d + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = sigmoid(margins[i]);
        const double w = p * (1.0 - p);
        const double* row = prob.x.row(i);
        for (std::size_t a = 0; a <= d; ++a) {
            const double xa = (a == d) ? 1.0 : row[a];
            for (std::size_t b = a; b <= d; ++b) {
                const double xb = (b == d) ? 1.0 : row[b];
                h(a, b) += w * xa * xb;
            }
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t a = 0; a <= d; ++a) {
        for (std::size_t b = a; b <= d; ++b) {
            h(a, b) *= inv_n;
            h(b, a) = h(a, b);
        }
    }
    for (std::size_t j = 0; j < d; ++j) h(j, j) += prob.l2;

    std::vector<double> delta;
    double jitter = 0.0;
    while (!cholesky_solve(h, g, delta)) {
        jitter = (jitter == 0.0) ? 1e-10 : jitter * 100.0;
        for (std::size_t j = 0; j <= d; ++j) h(j, j) += jitter;
        if (jitter > 1.0) {
            delta = g;  // last resort: gradient step
            break;
        }
    }
    return delta;
}

LinearModel fit_one_logistic(const Matrix& x, const std::vector<double>& y,
                             const LogisticFitConfig& config, const LinearModel* warm) {
    const std::size_t d = x.cols();
    LogisticProblem prob{x, y, config.l2};
    std::vector<double> theta(d + 1, 0.0);
    if (warm != nullptr && warm->coefficients.size() == d) {
        std::copy(warm->coefficients.begin(), warm->coefficients.end(), theta.begin());
        theta[d] = warm->intercept;
    }

    std::vector<double> g(d + 1);
    std::vector<double> margins;
    double f = prob.value(theta);
    for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
        prob.gradient(theta, g, margins);
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax <= config.grad_tol) break;

        const std::vector<double> delta = newton_direction(prob, margins, g);
        double descent = 0.0;
        for (std::size_t j = 0; j <= d; ++j) descent += g[j] * delta[j];
        if (descent <= 0.0) break;  // numerically flat

        double step = 1.0;
        std::vector<double> candidate(d + 1);
        for (int halvings = 0; halvings < 40; ++halvings) {
            for (std::size_t j = 0; j <= d; ++j) candidate[j] = theta[j] - step * delta[j];
            const double fc = prob.value(candidate);
            if (fc <= f - 1e-4 * step * descent) {
                theta.swap(candidate);
                f = fc;
                break;
            }
            step *= 0.5;
        }
    }

    LinearModel model;
    model.coefficients.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
    model.intercept = theta[d];
    return model;
}

}  // namespace

double LinearModel::predict(const double* x, std::size_t dim) const {
    double z = intercept;
    for (std::size_t j = 0; j < dim && j < coefficients.size(); ++j) z += coefficients[j] * x[j];
    return z;
}

double LinearModel::predict(const std::vector<double>& x) const {
    return predict(x.data(), x.size());
}

std::vector<double> MultiLabelLogistic::predict_proba(const double* x, std::size_t dim) const {
    std::vector<double> probs(per_label.size());
    for (std::size_t m = 0; m < per_label.size(); ++m) {
        probs[m] = sigmoid(per_label[m].predict(x, dim));
    }
    return probs;
}

std::vector<double> MultiLabelLogistic::predict_proba(const std::vector<double>& x) const {
    return predict_proba(x.data(), x.size());
}

MultiLabelLogistic fit_logistic(const Matrix& features, const Matrix& labels,
                                const LogisticFitConfig& config) {
    if (features.rows() < 2) {
        throw std::invalid_argument("fit_logistic: need at least two examples");
    }
    if (labels.rows() != features.rows()) {
        throw std::invalid_argument("fit_logistic: feature/label row mismatch");
    }
    const std::size_t n = features.rows();
    const std::size_t m_labels = labels.cols();
    if (m_labels == 0) {
        throw std::invalid_argument("fit_logistic: need at least one label column");
    }

    MultiLabelLogistic out;
    out.per_label.resize(m_labels);
    std::vector<double> y(n);
    for (std::size_t m = 0; m < m_labels; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = labels(i, m);
            if (v != 1.0 && v != -1.0) {
                throw std::invalid_argument("fit_logistic: labels must be +-1");
            }
            y[i] = v;
        }
        const LinearModel* warm = nullptr;
        if (config.warm_start != nullptr && config.warm_start->n_labels() == m_labels) {
            warm = &config.warm_start->per_label[m];
        }
        out.per_label[m] = fit_one_logistic(features, y, config, warm);
    }
    return out;
}

LinearModel fit_least_squares(const Matrix& features, const std::vector<double>& targets,
                              const std::vector<double>* sample_weights) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    if (targets.size() != n) {
        throw std::invalid_argument("fit_least_squares: feature/target row mismatch");
    }
    if (sample_weights != nullptr) {
        if (sample_weights->size() != n) {
            throw std::invalid_argument("fit_least_squares: weight length mismatch");
        }
        for (double w : *sample_weights) {
            if (!(w >= 0.0)) {
                throw std::invalid_argument("fit_least_squares: negative sample weight");
            }
        }
    }

    // Normal equations on [X 1].
    Matrix gram(d + 1, d + 1);
    std::vector<double> rhs(d + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (sample_weights != nullptr) ? (*sample_weights)[i] : 1.0;
        if (t == 0.0) continue;
        const double* row = features.row(i);
        for (std::size_t a = 0; a <= d; ++a) {
            const double xa = (a == d) ? 1.0 : row[a];
            rhs[a] += t * xa * targets[i];
            for (std::size_t b = a; b <= d; ++b) {
                const double xb = (b == d) ? 1.0 : row[b];
                gram(a, b) += t * xa * xb;
            }
        }
    }
    for (std::size_t a = 0; a <= d; ++a) {
        for (std::size_t b = a; b <= d; ++b) gram(b, a) = gram(a, b);
    }

    std::vector<double> beta;
    if (!cholesky_solve(gram, rhs, beta)) {
        double ridge = 1e-8;
        Matrix regularized = gram;
        for (std::size_t j = 0; j <= d; ++j) regularized(j, j) += ridge;
        while (!cholesky_solve(regularized, rhs, beta)) {
            ridge *= 10.0;
            regularized = gram;
            for (std::size_t j = 0; j <= d; ++j) regularized(j, j) += ridge;
        }
    }

    LinearModel model;
    model.coefficients.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(d));
    model.intercept = beta[d];
    return model;
}

}  // namespace nonxcrc
