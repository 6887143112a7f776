#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fblgp/errors.hpp"
#include "fblgp/numerics.hpp"

namespace fblgp {

enum class LengthscaleMode { shared, per_dim };

/// Squared-exponential hyperparameters. A single length scale is shared
/// across input dimensions; d length scales give one per dimension.
struct Hyperparams {
    double sigma_f = 1.0;
    Vector lengthscales = Vector::Ones(1);
    double sigma_n = 0.1;

    LengthscaleMode mode() const noexcept {
        return lengthscales.size() == 1 ? LengthscaleMode::shared : LengthscaleMode::per_dim;
    }

    /// Packed as [log σ_f, log l_1 … log l_k, log σ_n].
    Vector to_log() const {
        Vector v(lengthscales.size() + 2);
        v(0) = std::log(sigma_f);
        v.segment(1, lengthscales.size()) = lengthscales.array().log().matrix();
        v(v.size() - 1) = std::log(sigma_n);
        return v;
    }

    static Hyperparams from_log(const Vector& v) {
        Hyperparams h;
        h.sigma_f = std::exp(v(0));
        h.lengthscales = v.segment(1, v.size() - 2).array().exp().matrix();
        h.sigma_n = std::exp(v(v.size() - 1));
        return h;
    }

    void validate(Eigen::Index input_dim) const {
        if (!(sigma_f > 0.0) || !std::isfinite(sigma_f)) throw InvalidArgument("Hyperparams: sigma_f must be > 0");
        if (!(sigma_n >= 0.0) || !std::isfinite(sigma_n)) throw InvalidArgument("Hyperparams: sigma_n must be >= 0");
        if (lengthscales.size() != 1 && lengthscales.size() != input_dim)
            throw InvalidArgument("Hyperparams: need 1 or input_dim length scales");
        if (!lengthscales.allFinite() || (lengthscales.array() <= 0.0).any())
            throw InvalidArgument("Hyperparams: length scales must be > 0");
    }
};

namespace detail {

inline double scaled_sq_distance(const Vector& a, const Vector& b, const Vector& lengthscales) {
    if (lengthscales.size() == 1) return (a - b).squaredNorm() / (lengthscales(0) * lengthscales(0));
    return (a - b).cwiseQuotient(lengthscales).squaredNorm();
}

}  // namespace detail

/// k(a, b) = σ_f² exp(−‖a − b‖² / (2 l²)), with per-dimension scaling when
/// several length scales are given.
inline double kernel(const Vector& a, const Vector& b, const Hyperparams& h) {
    if (a.size() != b.size()) throw InvalidArgument("kernel: dimension mismatch");
    return h.sigma_f * h.sigma_f * std::exp(-0.5 * detail::scaled_sq_distance(a, b, h.lengthscales));
}

/// Gram matrix over the columns of x.
inline Matrix kernel_matrix(const Matrix& x, const Hyperparams& h) {
    const Eigen::Index n = x.cols();
    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = h.sigma_f * h.sigma_f;
        for (Eigen::Index j = 0; j < i; ++j) k(i, j) = k(j, i) = kernel(x.col(i), x.col(j), h);
    }
    return k;
}

/// Diagonal added to the kernel matrix: σ_n² plus relative jitter of the mean diagonal.
inline double noise_diagonal(const Hyperparams& h, double jitter_scale) {
    const double sf2 = h.sigma_f * h.sigma_f;
    const double sn2 = h.sigma_n * h.sigma_n;
    return sn2 + jitter_scale * (sf2 + sn2);
}

struct LogLikelihood {
    double value = 0.0;
    Vector gradient;  // over to_log() coordinates
};

/// log p(Y | X, h) = −½ Yᵀ K_y⁻¹ Y − ½ log det K_y − (n/2) log 2π.
/// Columns of x are the inputs.
inline double log_marginal_likelihood_value(const Matrix& x, const Vector& y, const Hyperparams& h,
                                            double jitter_scale = kDefaultJitterScale) {
    const Eigen::Index n = x.cols();
    Matrix k = kernel_matrix(x, h);
    k.diagonal().array() += noise_diagonal(h, jitter_scale);
    const CholeskyFactor chol = cholesky(k);
    const Vector half = chol.solve_lower(y);
    return -0.5 * half.squaredNorm() - 0.5 * chol.log_determinant() -
           0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

/// Value and analytic gradient with respect to (log σ_f, log l…, log σ_n).
inline LogLikelihood log_marginal_likelihood(const Matrix& x, const Vector& y, const Hyperparams& h,
                                             double jitter_scale = kDefaultJitterScale) {
    const Eigen::Index n = x.cols();
    const Eigen::Index num_ls = h.lengthscales.size();
    const Matrix k_signal = kernel_matrix(x, h);
    Matrix k_y = k_signal;
    k_y.diagonal().array() += noise_diagonal(h, jitter_scale);

    const CholeskyFactor chol = cholesky(k_y);
    const Vector alpha = chol.solve(y);

    LogLikelihood out;
    out.value = -0.5 * y.dot(alpha) - 0.5 * chol.log_determinant() -
                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    // dL/dθ = ½ tr(W dK/dθ) with W = ααᵀ − K_y⁻¹
    const Matrix w = alpha * alpha.transpose() - chol.solve(Matrix::Identity(n, n));
    const double sf2 = h.sigma_f * h.sigma_f;
    const double sn2 = h.sigma_n * h.sigma_n;

    out.gradient.resize(num_ls + 2);
    out.gradient(0) = (w.cwiseProduct(k_signal)).sum() + jitter_scale * sf2 * w.trace();
    for (Eigen::Index d = 0; d < num_ls; ++d) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < i; ++j) {
                double scaled;
                if (num_ls == 1) {
                    scaled = (x.col(i) - x.col(j)).squaredNorm() / (h.lengthscales(0) * h.lengthscales(0));
                } else {
                    const double diff = (x(d, i) - x(d, j)) / h.lengthscales(d);
                    scaled = diff * diff;
                }
                acc += w(i, j) * k_signal(i, j) * scaled;
            }
        }
        out.gradient(1 + d) = acc;  // symmetric off-diagonal pairs: 2 · ½
    }
    out.gradient(num_ls + 1) = sn2 * (1.0 + jitter_scale) * w.trace();
    return out;
}

struct GpPrediction {
    double mean = 0.0;
    double variance = 0.0;
};

/// Exact GP regressor over a sliding window of the most recent observations.
///
/// observe() invalidates the factorization; predict() refuses to read a
/// stale model until rebuild() (or a fit) has run.
class GpModel {
public:
    GpModel(Eigen::Index input_dim, Hyperparams hyper, std::size_t window = 100,
            double jitter_scale = kDefaultJitterScale)
        : input_dim_(input_dim), window_(window), jitter_scale_(jitter_scale), hyper_(std::move(hyper)) {
        if (input_dim_ < 1) throw InvalidArgument("GpModel: input dimension must be >= 1");
        if (window_ < 1) throw InvalidArgument("GpModel: window must be >= 1");
        hyper_.validate(input_dim_);
    }

    Eigen::Index input_dim() const noexcept { return input_dim_; }
    std::size_t window() const noexcept { return window_; }
    std::size_t size() const noexcept { return targets_.size(); }
    bool empty() const noexcept { return targets_.empty(); }
    const Hyperparams& hyper() const noexcept { return hyper_; }
    double jitter_scale() const noexcept { return jitter_scale_; }
    bool consistent() const noexcept { return consistent_; }

    /// Noise variance actually placed on the training diagonal.
    double effective_noise_variance() const { return noise_diagonal(hyper_, jitter_scale_); }

    void observe(const Vector& x, double y) {
        if (x.size() != input_dim_) throw InvalidArgument("GpModel::observe: wrong input dimension");
        inputs_.push_back(x);
        targets_.push_back(y);
        while (targets_.size() > window_) {
            inputs_.pop_front();
            targets_.pop_front();
        }
        consistent_ = false;
    }

    void set_hyper(Hyperparams h) {
        h.validate(input_dim_);
        hyper_ = std::move(h);
        consistent_ = false;
    }

    /// Inputs as columns.
    Matrix input_matrix() const {
        Matrix x(input_dim_, static_cast<Eigen::Index>(inputs_.size()));
        for (std::size_t i = 0; i < inputs_.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = inputs_[i];
        return x;
    }

    Vector target_vector() const {
        Vector y(static_cast<Eigen::Index>(targets_.size()));
        for (std::size_t i = 0; i < targets_.size(); ++i) y(static_cast<Eigen::Index>(i)) = targets_[i];
        return y;
    }

    /// Refactorizes K + σ_n² I for the current data and hyperparameters.
    void rebuild() {
        x_ = input_matrix();
        if (x_.cols() == 0) {
            chol_.reset();
            alpha_.resize(0);
            consistent_ = true;
            return;
        }
        Matrix k = kernel_matrix(x_, hyper_);
        k.diagonal().array() += effective_noise_variance();
        chol_ = cholesky(k);
        alpha_ = chol_->solve(target_vector());
        consistent_ = true;
    }

    GpPrediction predict(const Vector& x_star) const {
        const Vector k_star = cross_covariance(x_star);
        GpPrediction p;
        p.mean = k_star.dot(alpha_);
        const Vector v = chol_->solve_lower(k_star);
        p.variance = std::max(0.0, hyper_.sigma_f * hyper_.sigma_f - v.squaredNorm());
        return p;
    }

    double predict_mean(const Vector& x_star) const { return cross_covariance(x_star).dot(alpha_); }

private:
    Vector cross_covariance(const Vector& x_star) const {
        if (targets_.empty()) throw Unfitted("GpModel::predict: no training data");
        if (!consistent_) throw StaleModel("GpModel::predict: model changed since last rebuild");
        if (x_star.size() != input_dim_) throw InvalidArgument("GpModel::predict: wrong input dimension");
        Vector k_star(x_.cols());
        for (Eigen::Index i = 0; i < x_.cols(); ++i) k_star(i) = kernel(x_.col(i), x_star, hyper_);
        return k_star;
    }

    Eigen::Index input_dim_;
    std::size_t window_;
    double jitter_scale_;
    Hyperparams hyper_;
    std::deque<Vector> inputs_;
    std::deque<double> targets_;
    Matrix x_;
    std::optional<CholeskyFactor> chol_;
    Vector alpha_;
    bool consistent_ = true;
};

inline GpPrediction predict(const GpModel& model, const Vector& x_star) { return model.predict(x_star); }

inline GpModel observe(GpModel model, const Vector& x, double y) {
    model.observe(x, y);
    return model;
}

/// y = ẋ_n,measured − wᵀφ − u_applied, which equals d − w̃ᵀφ.
inline double training_target(double xdot_n_measured, const Vector& w, const Vector& phi, double u_applied) {
    return xdot_n_measured - w.dot(phi) - u_applied;
}

struct FitOptions {
    int random_starts = 5;
    int max_iterations = 100;
    double sigma_n_floor = 1e-4;
    LengthscaleMode mode = LengthscaleMode::shared;
};

struct FitResult {
    GpModel model;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    int failed_starts = 0;
};

namespace detail {

inline constexpr double kLogBound = 12.0;

inline Vector project(Vector theta, double log_sigma_n_floor) {
    theta = theta.cwiseMax(-kLogBound).cwiseMin(kLogBound);
    theta(theta.size() - 1) = std::max(theta(theta.size() - 1), log_sigma_n_floor);
    return theta;
}

struct Evaluated {
    Vector theta;
    LogLikelihood ll;
};

/// Quasi-Newton gradient ascent (BFGS direction, Armijo backtracking) in
/// log-hyperparameter space. Returns nullopt when the start is not PD.
inline std::optional<Evaluated> ascend(const Matrix& x, const Vector& y, Vector theta, const FitOptions& opts,
                                       double jitter_scale) {
    const double floor = std::log(opts.sigma_n_floor);
    theta = project(std::move(theta), floor);
    Evaluated cur;
    try {
        cur = {theta, log_marginal_likelihood(x, y, Hyperparams::from_log(theta), jitter_scale)};
    } catch (const NotPositiveDefinite&) {
        return std::nullopt;
    }
    if (!std::isfinite(cur.ll.value)) return std::nullopt;

    const Eigen::Index dim = theta.size();
    Matrix inv_hessian = Matrix::Identity(dim, dim) / std::max(1.0, cur.ll.gradient.lpNorm<Eigen::Infinity>());

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        const Vector& g = cur.ll.gradient;
        Vector direction = inv_hessian * g;
        if (direction.dot(g) <= 0.0) {
            inv_hessian = Matrix::Identity(dim, dim) / std::max(1.0, g.lpNorm<Eigen::Infinity>());
            direction = inv_hessian * g;
        }

        std::optional<Evaluated> next;
        double step = 1.0;
        for (int halving = 0; halving < 40 && !next; ++halving, step *= 0.5) {
            const Vector trial = project(cur.theta + step * direction, floor);
            const Vector moved = trial - cur.theta;
            if (moved.lpNorm<Eigen::Infinity>() < 1e-14) break;
            try {
                const double value = log_marginal_likelihood_value(x, y, Hyperparams::from_log(trial), jitter_scale);
                if (std::isfinite(value) && value >= cur.ll.value + 1e-4 * g.dot(moved))
                    next = Evaluated{trial, log_marginal_likelihood(x, y, Hyperparams::from_log(trial), jitter_scale)};
            } catch (const NotPositiveDefinite&) {
            }
        }
        if (!next) break;

        const Vector s = next->theta - cur.theta;
        const Vector yk = cur.ll.gradient - next->ll.gradient;  // ascent: negate the gradient change
        const double improvement = next->ll.value - cur.ll.value;
        const double sy = s.dot(yk);
        if (sy > 1e-12) {
            const double rho = 1.0 / sy;
            const Matrix id = Matrix::Identity(dim, dim);
            inv_hessian = (id - rho * s * yk.transpose()) * inv_hessian * (id - rho * yk * s.transpose()) +
                          rho * s * s.transpose();
        }
        cur = std::move(*next);

        Vector projected = project(cur.theta + cur.ll.gradient, floor) - cur.theta;
        if (projected.lpNorm<Eigen::Infinity>() < 1e-8) break;
        if (improvement < 1e-13 * (1.0 + std::abs(cur.ll.value))) break;
    }
    return cur;
}

inline double median_pairwise_distance(const Matrix& x) {
    std::vector<double> d;
    for (Eigen::Index i = 0; i < x.cols(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) d.push_back((x.col(i) - x.col(j)).norm());
    if (d.empty()) return 1.0;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
    const double med = d[d.size() / 2];
    return med > 0.0 ? med : 1.0;
}

}  // namespace detail

/// Maximizes the log marginal likelihood from the incumbent hyperparameters
/// plus seeded random starts, keeping the best. The incumbent is always a
/// candidate, so the result never scores below it.
inline FitResult fit(const GpModel& model, const FitOptions& opts = {}, std::uint64_t seed = 0) {
    if (model.size() < 2) throw InvalidArgument("fit: need at least two training points");
    const Matrix x = model.input_matrix();
    const Vector y = model.target_vector();
    const Eigen::Index dim_in = model.input_dim();

    Hyperparams incumbent = model.hyper();
    const Eigen::Index num_ls = opts.mode == LengthscaleMode::shared ? 1 : dim_in;
    if (incumbent.lengthscales.size() != num_ls)
        incumbent.lengthscales = Vector::Constant(num_ls, incumbent.lengthscales.mean());
    incumbent.sigma_n = std::max(incumbent.sigma_n, opts.sigma_n_floor);

    std::vector<Vector> starts{incumbent.to_log()};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double rms = std::max(std::sqrt(y.squaredNorm() / static_cast<double>(y.size())), 1e-3);
    const double length = detail::median_pairwise_distance(x);
    for (int s = 0; s < opts.random_starts; ++s) {
        Vector theta(num_ls + 2);
        theta(0) = std::log(rms) + unit(rng);
        for (Eigen::Index d = 0; d < num_ls; ++d) theta(1 + d) = std::log(length) + 1.5 * unit(rng);
        theta(num_ls + 1) = std::log(std::max(0.1 * rms, opts.sigma_n_floor)) + 1.5 * unit(rng) - 0.5;
        starts.push_back(theta);
    }

    FitResult result{model};
    std::optional<detail::Evaluated> best;
    for (const Vector& start : starts) {
        auto found = detail::ascend(x, y, start, opts, model.jitter_scale());
        if (!found) {
            ++result.failed_starts;
            continue;
        }
        if (!best || found->ll.value > best->ll.value) best = std::move(found);
    }
    if (!best) throw AllStartsFailed("fit: every start produced a non-PD Gram matrix");

    result.model.set_hyper(Hyperparams::from_log(best->theta));
    result.model.rebuild();
    result.log_likelihood = best->ll.value;
    return result;
}

}  // namespace fblgp
