#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "fblgp/errors.hpp"
#include "fblgp/numerics.hpp"

namespace fblgp {

/// One recorded training-environment sample (d = 0 when captured).
struct StackRecord {
    Vector phi;
    double xdot_n = 0.0;
    double u = 0.0;
};

/// Smallest singular value of the m x p matrix whose columns are the φ_j.
/// Zero while fewer than m columns are stored.
inline double min_singular_value(const std::vector<StackRecord>& records) {
    if (records.empty()) return 0.0;
    const Eigen::Index m = records.front().phi.size();
    if (static_cast<Eigen::Index>(records.size()) < m) return 0.0;
    Matrix columns(m, static_cast<Eigen::Index>(records.size()));
    for (std::size_t j = 0; j < records.size(); ++j) columns.col(static_cast<Eigen::Index>(j)) = records[j].phi;
    Eigen::JacobiSVD<Matrix> svd(columns);
    return svd.singularValues().minCoeff();
}

/// Fixed-capacity history stack. Once full, a candidate replaces the record
/// whose removal yields the largest smallest-singular-value, and only when
/// that strictly improves on the current value.
class HistoryStack {
public:
    explicit HistoryStack(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw InvalidArgument("HistoryStack: capacity must be positive");
    }

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool full() const noexcept { return records_.size() == capacity_; }
    const std::vector<StackRecord>& records() const noexcept { return records_; }
    double min_singular_value() const noexcept { return sigma_min_; }

    bool try_record(const Vector& phi, double xdot_n, double u) {
        if (!phi.allFinite()) return false;
        if (!records_.empty() && phi.size() != records_.front().phi.size())
            throw InvalidArgument("HistoryStack: regressor dimension changed");
        if (!full()) {
            if (phi.norm() == 0.0) return false;
            records_.push_back({phi, xdot_n, u});
            sigma_min_ = fblgp::min_singular_value(records_);
            return true;
        }

        double best = sigma_min_;
        std::size_t best_slot = capacity_;
        std::vector<StackRecord> trial = records_;
        for (std::size_t j = 0; j < capacity_; ++j) {
            trial[j] = {phi, xdot_n, u};
            const double candidate = fblgp::min_singular_value(trial);
            if (candidate > best) {
                best = candidate;
                best_slot = j;
            }
            trial[j] = records_[j];
        }
        if (best_slot == capacity_) return false;
        records_[best_slot] = {phi, xdot_n, u};
        sigma_min_ = best;
        return true;
    }

private:
    std::size_t capacity_;
    std::vector<StackRecord> records_;
    double sigma_min_ = 0.0;
};

struct LearnerState {
    Vector w;
    double gamma_w = 3.0;
    HistoryStack stack{20};
    bool active = true;
};

/// ε_j = wᵀφ_j − (ẋ_n,j − u_j); the bracket stands in for w*ᵀφ_j since d = 0 at capture.
inline double prediction_error(const Vector& w, const StackRecord& rec) {
    return w.dot(rec.phi) - (rec.xdot_n - rec.u);
}

/// ẇ = −Γ φ(x) eᵀPb − Γ Σ_j φ_j ε_j, using the stored φ_j inside the sum.
inline Vector weight_update_derivative(const Vector& w, double gamma_w, const HistoryStack& stack,
                                       const Vector& phi_now, const Vector& e, const Matrix& p) {
    const double epb = p.row(p.rows() - 1).dot(e);  // P symmetric, so eᵀPb = bᵀPe
    Vector wdot = -gamma_w * epb * phi_now;
    for (const StackRecord& rec : stack.records()) wdot -= gamma_w * prediction_error(w, rec) * rec.phi;
    return wdot;
}

inline Vector weight_update_derivative(const LearnerState& state, const Vector& phi_now, const Vector& e,
                                       const Matrix& p) {
    if (!state.active) return Vector::Zero(state.w.size());
    return weight_update_derivative(state.w, state.gamma_w, state.stack, phi_now, e, p);
}

}  // namespace fblgp
