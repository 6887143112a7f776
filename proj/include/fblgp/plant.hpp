#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "fblgp/errors.hpp"
#include "fblgp/numerics.hpp"

namespace fblgp {

/// Admissible state box; leaving it aborts the simulation.
inline constexpr double kStateEscapeBound = 1e3;

/// Integrator-chain plant  x' = A x + b (u + w*ᵀ φ(x) + d(t, x)).
///
/// A (superdiagonal ones) and b = e_n are implied by the order and never
/// stored.
class Plant {
public:
    using Regressor = std::function<Vector(const Vector&)>;
    using Disturbance = std::function<double(double, const Vector&)>;

    Plant(int order, Vector ideal_weights, Regressor regressor, Disturbance disturbance)
        : order_(order),
          ideal_weights_(std::move(ideal_weights)),
          regressor_(std::move(regressor)),
          disturbance_(std::move(disturbance)) {
        if (order_ < 1) throw InvalidArgument("Plant: order must be >= 1");
        if (!regressor_) throw InvalidArgument("Plant: regressor is required");
        if (!disturbance_) disturbance_ = [](double, const Vector&) { return 0.0; };
    }

    int order() const noexcept { return order_; }
    Eigen::Index num_weights() const noexcept { return ideal_weights_.size(); }
    const Vector& ideal_weights() const noexcept { return ideal_weights_; }

    Matrix a() const {
        Matrix a = Matrix::Zero(order_, order_);
        for (int i = 0; i + 1 < order_; ++i) a(i, i + 1) = 1.0;
        return a;
    }

    Vector b() const {
        Vector b = Vector::Zero(order_);
        b(order_ - 1) = 1.0;
        return b;
    }

    /// φ(x). Throws StateEscape outside the state box and NonFinite on overflow.
    Vector regressor(const Vector& x) const {
        check_state(x);
        Vector phi = regressor_(x);
        if (phi.size() != ideal_weights_.size())
            throw InvalidArgument("Plant: regressor length differs from weight count");
        if (!phi.allFinite()) throw NonFinite("Plant: regressor is not finite");
        return phi;
    }

    double disturbance(double t, const Vector& x) const {
        const double d = disturbance_(t, x);
        if (!std::isfinite(d)) throw NonFinite("Plant: disturbance is not finite");
        return d;
    }

    /// ẋ with ẋ_i = x_{i+1} for i < n and ẋ_n = w*ᵀφ(x) + u + d(t, x).
    Vector derivative(double t, const Vector& x, double u) const {
        Vector dx(order_);
        for (int i = 0; i + 1 < order_; ++i) dx(i) = x(i + 1);
        dx(order_ - 1) = ideal_weights_.dot(regressor(x)) + u + disturbance(t, x);
        return dx;
    }

    /// The last component of derivative(): the measured state derivative.
    double last_derivative(double t, const Vector& x, double u) const {
        return ideal_weights_.dot(regressor(x)) + u + disturbance(t, x);
    }

    /// Same plant with the disturbance removed (training environment).
    Plant without_disturbance() const {
        return Plant(order_, ideal_weights_, regressor_, nullptr);
    }

private:
    void check_state(const Vector& x) const {
        if (x.size() != order_) throw InvalidArgument("Plant: state has wrong dimension");
        if (!x.allFinite()) throw NonFinite("Plant: state is not finite");
        if (x.cwiseAbs().maxCoeff() > kStateEscapeBound)
            throw StateEscape("Plant: state escaped |x_i| <= 1e3");
    }

    int order_;
    Vector ideal_weights_;
    Regressor regressor_;
    Disturbance disturbance_;
};

inline Vector eval_regressor(const Plant& plant, const Vector& x) { return plant.regressor(x); }

inline Vector plant_derivative(const Plant& plant, double t, const Vector& x, double u) {
    return plant.derivative(t, x, u);
}

namespace benchmark {

inline constexpr const char* kName = "benchmark_5717148";
inline constexpr double kDisturbanceOn = 10.0;
inline constexpr double kDisturbanceOff = 30.0;

inline Vector ideal_weights() { return (Vector(3) << 1.0, -1.0, 0.5).finished(); }

/// Initial weight estimate with model mismatch.
inline Vector mismatched_weights() { return (Vector(3) << 0.5, -1.3, 0.75).finished(); }

/// φ(θ, θ') = [sin θ, |θ'| θ, exp(θ θ')].
inline Vector regressor(const Vector& x) {
    const double theta = x(0);
    const double rate = x(1);
    return (Vector(3) << std::sin(theta), std::abs(rate) * theta, std::exp(theta * rate)).finished();
}

/// d = cos θ + θ' on [10, 30] s, zero before.
inline double disturbance(double t, const Vector& x) {
    if (t < kDisturbanceOn || t > kDisturbanceOff) return 0.0;
    return std::cos(x(0)) + x(1);
}

inline Plant make_plant(bool with_disturbance) {
    return Plant(2, ideal_weights(), regressor,
                 with_disturbance ? Plant::Disturbance(disturbance) : Plant::Disturbance());
}

}  // namespace benchmark

/// Desired trajectory: t -> (x_ref(t), d/dt x_ref,n(t)).
struct ReferenceSample {
    Vector x_ref;
    double xdot_n_ref = 0.0;
};

class ReferenceModel {
public:
    using Trajectory = std::function<ReferenceSample(double)>;

    ReferenceModel(int order, Trajectory trajectory) : order_(order), trajectory_(std::move(trajectory)) {}

    int order() const noexcept { return order_; }

    ReferenceSample operator()(double t) const {
        ReferenceSample s = trajectory_(t);
        if (s.x_ref.size() != order_) throw InvalidArgument("ReferenceModel: wrong state dimension");
        return s;
    }

    /// x_ref = amplitude·sin(ω t) and its first n derivatives.
    static ReferenceModel sinusoid(int order, double amplitude, double omega) {
        return ReferenceModel(order, [order, amplitude, omega](double t) {
            const double sin_wt = std::sin(omega * t);
            const double cos_wt = std::cos(omega * t);
            auto derivative = [&](int k) {
                const double scale = amplitude * std::pow(omega, k);
                switch (k % 4) {
                    case 0: return scale * sin_wt;
                    case 1: return scale * cos_wt;
                    case 2: return -scale * sin_wt;
                    default: return -scale * cos_wt;
                }
            };
            ReferenceSample s;
            s.x_ref.resize(order);
            for (int i = 0; i < order; ++i) s.x_ref(i) = derivative(i);
            s.xdot_n_ref = derivative(order);
            return s;
        });
    }

private:
    int order_;
    Trajectory trajectory_;
};

inline ReferenceSample eval_reference(const ReferenceModel& ref, double t) { return ref(t); }

}  // namespace fblgp
