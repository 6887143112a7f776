#pragma once

#include <cmath>

#include "fblgp/errors.hpp"
#include "fblgp/numerics.hpp"

namespace fblgp {

struct ControllerConfig {
    Vector gains;                  // k_1 … k_n, applied as u_sfb = k·e
    double robustness_gain = 1.0;  // m
    double boundary_layer = 0.01;  // ρ
    Matrix q;
    double r = 0.01;
    bool gp_enabled = false;
    bool rob_enabled = true;
    bool m_auto = false;

    static ControllerConfig benchmark_defaults() {
        ControllerConfig cfg;
        cfg.gains = (Vector(2) << 20.0, 20.0).finished();
        cfg.q = Matrix::Identity(2, 2);
        return cfg;
    }

    int order() const noexcept { return static_cast<int>(gains.size()); }
};

/// Components of u = u_fbl + u_sfb + u_ref − u_gp − u_rob.
struct ControlBreakdown {
    double u_fbl = 0.0;
    double u_sfb = 0.0;
    double u_ref = 0.0;
    double u_gp = 0.0;
    double u_rob = 0.0;
    double u_total = 0.0;
};

/// A − b k for the integrator chain of order n = gains.size().
inline Matrix closed_loop_matrix(const Vector& gains) {
    const Eigen::Index n = gains.size();
    Matrix a_cl = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) a_cl(i, i + 1) = 1.0;
    a_cl.row(n - 1) = -gains.transpose();
    return a_cl;
}

/// S̃ = Q + kᵀ R k.
inline Matrix lyapunov_weight(const ControllerConfig& cfg) {
    return cfg.q + cfg.r * cfg.gains * cfg.gains.transpose();
}

inline void validate(const ControllerConfig& cfg) {
    const Eigen::Index n = cfg.gains.size();
    if (n < 1) throw InvalidArgument("ControllerConfig: empty gain vector");
    if (cfg.q.rows() != n || cfg.q.cols() != n) throw InvalidArgument("ControllerConfig: Q must be n x n");
    if (!(cfg.robustness_gain >= 0.0)) throw InvalidArgument("ControllerConfig: m must be >= 0");
    if (!(cfg.boundary_layer > 0.0)) throw InvalidArgument("ControllerConfig: rho must be > 0");
    if (!(cfg.r >= 0.0)) throw InvalidArgument("ControllerConfig: R must be >= 0");
    Eigen::LLT<Matrix> llt(cfg.q);
    if (llt.info() != Eigen::Success) throw InvalidArgument("ControllerConfig: Q must be positive definite");
}

/// P solving (A−bk)ᵀP + P(A−bk) + Q + kᵀRk = 0. Throws NotHurwitz.
inline Matrix compute_p(const ControllerConfig& cfg) {
    validate(cfg);
    return solve_lyapunov(closed_loop_matrix(cfg.gains), lyapunov_weight(cfg));
}

/// bᵀPe, the switching variable.
inline double switching_value(const Matrix& p, const Vector& e) {
    return p.row(p.rows() - 1).dot(e);
}

/// Boundary-layer version of u_rob = −m·s/|s|: linear ramp −m·s/ρ for |s| <= ρ.
inline double robustness_term(const Matrix& p, const Vector& e, double m, double rho) {
    const double s = switching_value(p, e);
    if (std::abs(s) > rho) return s > 0.0 ? -m : m;
    return -m * s / rho;
}

inline ControlBreakdown compute_control_with_gain(const ControllerConfig& cfg, const Matrix& p, const Vector& w,
                                                  const Vector& phi, const Vector& e, double xdot_n_ref,
                                                  double gp_mean, double robustness_gain) {
    ControlBreakdown u;
    u.u_fbl = -w.dot(phi);
    u.u_sfb = cfg.gains.dot(e);
    u.u_ref = xdot_n_ref;
    u.u_gp = cfg.gp_enabled ? gp_mean : 0.0;
    u.u_rob = cfg.rob_enabled ? robustness_term(p, e, robustness_gain, cfg.boundary_layer) : 0.0;
    u.u_total = u.u_fbl + u.u_sfb + u.u_ref - u.u_gp - u.u_rob;
    return u;
}

inline ControlBreakdown compute_control(const ControllerConfig& cfg, const Matrix& p, const Vector& w,
                                        const Vector& phi, const Vector& e, double xdot_n_ref, double gp_mean) {
    return compute_control_with_gain(cfg, p, w, phi, e, xdot_n_ref, gp_mean, cfg.robustness_gain);
}

}  // namespace fblgp
