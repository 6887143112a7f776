#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "fblgp/errors.hpp"

namespace fblgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Relative jitter applied to kernel matrices: scale times the mean diagonal.
inline constexpr double kDefaultJitterScale = 1e-8;

inline double default_jitter(const Matrix& m, double scale = kDefaultJitterScale) {
    if (m.rows() == 0) return 0.0;
    return scale * m.diagonal().mean();
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
///
/// Wraps Eigen's LLT so callers never touch a failed decomposition: the
/// only way to obtain a CholeskyFactor is through cholesky(), which throws
/// on a non-positive pivot.
class CholeskyFactor {
public:
    const Matrix& lower() const noexcept { return lower_; }
    Eigen::Index size() const noexcept { return lower_.rows(); }

    /// Solves (L Lᵀ) x = b.
    template <typename Derived>
    Matrix solve(const Eigen::MatrixBase<Derived>& b) const {
        Matrix y = lower_.triangularView<Eigen::Lower>().solve(b);
        return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
    }

    /// Solves L y = b.
    template <typename Derived>
    Matrix solve_lower(const Eigen::MatrixBase<Derived>& b) const {
        return lower_.triangularView<Eigen::Lower>().solve(b);
    }

    double log_determinant() const {
        return 2.0 * lower_.diagonal().array().log().sum();
    }

private:
    explicit CholeskyFactor(Matrix lower) : lower_(std::move(lower)) {}
    friend CholeskyFactor cholesky(const Matrix& m, double jitter);

    Matrix lower_;
};

/// Factorizes m + jitter·I. Throws NotPositiveDefinite on a non-positive pivot.
inline CholeskyFactor cholesky(const Matrix& m, double jitter = 0.0) {
    if (m.rows() != m.cols()) throw InvalidArgument("cholesky: matrix is not square");
    if (!m.allFinite()) throw NotPositiveDefinite("cholesky: matrix has non-finite entries");
    const double scale = m.norm();
    if ((m - m.transpose()).norm() > 1e-9 * scale)
        throw InvalidArgument("cholesky: matrix is not symmetric");

    Matrix shifted = m;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("cholesky: non-positive pivot (jitter " + std::to_string(jitter) + ")");
    Matrix lower = llt.matrixL();
    if ((lower.diagonal().array() <= 0.0).any())
        throw NotPositiveDefinite("cholesky: zero pivot");
    return CholeskyFactor(std::move(lower));
}

/// Kronecker product a ⊗ b.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline bool is_hurwitz(const Matrix& a) {
    Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
    return (es.eigenvalues().real().array() < 0.0).all();
}

/// Solves a_clᵀ P + P a_cl + s = 0 for symmetric P.
///
/// The n² unknowns are solved densely through the vectorized system
/// (I ⊗ a_clᵀ + a_clᵀ ⊗ I) vec(P) = −vec(s). Meant for small n.
inline Matrix solve_lyapunov(const Matrix& a_cl, const Matrix& s) {
    const Eigen::Index n = a_cl.rows();
    if (a_cl.cols() != n || s.rows() != n || s.cols() != n)
        throw InvalidArgument("solve_lyapunov: dimension mismatch");
    if (!is_hurwitz(a_cl)) throw NotHurwitz("solve_lyapunov: closed-loop matrix has an eigenvalue with Re >= 0");

    const Matrix identity = Matrix::Identity(n, n);
    const Matrix at = a_cl.transpose();
    const Matrix lhs = kron(identity, at) + kron(at, identity);
    const Vector rhs = -Eigen::Map<const Vector>(s.data(), n * n);

    Eigen::FullPivLU<Matrix> lu(lhs);
    if (!lu.isInvertible()) throw NotHurwitz("solve_lyapunov: vectorized system is singular");
    const Vector p_vec = lu.solve(rhs);

    Matrix p = Eigen::Map<const Matrix>(p_vec.data(), n, n);
    return 0.5 * (p + p.transpose());
}

inline double lyapunov_residual(const Matrix& a_cl, const Matrix& s, const Matrix& p) {
    return (a_cl.transpose() * p + p * a_cl + s).norm();
}

/// One classical fourth-order Runge-Kutta step of x' = f(t, x).
template <typename F, typename State>
State rk4_step(F&& f, double t, const State& x, double h) {
    if (!(h > 0.0)) throw InvalidArgument("rk4_step: step must be positive");
    auto checked = [](State k) {
        if (!k.allFinite()) throw NonFiniteDerivative("rk4_step: non-finite stage derivative");
        return k;
    };
    const double half = 0.5 * h;
    const State k1 = checked(f(t, x));
    const State k2 = checked(f(t + half, State(x + half * k1)));
    const State k3 = checked(f(t + half, State(x + half * k2)));
    const State k4 = checked(f(t + h, State(x + h * k3)));
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace fblgp
