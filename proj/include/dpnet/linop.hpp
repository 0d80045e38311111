#pragma once

#include <dpnet/common.hpp>
#include <dpnet/rng.hpp>

#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

namespace dpnet::linop {

// Matrix-free linear map with forward/adjoint evaluation on flattened
// (row-major) vectors. Evaluations must be pure, so handles can be shared
// across threads.
struct OperatorHandle {
    Shape domain_shape;
    Shape range_shape;
    std::function<Vec(const Vec&)> forward;
    std::function<Vec(const Vec&)> adjoint;

    int domain_dim() const { return domain_shape.size(); }
    int range_dim() const { return range_shape.size(); }
};

struct CglsOptions {
    int max_iterations = 500;
    // relative tolerance on the normal-equation residual ||A'(y-Ax) - shift x||
    double residual_tolerance = 1e-6;

    void validate() const {
        if (max_iterations < 1) throw std::invalid_argument("cgls: max_iterations must be >= 1");
        if (residual_tolerance < 0.0 || residual_tolerance >= 1.0)
            throw std::invalid_argument("cgls: residual_tolerance must be in [0,1)");
    }
};

// Non-convergence is not an error; the caller inspects the diagnostic and
// decides whether to accept the iterate.
struct CglsResult {
    Vec x;
    bool converged = false;
    int iterations = 0;
    double relative_residual = 0.0;  // final ||A'r - shift x|| / ||A'y||
};

// CGLS on min ||Ax-y||^2 + shift ||x||^2, started from x0 = 0. With shift = 0
// every iterate stays in R(A'), so the limit is the minimum-norm least-squares
// solution A^+ y.
inline CglsResult cgls(const OperatorHandle& op, const Vec& y, const CglsOptions& opts,
                       double shift = 0.0) {
    opts.validate();
    if (y.size() != op.range_dim())
        throw std::invalid_argument("cgls: rhs has wrong size " + std::to_string(y.size()) +
                                    ", expected " + std::to_string(op.range_dim()));

    CglsResult res;
    res.x = Vec::Zero(op.domain_dim());
    Vec r = y;
    Vec s = op.adjoint(r);  // shift * x vanishes at x = 0
    double norm_s0 = s.norm();
    if (norm_s0 == 0.0) {  // y orthogonal to R(A); minimum-norm solution is 0
        res.converged = true;
        return res;
    }
    Vec p = s;
    double gamma = norm_s0 * norm_s0;

    for (int k = 1; k <= opts.max_iterations; ++k) {
        Vec q = op.forward(p);
        double denom = q.squaredNorm() + shift * p.squaredNorm();
        if (denom == 0.0) {  // p in the null-space; cannot happen for p in R(A') unless p = 0
            res.converged = true;
            res.iterations = k - 1;
            res.relative_residual = std::sqrt(gamma) / norm_s0;
            return res;
        }
        double alpha = gamma / denom;
        res.x += alpha * p;
        r -= alpha * q;
        s = op.adjoint(r);
        if (shift != 0.0) s -= shift * res.x;
        double gamma_new = s.squaredNorm();
        res.iterations = k;
        res.relative_residual = std::sqrt(gamma_new) / norm_s0;
        if (res.relative_residual <= opts.residual_tolerance) {
            res.converged = true;
            return res;
        }
        p = s + (gamma_new / gamma) * p;
        gamma = gamma_new;
    }
    return res;
}

// A^+ y as the minimum-norm least-squares solution via CGLS.
inline CglsResult apply_pseudoinverse(const OperatorHandle& op, const Vec& y,
                                      const CglsOptions& opts) {
    return cgls(op, y, opts);
}

// P_N(A) x = x - A^+ (A x)
inline CglsResult project_nullspace(const OperatorHandle& op, const Vec& x,
                                    const CglsOptions& opts) {
    if (x.size() != op.domain_dim())
        throw std::invalid_argument("project_nullspace: wrong input size");
    CglsResult res = apply_pseudoinverse(op, op.forward(x), opts);
    res.x = x - res.x;
    return res;
}

// P_{R(A^+)} x = A^+ A x, the complement projection
inline CglsResult project_range_complement(const OperatorHandle& op, const Vec& x,
                                           const CglsOptions& opts) {
    if (x.size() != op.domain_dim())
        throw std::invalid_argument("project_range_complement: wrong input size");
    return apply_pseudoinverse(op, op.forward(x), opts);
}

constexpr int kDefaultDenseCap = 4096;

// Explicit matrix view of a handle. This is the small-instance oracle for
// A^+ and the null-space/range projectors, with singular values below
// 1e-10 * sigma_max treated as zero.
struct DenseOperator {
    Mat matrix;  // range_dim x domain_dim

    static constexpr double kSvTruncation = 1e-10;

    int rows() const { return static_cast<int>(matrix.rows()); }
    int cols() const { return static_cast<int>(matrix.cols()); }

    Eigen::BDCSVD<Mat> svd() const {
        return Eigen::BDCSVD<Mat>(matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    }

    Mat pseudoinverse() const {
        auto dec = svd();
        const Vec& sv = dec.singularValues();
        double cut = sv.size() ? kSvTruncation * sv[0] : 0.0;
        Vec inv = Vec::Zero(sv.size());
        for (int i = 0; i < sv.size(); ++i)
            if (sv[i] > cut) inv[i] = 1.0 / sv[i];
        return dec.matrixV() * inv.asDiagonal() * dec.matrixU().transpose();
    }

    int numerical_rank() const {
        auto dec = svd();
        const Vec& sv = dec.singularValues();
        double cut = sv.size() ? kSvTruncation * sv[0] : 0.0;
        int r = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv[i] > cut) ++r;
        return r;
    }

    // orthonormal basis of R(A') = N(A)^perp, domain_dim x rank
    Mat row_space_basis() const {
        auto dec = svd();
        const Vec& sv = dec.singularValues();
        double cut = sv.size() ? kSvTruncation * sv[0] : 0.0;
        int r = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv[i] > cut) ++r;
        return dec.matrixV().leftCols(r);
    }

    Mat nullspace_projector() const {
        Mat v = row_space_basis();
        return Mat::Identity(cols(), cols()) - v * v.transpose();
    }

    Vec solve_min_norm(const Vec& y) const { return pseudoinverse() * y; }

    OperatorHandle as_handle(Shape domain_shape, Shape range_shape) const {
        if (domain_shape.size() != cols() || range_shape.size() != rows())
            throw std::invalid_argument("DenseOperator::as_handle: shape/dims mismatch");
        Mat m = matrix;
        return OperatorHandle{domain_shape, range_shape,
                              [m](const Vec& x) -> Vec { return m * x; },
                              [m](const Vec& y) -> Vec { return m.transpose() * y; }};
    }

    OperatorHandle as_handle() const {
        return as_handle(Shape{cols(), 1}, Shape{rows(), 1});
    }
};

// Column j is forward(e_j).
inline DenseOperator to_dense(const OperatorHandle& op, int dimension_cap = kDefaultDenseCap) {
    if (op.domain_dim() > dimension_cap)
        throw std::invalid_argument("to_dense: domain dimension " +
                                    std::to_string(op.domain_dim()) + " exceeds cap " +
                                    std::to_string(dimension_cap));
    DenseOperator d;
    d.matrix.resize(op.range_dim(), op.domain_dim());
    Vec e = Vec::Zero(op.domain_dim());
    for (int j = 0; j < op.domain_dim(); ++j) {
        e[j] = 1.0;
        d.matrix.col(j) = op.forward(e);
        e[j] = 0.0;
    }
    return d;
}

// ||A|| estimate by power iteration on A'A. Used for step sizes, hence the
// caller usually inflates it slightly.
inline double power_method_norm(const OperatorHandle& op, int iterations = 30,
                                uint64_t seed = 0x9e3779b9) {
    rng::Prng prng(seed);
    Vec v(op.domain_dim());
    for (int i = 0; i < v.size(); ++i) v[i] = prng.normal();
    double lambda = 0.0;
    for (int k = 0; k < iterations; ++k) {
        Vec w = op.adjoint(op.forward(v));
        double n = w.norm();
        if (n == 0.0) return 0.0;
        lambda = n;
        v = w / n;
    }
    return std::sqrt(lambda);  // lambda estimates ||A'A|| = ||A||^2
}

// Forward-difference gradient on an r x c grid with replicate (Neumann)
// boundary: channel 1 holds column differences, channel 2 row differences,
// stacked into a (2r) x c range. The adjoint is the exact transpose of the
// forward stencil.
inline OperatorHandle make_gradient_operator(int rows, int cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("gradient: empty grid");
    Shape dom{rows, cols}, rng_shape{2 * rows, cols};
    auto fwd = [rows, cols](const Vec& x) -> Vec {
        Vec g = Vec::Zero(static_cast<long>(2 * rows) * cols);
        auto at = [cols, &x](int i, int j) { return x[i * cols + j]; };
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                if (j + 1 < cols) g[i * cols + j] = at(i, j + 1) - at(i, j);
                if (i + 1 < rows) g[(rows + i) * cols + j] = at(i + 1, j) - at(i, j);
            }
        return g;
    };
    auto adj = [rows, cols](const Vec& p) -> Vec {
        Vec x = Vec::Zero(static_cast<long>(rows) * cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                if (j + 1 < cols) {
                    double v = p[i * cols + j];
                    x[i * cols + j + 1] += v;
                    x[i * cols + j] -= v;
                }
                if (i + 1 < rows) {
                    double v = p[(rows + i) * cols + j];
                    x[(i + 1) * cols + j] += v;
                    x[i * cols + j] -= v;
                }
            }
        return x;
    };
    return OperatorHandle{dom, rng_shape, fwd, adj};
}

inline OperatorHandle make_identity_operator(int n) {
    return OperatorHandle{Shape{n, 1}, Shape{n, 1}, [](const Vec& x) { return x; },
                          [](const Vec& y) { return y; }};
}

inline OperatorHandle make_zero_operator(Shape domain, Shape range) {
    return OperatorHandle{domain, range,
                          [range](const Vec&) { return Vec::Zero(range.size()); },
                          [domain](const Vec&) { return Vec::Zero(domain.size()); }};
}

// Precomputed projections for operators that densify under the cap. Training
// loops apply these thousands of times, where per-call CGLS would dominate
// the runtime.
class ProjectorCache {
   public:
    ProjectorCache() = default;

    explicit ProjectorCache(const OperatorHandle& op, int dimension_cap = kDefaultDenseCap) {
        DenseOperator d = to_dense(op, dimension_cap);
        row_basis_ = d.row_space_basis();
        pinv_ = d.pseudoinverse();
    }

    // P_N(A) x
    Vec nullspace(const Vec& x) const { return x - row_basis_ * (row_basis_.transpose() * x); }
    // A^+ y
    Vec pinv(const Vec& y) const { return pinv_ * y; }
    // (A^+)' x = (A')^+ x
    Vec pinv_adjoint(const Vec& x) const { return pinv_.transpose() * x; }

    const Mat& pinv_matrix() const { return pinv_; }

   private:
    Mat row_basis_;
    Mat pinv_;
};

}  // namespace dpnet::linop
