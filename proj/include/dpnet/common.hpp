#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dpnet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Images are N x N pixel grids covering [-1,1]^2, sinograms are
// n_angles x n_detectors. Both are stored as plain dense matrices; geometry
// travels separately.
using Image = Eigen::MatrixXd;
using Sinogram = Eigen::MatrixXd;

struct Shape {
    int rows = 0;
    int cols = 0;

    int size() const { return rows * cols; }
    bool operator==(const Shape& o) const { return rows == o.rows && cols == o.cols; }
    bool operator!=(const Shape& o) const { return !(*this == o); }
};

inline std::string to_string(const Shape& s) {
    return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

// Row-major flattening, index = row * cols + col.
inline Vec flatten(const Mat& m) {
    Vec v(m.size());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) v[i * m.cols() + j] = m(i, j);
    return v;
}

inline Mat unflatten(const Vec& v, int rows, int cols) {
    if (v.size() != static_cast<long>(rows) * cols)
        throw std::invalid_argument("unflatten: size mismatch, got " +
                                    std::to_string(v.size()) + " values for " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = v[i * cols + j];
    return m;
}

inline void check_shape(const Mat& m, const Shape& s, const std::string& what) {
    if (m.rows() != s.rows || m.cols() != s.cols)
        throw std::invalid_argument(what + ": expected " + to_string(s) + ", got " +
                                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

// Deterministic parallel map: every index writes its own slot, so the result
// is identical for any thread count. Reductions over the results must run in
// index order on the caller side.
inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    int workers = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

inline int default_threads() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace dpnet
