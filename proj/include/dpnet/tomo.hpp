#pragma once

#include <dpnet/common.hpp>
#include <dpnet/linop.hpp>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace dpnet::tomo {

// Parallel-beam sampling of the Radon transform: square N x N image on
// [-1,1]^2, detectors at n_detectors equidistant signed distances in [-1,1],
// view angles in [-pi/2, pi/2).
struct Geometry {
    int image_size = 64;
    int n_detectors = 64;
    std::vector<double> angles;

    void validate() const {
        if (image_size < 2) throw std::invalid_argument("geometry: image_size must be >= 2");
        if (n_detectors < 2) throw std::invalid_argument("geometry: n_detectors must be >= 2");
        if (angles.empty()) throw std::invalid_argument("geometry: no angles");
        for (size_t i = 0; i < angles.size(); ++i) {
            if (angles[i] < -M_PI / 2 || angles[i] >= M_PI / 2)
                throw std::invalid_argument("geometry: angle out of [-pi/2, pi/2)");
            if (i > 0 && angles[i] <= angles[i - 1])
                throw std::invalid_argument("geometry: angles must be strictly increasing");
        }
    }

    int n_angles() const { return static_cast<int>(angles.size()); }
    double pixel_width() const { return 2.0 / image_size; }
    double detector_spacing() const { return 2.0 / (n_detectors - 1); }
    double detector_position(int m) const { return -1.0 + m * detector_spacing(); }
    // assumes an equidistant grid, which all factories produce
    double angle_spacing() const {
        return angles.size() > 1 ? angles[1] - angles[0] : M_PI;
    }

    Shape image_shape() const { return Shape{image_size, image_size}; }
    Shape sinogram_shape() const { return Shape{n_angles(), n_detectors}; }
};

inline Geometry make_geometry(int image_size, int n_detectors, int n_angles, double angle_lo,
                              double angle_hi) {
    Geometry g;
    g.image_size = image_size;
    g.n_detectors = n_detectors;
    g.angles.resize(n_angles);
    double spacing = (angle_hi - angle_lo) / n_angles;  // half-open [lo, hi)
    for (int i = 0; i < n_angles; ++i) g.angles[i] = angle_lo + i * spacing;
    g.validate();
    return g;
}

inline Geometry make_limited_angle_geometry(int image_size, int n_detectors, int n_angles,
                                            double angle_lo = -M_PI / 3,
                                            double angle_hi = M_PI / 3) {
    return make_geometry(image_size, n_detectors, n_angles, angle_lo, angle_hi);
}

inline Geometry make_full_angle_geometry(int image_size, int n_detectors, int n_angles) {
    return make_geometry(image_size, n_detectors, n_angles, -M_PI / 2, M_PI / 2);
}

namespace detail {

// Joseph-style interpolation weights for the ray at (angle index ia, detector
// index m): step along the dominant axis, linear interpolation across the
// other, each tap weighted by the in-row (or in-column) intersection length.
// The adjoint scatters through the identical enumeration, so the pair is an
// exact transpose by construction.
template <typename F>
inline void for_each_ray_weight(const Geometry& g, int ia, int m, F&& emit) {
    const int n = g.image_size;
    const double h = g.pixel_width();
    const double s = g.detector_position(m);
    const double c = std::cos(g.angles[ia]);
    const double si = std::sin(g.angles[ia]);
    // pixel center coordinate along either axis: -1 + (k + 0.5) h
    if (std::abs(c) >= std::abs(si)) {
        const double len = h / std::abs(c);
        for (int i = 0; i < n; ++i) {
            double y = -1.0 + (i + 0.5) * h;
            double x = (s - y * si) / c;
            double p = (x + 1.0) / h - 0.5;  // fractional column index
            double fl = std::floor(p);
            int j0 = static_cast<int>(fl);
            double w = p - fl;
            if (j0 >= 0 && j0 < n) emit(i * n + j0, (1.0 - w) * len);
            if (j0 + 1 >= 0 && j0 + 1 < n) emit(i * n + j0 + 1, w * len);
        }
    } else {
        const double len = h / std::abs(si);
        for (int j = 0; j < n; ++j) {
            double x = -1.0 + (j + 0.5) * h;
            double y = (s - x * c) / si;
            double p = (y + 1.0) / h - 0.5;  // fractional row index
            double fl = std::floor(p);
            int i0 = static_cast<int>(fl);
            double w = p - fl;
            if (i0 >= 0 && i0 < n) emit(i0 * n + j, (1.0 - w) * len);
            if (i0 + 1 >= 0 && i0 + 1 < n) emit((i0 + 1) * n + j, w * len);
        }
    }
}

// Radix-2 complex FFT, in place. Lengths are powers of two by construction
// (sinogram rows are zero-padded before filtering).
inline void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
    const size_t n = a.size();
    if (n < 2) return;
    for (size_t i = 1, j = 0; i < n; ++i) {  // bit-reversal permutation
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                auto u = a[i + k];
                auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& z : a) z /= static_cast<double>(n);
}

inline size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace detail

inline Sinogram radon_forward(const Image& img, const Geometry& g) {
    check_shape(img, g.image_shape(), "radon_forward: image");
    Sinogram sino = Sinogram::Zero(g.n_angles(), g.n_detectors);
    const Vec x = flatten(img);
    for (int ia = 0; ia < g.n_angles(); ++ia)
        for (int m = 0; m < g.n_detectors; ++m) {
            double acc = 0.0;
            detail::for_each_ray_weight(g, ia, m,
                                        [&](int idx, double w) { acc += w * x[idx]; });
            sino(ia, m) = acc;
        }
    return sino;
}

inline Image radon_adjoint(const Sinogram& sino, const Geometry& g) {
    check_shape(sino, g.sinogram_shape(), "radon_adjoint: sinogram");
    Vec x = Vec::Zero(static_cast<long>(g.image_size) * g.image_size);
    for (int ia = 0; ia < g.n_angles(); ++ia)
        for (int m = 0; m < g.n_detectors; ++m) {
            double v = sino(ia, m);
            if (v == 0.0) continue;
            detail::for_each_ray_weight(g, ia, m, [&](int idx, double w) { x[idx] += w * v; });
        }
    return unflatten(x, g.image_size, g.image_size);
}

// Ram-Lak filtering of each angle row: zero-pad to the next power of two past
// 2 * n_detectors (suppresses circular wraparound), multiply by |xi|/(4 pi) in
// the Fourier domain up to the detector Nyquist frequency, transform back.
inline Sinogram ramp_filter_rows(const Sinogram& sino, const Geometry& g) {
    check_shape(sino, g.sinogram_shape(), "ramp_filter_rows: sinogram");
    const int ns = g.n_detectors;
    const size_t padded = detail::next_pow2(static_cast<size_t>(2 * ns));
    const double ds = g.detector_spacing();

    // |xi_k| / (4 pi) with xi_k = 2 pi k / (padded * ds)
    std::vector<double> ramp(padded);
    for (size_t k = 0; k <= padded / 2; ++k)
        ramp[k] = static_cast<double>(k) / (2.0 * static_cast<double>(padded) * ds);
    for (size_t k = padded / 2 + 1; k < padded; ++k) ramp[k] = ramp[padded - k];

    Sinogram out(g.n_angles(), ns);
    std::vector<std::complex<double>> row(padded);
    for (int ia = 0; ia < g.n_angles(); ++ia) {
        std::fill(row.begin(), row.end(), std::complex<double>(0.0, 0.0));
        for (int m = 0; m < ns; ++m) row[m] = sino(ia, m);
        detail::fft_pow2(row, false);
        for (size_t k = 0; k < padded; ++k) row[k] *= ramp[k];
        detail::fft_pow2(row, true);
        for (int m = 0; m < ns; ++m) out(ia, m) = row[m].real();
    }
    return out;
}

// Backprojection quadrature constant that turns the transpose A' into the
// discrete K*: d_theta * d_s for the sinogram measure, 1/h^2 for the image
// measure. The Riesz factor 1/(4 pi) already sits in the ramp.
inline double fbp_scaling(const Geometry& g) {
    double h = g.pixel_width();
    return g.angle_spacing() * g.detector_spacing() / (h * h);
}

// Filtered backprojection A#: the classical approximate inverse, and the
// surrogate back-mapping used by the data-proximal architecture in paper
// mode. Linear in the data.
inline Image fbp(const Sinogram& sino, const Geometry& g) {
    return fbp_scaling(g) * radon_adjoint(ramp_filter_rows(sino, g), g);
}

// Adjoint of fbp: the row filter is self-adjoint (real even multiplier,
// pad-then-crop is transpose of itself around it), so only the order flips.
inline Sinogram fbp_adjoint(const Image& img, const Geometry& g) {
    return fbp_scaling(g) * ramp_filter_rows(radon_forward(img, g), g);
}

inline linop::OperatorHandle make_radon_operator(const Geometry& g) {
    g.validate();
    return linop::OperatorHandle{
        g.image_shape(), g.sinogram_shape(),
        [g](const Vec& x) {
            return flatten(radon_forward(unflatten(x, g.image_size, g.image_size), g));
        },
        [g](const Vec& y) {
            return flatten(radon_adjoint(unflatten(y, g.n_angles(), g.n_detectors), g));
        }};
}

}  // namespace dpnet::tomo
