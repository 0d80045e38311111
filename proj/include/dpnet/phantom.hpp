#pragma once

#include <dpnet/common.hpp>
#include <dpnet/io.hpp>
#include <dpnet/rng.hpp>
#include <dpnet/tomo.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace dpnet::phantom {

struct Ellipse {
    double cx = 0.0, cy = 0.0;      // center in [-1,1]^2
    double a = 0.5, b = 0.5;        // semi-axes
    double rotation = 0.0;          // radians
    double intensity = 1.0;         // additive

    bool contains(double x, double y) const {
        double dx = x - cx, dy = y - cy;
        double c = std::cos(rotation), s = std::sin(rotation);
        double u = (c * dx + s * dy) / a;
        double v = (-s * dx + c * dy) / b;
        return u * u + v * v <= 1.0;
    }

    // sufficient condition for support inside the disk of radius `r`
    bool inside_disk(double r) const {
        return std::hypot(cx, cy) + std::max(a, b) <= r;
    }
};

// Regular grid of small dots, the fine features that distinguish how well a
// method recovers detail.
struct DotGrid {
    bool enabled = false;
    double cx = 0.0, cy = 0.0;
    double pitch = 0.12;
    double dot_radius = 0.025;
    double half_extent = 0.3;
    double intensity = 0.5;
};

struct EllipsePhantomSpec {
    std::vector<Ellipse> ellipses;
    DotGrid dots;
};

// Pixel value = sum of intensities of the shapes containing the pixel
// center, clamped to [0,1].
inline Image render_phantom(const EllipsePhantomSpec& spec, int n) {
    if (n < 2) throw std::invalid_argument("render_phantom: N must be >= 2");
    Image img = Image::Zero(n, n);
    double h = 2.0 / n;
    for (int i = 0; i < n; ++i) {
        double y = -1.0 + (i + 0.5) * h;
        for (int j = 0; j < n; ++j) {
            double x = -1.0 + (j + 0.5) * h;
            double v = 0.0;
            for (const auto& e : spec.ellipses)
                if (e.contains(x, y)) v += e.intensity;
            if (spec.dots.enabled) {
                double rx = x - spec.dots.cx, ry = y - spec.dots.cy;
                if (std::abs(rx) <= spec.dots.half_extent &&
                    std::abs(ry) <= spec.dots.half_extent && spec.dots.pitch > 0.0) {
                    double gx = std::round(rx / spec.dots.pitch) * spec.dots.pitch;
                    double gy = std::round(ry / spec.dots.pitch) * spec.dots.pitch;
                    if (std::hypot(rx - gx, ry - gy) <= spec.dots.dot_radius)
                        v += spec.dots.intensity;
                }
            }
            img(i, j) = std::min(1.0, std::max(0.0, v));
        }
    }
    return img;
}

// Random Shepp-Logan-like spec: a skull ellipse plus 4-10 interior ellipses,
// optionally a dot grid. Unit-disk support is enforced by rejection.
inline EllipsePhantomSpec sample_random_phantom(uint64_t seed) {
    rng::Prng prng(seed);
    EllipsePhantomSpec spec;

    Ellipse skull;
    skull.cx = prng.uniform(-0.04, 0.04);
    skull.cy = prng.uniform(-0.04, 0.04);
    skull.a = prng.uniform(0.62, 0.82);
    skull.b = prng.uniform(0.62, 0.82);
    skull.rotation = prng.uniform(0.0, M_PI);
    skull.intensity = prng.uniform(0.35, 0.55);
    spec.ellipses.push_back(skull);

    // interior, confined to the skull by a margin
    int count = 4 + static_cast<int>(prng.integer(7));
    double interior = 0.82 * std::min(skull.a, skull.b);
    for (int k = 0; k < count; ++k) {
        Ellipse e;
        for (int tries = 0; tries < 64; ++tries) {
            double rad = interior * std::sqrt(prng.uniform());
            double phi = prng.uniform(0.0, 2.0 * M_PI);
            e.cx = skull.cx + rad * std::cos(phi);
            e.cy = skull.cy + rad * std::sin(phi);
            e.a = prng.uniform(0.05, 0.30);
            e.b = prng.uniform(0.05, 0.30);
            e.rotation = prng.uniform(0.0, M_PI);
            e.intensity = prng.uniform(-0.35, 0.45);
            if (e.inside_disk(0.98)) break;
            e.a = e.b = 0.05;  // shrink until it fits
        }
        spec.ellipses.push_back(e);
    }

    if (prng.uniform() < 0.5) {
        spec.dots.enabled = true;
        spec.dots.cx = skull.cx + prng.uniform(-0.15, 0.15);
        spec.dots.cy = skull.cy + prng.uniform(-0.15, 0.15);
        spec.dots.pitch = prng.uniform(0.10, 0.16);
        spec.dots.dot_radius = prng.uniform(0.02, 0.035);
        spec.dots.half_extent = prng.uniform(0.18, 0.30);
        spec.dots.intensity = prng.uniform(0.25, 0.5);
    }
    return spec;
}

// y_i = A x_i + delta * eta_i with eta_i = ||A x_i||_inf * (i.i.d. standard
// normal per sinogram entry). eta is retained because the proximity bound
// beta is estimated from it.
struct NoiseModel {
    double delta = 0.05;
    uint64_t seed = 0;

    void validate() const {
        if (delta < 0.0) throw std::invalid_argument("noise: delta must be >= 0");
    }
};

struct Sample {
    Image x;
    Sinogram y_delta;
    Sinogram eta;
};

struct Dataset {
    tomo::Geometry geometry;
    NoiseModel noise;
    uint64_t seed = 0;
    std::vector<Sample> samples;
    std::vector<std::string> split;  // "train" / "test" per sample

    int size() const { return static_cast<int>(samples.size()); }

    std::vector<int> indices_of(const std::string& label) const {
        std::vector<int> idx;
        for (int i = 0; i < size(); ++i)
            if (split[i] == label) idx.push_back(i);
        return idx;
    }
};

inline Sample make_sample(const tomo::Geometry& geom, const NoiseModel& noise, uint64_t seed,
                          uint64_t index) {
    Sample s;
    s.x = render_phantom(sample_random_phantom(rng::derive_seed(seed, index)),
                         geom.image_size);
    Sinogram clean = tomo::radon_forward(s.x, geom);
    double scale = clean.cwiseAbs().maxCoeff();
    rng::Prng nprng(rng::derive_seed(noise.seed, index));
    s.eta = Sinogram(geom.n_angles(), geom.n_detectors);
    for (int i = 0; i < s.eta.rows(); ++i)
        for (int j = 0; j < s.eta.cols(); ++j) s.eta(i, j) = scale * nprng.normal();
    s.y_delta = clean + noise.delta * s.eta;
    return s;
}

inline Dataset make_dataset(int n, const tomo::Geometry& geom, const NoiseModel& noise,
                            uint64_t seed, int threads = 1) {
    if (n < 1) throw std::invalid_argument("make_dataset: n must be >= 1");
    geom.validate();
    noise.validate();
    Dataset d;
    d.geometry = geom;
    d.noise = noise;
    d.seed = seed;
    d.samples.resize(n);
    parallel_for(n, threads, [&](int i) {
        d.samples[i] = make_sample(geom, noise, seed, static_cast<uint64_t>(i));
    });
    d.split.assign(n, "train");
    return d;
}

inline void assign_split(Dataset& d, int n_train) {
    if (n_train < 0 || n_train > d.size())
        throw std::invalid_argument("assign_split: bad train count");
    for (int i = 0; i < d.size(); ++i) d.split[i] = i < n_train ? "train" : "test";
}

inline nlohmann::json geometry_to_json(const tomo::Geometry& g) {
    return {{"image_size", g.image_size},
            {"n_detectors", g.n_detectors},
            {"angles", g.angles}};
}

inline tomo::Geometry geometry_from_json(const nlohmann::json& j) {
    tomo::Geometry g;
    g.image_size = j.at("image_size").get<int>();
    g.n_detectors = j.at("n_detectors").get<int>();
    g.angles = j.at("angles").get<std::vector<double>>();
    g.validate();
    return g;
}

// Directory layout: manifest.json plus three PXR1 stacks (ground truths,
// noisy sinograms, noise realizations). Round trips are bit-exact.
inline void save_dataset(const std::string& dir, const Dataset& d) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<Mat> xs, ys, etas;
    for (const auto& s : d.samples) {
        xs.push_back(s.x);
        ys.push_back(s.y_delta);
        etas.push_back(s.eta);
    }
    io::write_array(dir + "/images.pxr", io::from_stack(xs));
    io::write_array(dir + "/sinograms.pxr", io::from_stack(ys));
    io::write_array(dir + "/noise.pxr", io::from_stack(etas));

    nlohmann::json manifest = {
        {"format", "dpnet-dataset-v1"},
        {"n", d.size()},
        {"geometry", geometry_to_json(d.geometry)},
        {"delta", d.noise.delta},
        {"noise_seed", d.noise.seed},
        {"seed", d.seed},
        {"split", d.split},
    };
    io::spit(dir + "/manifest.json", manifest.dump(2) + "\n");
}

inline Dataset load_dataset(const std::string& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(io::slurp(dir + "/manifest.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw io::CorruptHeaderError(dir + "/manifest.json: " + e.what());
    }
    Dataset d;
    try {
        d.geometry = geometry_from_json(manifest.at("geometry"));
        d.noise.delta = manifest.at("delta").get<double>();
        d.noise.seed = manifest.at("noise_seed").get<uint64_t>();
        d.seed = manifest.at("seed").get<uint64_t>();
        d.split = manifest.at("split").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw io::CorruptHeaderError(dir + "/manifest.json: " + e.what());
    }
    auto n = static_cast<uint32_t>(manifest.at("n").get<int>());
    auto nn = static_cast<uint32_t>(d.geometry.image_size);
    auto na = static_cast<uint32_t>(d.geometry.n_angles());
    auto ns = static_cast<uint32_t>(d.geometry.n_detectors);
    auto xs = io::to_stack(io::read_array(dir + "/images.pxr", {n, nn, nn}));
    auto ys = io::to_stack(io::read_array(dir + "/sinograms.pxr", {n, na, ns}));
    auto etas = io::to_stack(io::read_array(dir + "/noise.pxr", {n, na, ns}));
    if (d.split.size() != n)
        throw io::ShapeMismatchError(dir + ": split labels do not match sample count");
    d.samples.resize(n);
    for (uint32_t i = 0; i < n; ++i) d.samples[i] = Sample{xs[i], ys[i], etas[i]};
    return d;
}

}  // namespace dpnet::phantom
