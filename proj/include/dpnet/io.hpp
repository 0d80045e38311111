#pragma once

#include <dpnet/common.hpp>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace dpnet::io {

static_assert(std::endian::native == std::endian::little,
              "PXR1 files are little-endian; big-endian hosts are unsupported");

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingFileError : IoError {
    explicit MissingFileError(const std::string& path) : IoError("missing file: " + path) {}
};
struct CorruptHeaderError : IoError {
    explicit CorruptHeaderError(const std::string& msg) : IoError("corrupt file: " + msg) {}
};
struct ShapeMismatchError : IoError {
    explicit ShapeMismatchError(const std::string& msg) : IoError("shape mismatch: " + msg) {}
};

// N-dimensional double array, row-major. This is the unit of the PXR1 file
// format: magic "PXR1", u32 rank, u32 dims[rank], then float64 payload.
struct NdArray {
    std::vector<uint32_t> dims;
    std::vector<double> data;

    size_t element_count() const {
        size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

inline void write_array(const std::string& path, const NdArray& a) {
    if (a.data.size() != a.element_count())
        throw std::invalid_argument("write_array: dims/payload disagree");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write("PXR1", 4);
    uint32_t rank = static_cast<uint32_t>(a.dims.size());
    f.write(reinterpret_cast<const char*>(&rank), 4);
    f.write(reinterpret_cast<const char*>(a.dims.data()), 4 * rank);
    f.write(reinterpret_cast<const char*>(a.data.data()),
            static_cast<std::streamsize>(8 * a.data.size()));
    if (!f) throw IoError("short write: " + path);
}

inline NdArray read_array(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MissingFileError(path);
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "PXR1", 4) != 0)
        throw CorruptHeaderError(path + ": bad magic");
    uint32_t rank = 0;
    if (!f.read(reinterpret_cast<char*>(&rank), 4) || rank > 8)
        throw CorruptHeaderError(path + ": bad rank");
    NdArray a;
    a.dims.resize(rank);
    if (!f.read(reinterpret_cast<char*>(a.dims.data()), 4 * rank))
        throw CorruptHeaderError(path + ": truncated dims");
    size_t n = a.element_count();
    if (n > (size_t{1} << 32)) throw CorruptHeaderError(path + ": implausible size");
    a.data.resize(n);
    if (!f.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(8 * n)))
        throw CorruptHeaderError(path + ": truncated payload");
    return a;
}

// read_array + dims check against the caller's expectation
inline NdArray read_array(const std::string& path, const std::vector<uint32_t>& expect_dims) {
    NdArray a = read_array(path);
    if (a.dims != expect_dims) {
        std::string got, want;
        for (auto d : a.dims) got += std::to_string(d) + " ";
        for (auto d : expect_dims) want += std::to_string(d) + " ";
        throw ShapeMismatchError(path + ": dims [ " + got + "] vs expected [ " + want + "]");
    }
    return a;
}

inline NdArray from_matrix(const Mat& m) {
    NdArray a;
    a.dims = {static_cast<uint32_t>(m.rows()), static_cast<uint32_t>(m.cols())};
    a.data.resize(m.size());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) a.data[static_cast<size_t>(i) * m.cols() + j] = m(i, j);
    return a;
}

inline Mat to_matrix(const NdArray& a) {
    if (a.dims.size() != 2) throw ShapeMismatchError("expected rank-2 array");
    return unflatten(Eigen::Map<const Vec>(a.data.data(), static_cast<long>(a.data.size())),
                     static_cast<int>(a.dims[0]), static_cast<int>(a.dims[1]));
}

// Stack of equally shaped matrices as one rank-3 array.
inline NdArray from_stack(const std::vector<Mat>& ms) {
    if (ms.empty()) return NdArray{{0, 0, 0}, {}};
    NdArray a;
    a.dims = {static_cast<uint32_t>(ms.size()), static_cast<uint32_t>(ms[0].rows()),
              static_cast<uint32_t>(ms[0].cols())};
    a.data.reserve(ms.size() * ms[0].size());
    for (const auto& m : ms) {
        if (m.rows() != ms[0].rows() || m.cols() != ms[0].cols())
            throw std::invalid_argument("from_stack: ragged stack");
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) a.data.push_back(m(i, j));
    }
    return a;
}

inline std::vector<Mat> to_stack(const NdArray& a) {
    if (a.dims.size() != 3) throw ShapeMismatchError("expected rank-3 array");
    int n = static_cast<int>(a.dims[0]), r = static_cast<int>(a.dims[1]),
        c = static_cast<int>(a.dims[2]);
    std::vector<Mat> out(n, Mat(r, c));
    size_t k = 0;
    for (int s = 0; s < n; ++s)
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) out[s](i, j) = a.data[k++];
    return out;
}

// 16-bit PGM, linear min-max scaling. The scaling is recorded in a header
// comment so values can be mapped back if needed.
inline void write_pgm16(const std::string& path, const Mat& img) {
    double lo = img.minCoeff(), hi = img.maxCoeff();
    double scale = (hi > lo) ? 65535.0 / (hi - lo) : 0.0;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    char head[160];
    std::snprintf(head, sizeof(head), "P5\n# linear min-max scaling: min=%.12g max=%.12g\n%d %d\n65535\n",
                  lo, hi, static_cast<int>(img.cols()), static_cast<int>(img.rows()));
    f << head;
    for (int i = 0; i < img.rows(); ++i)
        for (int j = 0; j < img.cols(); ++j) {
            auto v = static_cast<uint32_t>(std::lround((img(i, j) - lo) * scale));
            v = std::min<uint32_t>(v, 65535);
            // PGM payload is big-endian
            unsigned char b[2] = {static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v & 0xff)};
            f.write(reinterpret_cast<const char*>(b), 2);
        }
    if (!f) throw IoError("short write: " + path);
}

inline std::string format_g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// CSV with a header row; numeric cells carry 12 significant digits.
class CsvWriter {
   public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : f_(path) {
        if (!f_) throw IoError("cannot open for writing: " + path);
        for (size_t i = 0; i < header.size(); ++i) f_ << (i ? "," : "") << header[i];
        f_ << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) f_ << (i ? "," : "") << cells[i];
        f_ << "\n";
    }

   private:
    std::ofstream f_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MissingFileError(path);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

inline void spit(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << content;
}

}  // namespace dpnet::io
