#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "craft/error.hpp"

namespace craft {

// Dense row-major matrix. Real is float for training, double in
// gradient-check mode.
template <typename Real>
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Real> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, Real(0)) {}

    Real& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    Real operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return data.size(); }

    static Mat zeros(std::size_t r, std::size_t c) { return Mat(r, c); }

    static Mat uniform(std::size_t r, std::size_t c, Real lo, Real hi, std::mt19937& rng) {
        Mat m(r, c);
        std::uniform_real_distribution<double> dist(static_cast<double>(lo),
                                                    static_cast<double>(hi));
        for (auto& v : m.data) v = static_cast<Real>(dist(rng));
        return m;
    }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    void fill(Real v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (Real v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    Real squared_norm() const {
        Real s = 0;
        for (Real v : data) s += v * v;
        return s;
    }
};

// y += W * x for column vectors (x: cols x 1, y: rows x 1).
template <typename Real>
inline void matvec_accum(const Mat<Real>& w, const Mat<Real>& x, Mat<Real>& y) {
    for (std::size_t i = 0; i < w.rows; ++i) {
        Real s = 0;
        const Real* wr = &w.data[i * w.cols];
        for (std::size_t j = 0; j < w.cols; ++j) s += wr[j] * x.data[j];
        y.data[i] += s;
    }
}

inline void check_shape(bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::numeric, "dimension mismatch: " + what);
}

}  // namespace craft
