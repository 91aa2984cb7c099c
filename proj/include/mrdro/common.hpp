#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrdro {

using Vec = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense row-major matrix. Small sizes only; no BLAS.
class Mat {
  public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    Vec row(std::size_t r) const {
        return Vec(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
                   data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_));
    }

    // y = A x
    Vec mul(const Vec& x) const {
        Vec y(rows_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < cols_; ++c) acc += (*this)(r, c) * x[c];
            y[r] = acc;
        }
        return y;
    }

    // y = A^T x
    Vec mul_transposed(const Vec& x) const {
        Vec y(cols_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) y[c] += (*this)(r, c) * x[r];
        return y;
    }

    bool operator==(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

enum class Norm { L1, L2, Linf };

inline double vector_norm(const Vec& v, Norm which) {
    switch (which) {
    case Norm::L1: {
        double acc = 0.0;
        for (double x : v) acc += std::abs(x);
        return acc;
    }
    case Norm::L2: {
        double acc = 0.0;
        for (double x : v) acc += x * x;
        return std::sqrt(acc);
    }
    case Norm::Linf: {
        double acc = 0.0;
        for (double x : v) acc = std::max(acc, std::abs(x));
        return acc;
    }
    }
    return 0.0;
}

inline const char* norm_name(Norm n) {
    switch (n) {
    case Norm::L1: return "l1";
    case Norm::L2: return "l2";
    case Norm::Linf: return "linf";
    }
    return "?";
}

inline Norm norm_from_name(const std::string& s) {
    if (s == "l1" || s == "L1") return Norm::L1;
    if (s == "l2" || s == "L2") return Norm::L2;
    if (s == "linf" || s == "Linf" || s == "LINF") return Norm::Linf;
    throw std::invalid_argument("unknown norm: " + s);
}

}  // namespace mrdro
