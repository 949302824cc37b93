#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "promptvar/errors.hpp"

namespace promptvar::nn {

// Dense row-major matrix of doubles. Vectors are 1×n tensors.
class Tensor2 {
public:
    Tensor2() = default;
    Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_str(rows_, cols_));
    }
    Tensor2(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw DimensionError("ragged tensor literal");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Tensor2 zeros_like(const Tensor2& t) { return Tensor2(t.rows_, t.cols_); }
    static Tensor2 row_vector(std::span<const double> v) {
        return Tensor2(1, v.size(), std::vector<double>(v.begin(), v.end()));
    }
    static Tensor2 identity(std::size_t n) {
        Tensor2 t(n, n);
        for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
        return t;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    Tensor2& operator+=(const Tensor2& o) {
        require_same_shape(*this, o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Tensor2& operator-=(const Tensor2& o) {
        require_same_shape(*this, o, "-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Tensor2& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    std::string shape() const { return shape_str(rows_, cols_); }

    static std::string shape_str(std::size_t r, std::size_t c) {
        return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
    }

    static void require_same_shape(const Tensor2& a, const Tensor2& b, const char* op) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            throw DimensionError(std::string(op) + ": shape mismatch " + a.shape() + " vs " + b.shape());
    }

    friend bool operator==(const Tensor2&, const Tensor2&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Tensor2 operator+(Tensor2 a, const Tensor2& b) { return a += b; }
inline Tensor2 operator-(Tensor2 a, const Tensor2& b) { return a -= b; }
inline Tensor2 operator*(Tensor2 a, double s) { return a *= s; }
inline Tensor2 operator*(double s, Tensor2 a) { return a *= s; }

// a[m×k] · b[k×n]
inline Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: shape mismatch " + a.shape() + " x " + b.shape());
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor2 out(m, n);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = po + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

// aᵀ[k×m]ᵀ · b[k×n] -> [m×n]
inline Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
    if (a.rows() != b.rows())
        throw DimensionError("matmul_tn: shape mismatch " + a.shape() + "^T x " + b.shape());
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    Tensor2 out(m, n);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = pa + p * m;
        const double* brow = pb + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            double* orow = po + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

// a[m×k] · bᵀ[n×k]ᵀ -> [m×n]
inline Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
    if (a.cols() != b.cols())
        throw DimensionError("matmul_nt: shape mismatch " + a.shape() + " x " + b.shape() + "^T");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Tensor2 out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const auto ar = a.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const auto br = b.row(j);
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
            out(i, j) = s;
        }
    }
    return out;
}

inline Tensor2 transpose(const Tensor2& a) {
    Tensor2 t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline Tensor2 hadamard(const Tensor2& a, const Tensor2& b) {
    Tensor2::require_same_shape(a, b, "hadamard");
    Tensor2 out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

// Adds a 1×c row to every row of x.
inline void add_row_broadcast(Tensor2& x, const Tensor2& row) {
    if (row.rows() != 1 || row.cols() != x.cols())
        throw DimensionError("row broadcast: shape mismatch " + x.shape() + " + " + row.shape());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto r = x.row(i);
        for (std::size_t j = 0; j < x.cols(); ++j) r[j] += row[j];
    }
}

inline Tensor2 column_sums(const Tensor2& x) {
    Tensor2 s(1, x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) s[j] += x(i, j);
    return s;
}

inline Tensor2 mean_rows(const Tensor2& x) {
    Tensor2 s = column_sums(x);
    if (x.rows() > 0) s *= 1.0 / static_cast<double>(x.rows());
    return s;
}

// Stacks a on top of b.
inline Tensor2 vstack(const Tensor2& a, const Tensor2& b) {
    if (a.cols() != b.cols())
        throw DimensionError("vstack: width mismatch " + a.shape() + " vs " + b.shape());
    Tensor2 out(a.rows() + b.rows(), a.cols());
    std::copy(a.data().begin(), a.data().end(), out.data().begin());
    std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

inline Tensor2 slice_rows(const Tensor2& x, std::size_t begin, std::size_t end) {
    if (begin > end || end > x.rows())
        throw DimensionError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                             ") out of " + x.shape());
    Tensor2 out(end - begin, x.cols());
    std::copy(x.data().begin() + static_cast<std::ptrdiff_t>(begin * x.cols()),
              x.data().begin() + static_cast<std::ptrdiff_t>(end * x.cols()), out.data().begin());
    return out;
}

inline Tensor2 slice_cols(const Tensor2& x, std::size_t begin, std::size_t end) {
    if (begin > end || end > x.cols()) throw DimensionError("slice_cols: range out of " + x.shape());
    Tensor2 out(x.rows(), end - begin);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = x(i, j);
    return out;
}

inline void set_cols(Tensor2& x, std::size_t begin, const Tensor2& block) {
    if (block.rows() != x.rows() || begin + block.cols() > x.cols())
        throw DimensionError("set_cols: block " + block.shape() + " does not fit " + x.shape());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < block.cols(); ++j) x(i, begin + j) = block(i, j);
}

inline void set_rows(Tensor2& x, std::size_t begin, const Tensor2& block) {
    if (block.cols() != x.cols() || begin + block.rows() > x.rows())
        throw DimensionError("set_rows: block " + block.shape() + " does not fit " + x.shape());
    std::copy(block.data().begin(), block.data().end(), x.data().begin() + static_cast<std::ptrdiff_t>(begin * x.cols()));
}

inline double sum(const Tensor2& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    return s;
}

inline double frobenius(const Tensor2& x) {
    double s = 0.0;
    for (double v : x.data()) s += v * v;
    return std::sqrt(s);
}

inline double max_abs_diff(const Tensor2& a, const Tensor2& b) {
    Tensor2::require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Row-wise softmax with per-row max subtraction.
inline Tensor2 softmax_rows(const Tensor2& x) {
    Tensor2 out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto in = x.row(i);
        auto o = out.row(i);
        const double mx = *std::max_element(in.begin(), in.end());
        double z = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            o[j] = std::exp(in[j] - mx);
            z += o[j];
        }
        for (double& v : o) v /= z;
    }
    return out;
}

// Backward of softmax_rows given its output y and upstream grad dy.
inline Tensor2 softmax_rows_backward(const Tensor2& y, const Tensor2& dy) {
    Tensor2 dx(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.rows(); ++i) {
        const auto yr = y.row(i);
        const auto gr = dy.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
        auto o = dx.row(i);
        for (std::size_t j = 0; j < yr.size(); ++j) o[j] = yr[j] * (gr[j] - dot);
    }
    return dx;
}

inline std::string to_string(const Tensor2& t) {
    std::ostringstream os;
    os << t.shape() << "\n";
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.cols(); ++j) os << (j ? " " : "") << t(i, j);
        os << "\n";
    }
    return os.str();
}

}  // namespace promptvar::nn
