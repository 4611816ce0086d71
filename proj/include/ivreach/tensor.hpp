#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ivreach/errors.hpp"

namespace ivreach {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

// NumPy-style broadcast of two shapes (trailing dimensions aligned).
inline Shape broadcast_shapes(const Shape& a, const Shape& b) {
    const std::size_t r = std::max(a.size(), b.size());
    Shape out(r, 1);
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
        const std::size_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (da == db || da == 1 || db == 1) {
            out[r - 1 - i] = std::max(da, db);
        } else {
            throw ShapeMismatch("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
        }
    }
    return out;
}

// Flat-index map from an output shape onto a (broadcast) operand shape.
inline std::vector<std::size_t> broadcast_index_map(const Shape& out, const Shape& in) {
    const std::size_t n = shape_size(out);
    std::vector<std::size_t> map(n);
    const std::size_t r = out.size();
    // operand strides aligned to the output's trailing axes, 0 on broadcast axes
    std::vector<std::size_t> stride(r, 0);
    std::size_t acc = 1;
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t axis = r - 1 - i;
        const std::size_t din = i < in.size() ? in[in.size() - 1 - i] : 1;
        if (din != 1 && din != out[axis])
            throw ShapeMismatch("cannot broadcast " + shape_str(in) + " into " + shape_str(out));
        stride[axis] = (din == 1) ? 0 : acc;
        acc *= din;
    }
    std::vector<std::size_t> idx(r, 0);
    for (std::size_t f = 0; f < n; ++f) {
        std::size_t src = 0;
        for (std::size_t axis = 0; axis < r; ++axis) src += idx[axis] * stride[axis];
        map[f] = src;
        for (std::size_t axis = r; axis-- > 0;) {
            if (++idx[axis] < out[axis]) break;
            idx[axis] = 0;
        }
    }
    return map;
}

// Dense row-major numeric array of arbitrary (small) rank.
template <class T>
class TensorT {
public:
    TensorT() : shape_{0} {}
    explicit TensorT(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_)) {}
    TensorT(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_size(shape_))
            throw ShapeMismatch("data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_str(shape_));
    }

    static TensorT scalar(T v) { return TensorT(Shape{}, std::vector<T>{std::move(v)}); }
    static TensorT vec(std::vector<T> v) {
        Shape s{v.size()};
        return TensorT(std::move(s), std::move(v));
    }
    static TensorT mat(std::size_t rows, std::size_t cols, std::vector<T> rowmajor) {
        return TensorT(Shape{rows, cols}, std::move(rowmajor));
    }
    static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }
    static TensorT full(Shape shape, const T& v) {
        TensorT t(std::move(shape));
        for (auto& x : t.data_) x = v;
        return t;
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    T& operator()(std::size_t i) { return data_[i]; }
    const T& operator()(std::size_t i) const { return data_[i]; }
    T& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    std::size_t dim(std::size_t axis) const { return shape_[axis]; }

    TensorT reshaped(Shape s) const {
        if (shape_size(s) != size())
            throw ShapeMismatch("reshape " + shape_str(shape_) + " -> " + shape_str(s));
        return TensorT(std::move(s), data_);
    }

    bool operator==(const TensorT& o) const { return shape_ == o.shape_ && data_ == o.data_; }

private:
    Shape shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<double>;

template <class T, class F>
TensorT<T> tensor_zip(const TensorT<T>& a, const TensorT<T>& b, F&& f) {
    if (a.same_shape(b)) {
        TensorT<T> out(a.shape());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
        return out;
    }
    const Shape os = broadcast_shapes(a.shape(), b.shape());
    const auto ma = broadcast_index_map(os, a.shape());
    const auto mb = broadcast_index_map(os, b.shape());
    TensorT<T> out(os);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[ma[i]], b[mb[i]]);
    return out;
}

template <class T, class F>
TensorT<T> tensor_map(const TensorT<T>& a, F&& f) {
    TensorT<T> out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

template <class T>
TensorT<T> operator+(const TensorT<T>& a, const TensorT<T>& b) {
    return tensor_zip(a, b, [](const T& x, const T& y) { return x + y; });
}
template <class T>
TensorT<T> operator-(const TensorT<T>& a, const TensorT<T>& b) {
    return tensor_zip(a, b, [](const T& x, const T& y) { return x - y; });
}
template <class T>
TensorT<T> operator*(const TensorT<T>& a, const TensorT<T>& b) {
    return tensor_zip(a, b, [](const T& x, const T& y) { return x * y; });
}
template <class T>
TensorT<T> operator-(const TensorT<T>& a) {
    return tensor_map(a, [](const T& x) { return -x; });
}
template <class T>
TensorT<T> operator*(double s, const TensorT<T>& a) {
    return tensor_map(a, [&](const T& x) { return T(s) * x; });
}

// Matrix product with rank promotion: vector operands are treated as a
// one-row / one-column matrix and the unit axes are squeezed from the result.
template <class T>
TensorT<T> tensor_matmul(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() == 0 || b.rank() == 0 || a.rank() > 2 || b.rank() > 2)
        throw ShapeMismatch("matmul requires rank-1 or rank-2 operands, got " +
                            shape_str(a.shape()) + " @ " + shape_str(b.shape()));
    const bool avec = a.rank() == 1, bvec = b.rank() == 1;
    const std::size_t m = avec ? 1 : a.dim(0);
    const std::size_t p = avec ? a.dim(0) : a.dim(1);
    const std::size_t n = bvec ? 1 : b.dim(1);
    if (p != b.dim(0))
        throw ShapeMismatch("matmul inner dimensions " + shape_str(a.shape()) + " @ " +
                            shape_str(b.shape()));
    TensorT<T> out(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            T acc{};
            for (std::size_t k = 0; k < p; ++k) acc = acc + a[i * p + k] * b[k * n + j];
            out(i, j) = acc;
        }
    if (avec && bvec) return out.reshaped(Shape{});
    if (avec) return out.reshaped(Shape{n});
    if (bvec) return out.reshaped(Shape{m});
    return out;
}

}  // namespace ivreach
