#pragma once

// Dense vector/matrix primitives, activations, loss, optimizers and a
// central-difference gradient oracle. Everything is 64-bit and row-major.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pgmn {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct zeros_like_t {
    explicit zeros_like_t() = default;
};
inline constexpr zeros_like_t zeros_like{};

struct Vec64 {
    std::vector<double> values;

    Vec64() = default;
    explicit Vec64(std::size_t n, double fill = 0.0) : values(n, fill) {}
    Vec64(std::initializer_list<double> init) : values(init) {}
    explicit Vec64(std::vector<double> v) : values(std::move(v)) {}
    Vec64(zeros_like_t, const Vec64& shape) : values(shape.size(), 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    std::vector<std::span<double>> tensors() { return {std::span<double>(values)}; }
    std::vector<std::span<const double>> tensors() const { return {std::span<const double>(values)}; }

    bool operator==(const Vec64&) const = default;
};

struct Mat64 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Mat64() = default;
    Mat64(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
    Mat64(std::size_t r, std::size_t c, std::vector<double> v) : rows(r), cols(c), values(std::move(v))
    {
        if (values.size() != rows * cols) {
            throw DimensionError("Mat64: " + std::to_string(values.size()) + " values for shape "
                                 + std::to_string(rows) + "x" + std::to_string(cols));
        }
    }
    Mat64(zeros_like_t, const Mat64& shape) : Mat64(shape.rows, shape.cols) {}

    static Mat64 identity(std::size_t n)
    {
        Mat64 m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

    std::vector<std::span<double>> tensors() { return {std::span<double>(values)}; }
    std::vector<std::span<const double>> tensors() const { return {std::span<const double>(values)}; }

    bool operator==(const Mat64&) const = default;
};

// Anything exposing its learnable storage as a list of flat spans.
template <typename T>
concept TensorPack = requires(T& t, const T& ct) {
    { t.tensors() } -> std::convertible_to<std::vector<std::span<double>>>;
    { ct.tensors() } -> std::convertible_to<std::vector<std::span<const double>>>;
};

namespace detail {

inline std::string shape_str(std::size_t r, std::size_t c)
{
    return std::to_string(r) + "x" + std::to_string(c);
}

template <TensorPack A, TensorPack B>
void require_same_shape(const A& a, const B& b, const char* what)
{
    const auto ta = a.tensors();
    const auto tb = b.tensors();
    if (ta.size() != tb.size()) {
        throw DimensionError(std::string(what) + ": tensor count " + std::to_string(ta.size()) + " vs "
                             + std::to_string(tb.size()));
    }
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i].size() != tb[i].size()) {
            throw DimensionError(std::string(what) + ": tensor " + std::to_string(i) + " has "
                                 + std::to_string(ta[i].size()) + " entries vs "
                                 + std::to_string(tb[i].size()));
        }
    }
}

} // namespace detail

/// Wx + b.
inline Vec64 affine(const Mat64& w, std::span<const double> x, std::span<const double> b)
{
    if (w.cols != x.size() || w.rows != b.size()) {
        throw DimensionError("affine: W is " + detail::shape_str(w.rows, w.cols) + ", x has "
                             + std::to_string(x.size()) + ", b has " + std::to_string(b.size()));
    }
    Vec64 out(w.rows);
    const double* wp = w.values.data();
    for (std::size_t r = 0; r < w.rows; ++r) {
        double acc = b[r];
        const double* wr = wp + r * w.cols;
        for (std::size_t c = 0; c < w.cols; ++c) {
            acc += wr[c] * x[c];
        }
        out[r] = acc;
    }
    return out;
}

inline Vec64 affine(const Mat64& w, const Vec64& x, const Vec64& b)
{
    return affine(w, std::span<const double>(x.values), std::span<const double>(b.values));
}

inline double dot(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw DimensionError("dot: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

inline Vec64 relu(Vec64 x)
{
    for (double& v : x.values) {
        v = v > 0.0 ? v : 0.0;
    }
    return x;
}

/// Subgradient convention: 0 at the kink.
inline double relu_grad(double pre) noexcept
{
    return pre > 0.0 ? 1.0 : 0.0;
}

inline double mse(double y, double yhat) noexcept
{
    const double r = y - yhat;
    return r * r;
}

inline bool all_finite(std::span<const double> xs) noexcept
{
    for (double v : xs) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

template <TensorPack P>
bool all_finite(const P& p)
{
    for (auto t : p.tensors()) {
        if (!all_finite(t)) {
            return false;
        }
    }
    return true;
}

template <TensorPack P, TensorPack G>
void sgd_step(P& params, const G& grads, double eta)
{
    if (!(eta > 0.0)) {
        throw std::invalid_argument("sgd_step: learning rate must be positive");
    }
    detail::require_same_shape(params, grads, "sgd_step");
    auto pt = params.tensors();
    const auto gt = grads.tensors();
    for (std::size_t i = 0; i < pt.size(); ++i) {
        for (std::size_t j = 0; j < pt[i].size(); ++j) {
            pt[i][j] -= eta * gt[i][j];
        }
    }
}

struct AdamState {
    double eta = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long step = 0;
    std::vector<std::vector<double>> first;
    std::vector<std::vector<double>> second;

    AdamState() = default;
    explicit AdamState(double learning_rate) : eta(learning_rate) {}
};

/// Bias-corrected Adam. Moment buffers are sized lazily on the first call.
template <TensorPack P, TensorPack G>
void adam_step(P& params, const G& grads, AdamState& state)
{
    detail::require_same_shape(params, grads, "adam_step");
    if (state.step < 0) {
        throw std::invalid_argument("adam_step: negative step counter");
    }
    auto pt = params.tensors();
    const auto gt = grads.tensors();
    if (state.first.empty()) {
        for (auto t : pt) {
            state.first.emplace_back(t.size(), 0.0);
            state.second.emplace_back(t.size(), 0.0);
        }
    }
    if (state.first.size() != pt.size()) {
        throw DimensionError("adam_step: optimizer state tracks " + std::to_string(state.first.size())
                             + " tensors, parameters have " + std::to_string(pt.size()));
    }
    state.step += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < pt.size(); ++i) {
        auto& m = state.first[i];
        auto& v = state.second[i];
        if (m.size() != pt[i].size()) {
            throw DimensionError("adam_step: moment shape mismatch on tensor " + std::to_string(i));
        }
        for (std::size_t j = 0; j < pt[i].size(); ++j) {
            const double g = gt[i][j];
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            pt[i][j] -= state.eta * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

/// Central differences (f(θ+h e_i) − f(θ−h e_i)) / 2h over every entry of
/// every tensor. G must be the pack type itself or constructible from
/// (zeros_like, params).
template <TensorPack G, TensorPack P, typename F>
    requires std::invocable<F&, const P&>
G finite_diff_grad(F&& f, P params, double h)
{
    if (!(h > 0.0)) {
        throw std::invalid_argument("finite_diff_grad: step must be positive");
    }
    G grads(zeros_like, params);
    auto pt = params.tensors();
    auto gt = grads.tensors();
    for (std::size_t i = 0; i < pt.size(); ++i) {
        for (std::size_t j = 0; j < pt[i].size(); ++j) {
            const double saved = pt[i][j];
            pt[i][j] = saved + h;
            const double up = f(std::as_const(params));
            pt[i][j] = saved - h;
            const double down = f(std::as_const(params));
            pt[i][j] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                std::ostringstream os;
                os << "finite_diff_grad: non-finite evaluation at tensor " << i << " entry " << j;
                throw NumericError(os.str());
            }
            gt[i][j] = (up - down) / (2.0 * h);
        }
    }
    return grads;
}

template <TensorPack P, typename F>
    requires std::invocable<F&, const P&>
P finite_diff_grad(F&& f, const P& params, double h)
{
    return finite_diff_grad<P, P>(std::forward<F>(f), params, h);
}

} // namespace pgmn
