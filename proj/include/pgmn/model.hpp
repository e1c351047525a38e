#pragma once

// The fusion network: two projection streams (forecast value + availability
// mask), a shared learnable memory vector, and an aggregator emitting
// yhat = w_d + w_e + delta.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pgmn/numkit.hpp"

namespace pgmn {

struct PgmnDims {
    std::size_t d = 32;    // projection width
    std::size_t d_m = 16;  // memory width
    std::size_t d_z = 32;  // aggregator hidden width

    void validate() const
    {
        if (d < 1 || d_m < 1 || d_z < 1) {
            throw std::invalid_argument("PgmnDims: all widths must be >= 1");
        }
    }
    bool operator==(const PgmnDims&) const = default;
};

struct ParamRole;
struct GradRole;

/// Storage for every learnable tensor. Instantiated twice: once for the
/// parameters and once for their gradients, so the two cannot be mixed up.
template <typename Role>
struct PgmnTensors {
    PgmnDims dims;
    // When false the memory path is ablated: e is never read, W_pi3 and the
    // memory columns of W_zd/W_ze stay zero and receive no gradient.
    bool memory_unit = true;

    Mat64 w_d;
    Vec64 b_d;
    Mat64 w_e;
    Vec64 b_e;
    Vec64 memory;
    Mat64 w_zd;
    Vec64 b_zd;
    Mat64 w_ze;
    Vec64 b_ze;
    Vec64 w_pi1;
    double b_pi1 = 0.0;
    Vec64 w_pi2;
    double b_pi2 = 0.0;
    // Sized d_m: it multiplies the memory read-out, not a hidden layer.
    Vec64 w_pi3;
    double b_pi3 = 0.0;

    PgmnTensors() : PgmnTensors(PgmnDims{}) {}

    explicit PgmnTensors(const PgmnDims& dims_in)
        : dims(dims_in)
        , w_d(dims_in.d, 2)
        , b_d(dims_in.d)
        , w_e(dims_in.d, 2)
        , b_e(dims_in.d)
        , memory(dims_in.d_m)
        , w_zd(dims_in.d_z, dims_in.d + dims_in.d_m)
        , b_zd(dims_in.d_z)
        , w_ze(dims_in.d_z, dims_in.d + dims_in.d_m)
        , b_ze(dims_in.d_z)
        , w_pi1(dims_in.d_z)
        , w_pi2(dims_in.d_z)
        , w_pi3(dims_in.d_m)
    {
        dims_in.validate();
    }

    template <typename OtherRole>
    PgmnTensors(zeros_like_t, const PgmnTensors<OtherRole>& shape) : PgmnTensors(shape.dims)
    {
        memory_unit = shape.memory_unit;
    }

    /// Canonical tensor order; checkpoints and optimizer state depend on it.
    static constexpr std::array<const char*, 15> names = {
        "W_d", "b_d", "W_e", "b_e", "m", "W_zd", "b_zd", "W_ze", "b_ze",
        "W_pi1", "b_pi1", "W_pi2", "b_pi2", "W_pi3", "b_pi3"};

    std::vector<std::span<double>> tensors()
    {
        return {w_d.values, b_d.values, w_e.values, b_e.values, memory.values,
                w_zd.values, b_zd.values, w_ze.values, b_ze.values,
                w_pi1.values, std::span<double>(&b_pi1, 1), w_pi2.values,
                std::span<double>(&b_pi2, 1), w_pi3.values, std::span<double>(&b_pi3, 1)};
    }

    std::vector<std::span<const double>> tensors() const
    {
        auto& self = const_cast<PgmnTensors&>(*this);
        std::vector<std::span<const double>> out;
        for (auto s : self.tensors()) {
            out.emplace_back(s);
        }
        return out;
    }

    /// (rows, cols) per tensor in canonical order; vectors are n x 1, scalars 1 x 1.
    std::vector<std::pair<std::size_t, std::size_t>> shapes() const
    {
        const auto col = [](const Vec64& v) { return std::pair{v.size(), std::size_t{1}}; };
        const std::pair<std::size_t, std::size_t> one{1, 1};
        return {{w_d.rows, w_d.cols}, col(b_d), {w_e.rows, w_e.cols}, col(b_e), col(memory),
                {w_zd.rows, w_zd.cols}, col(b_zd), {w_ze.rows, w_ze.cols}, col(b_ze),
                col(w_pi1), one, col(w_pi2), one, col(w_pi3), one};
    }

    void set_zero()
    {
        for (auto t : tensors()) {
            std::fill(t.begin(), t.end(), 0.0);
        }
    }

    bool operator==(const PgmnTensors&) const = default;
};

using PgmnParams = PgmnTensors<ParamRole>;
using Gradients = PgmnTensors<GradRole>;

struct MaskedSample {
    double x_d = 0.0;
    int m_d = 1;
    double x_e = 0.0;
    int m_e = 1;
    std::optional<double> y;
    bool y_is_proxy = false;
};

/// Training target: the actual if present, else the physics forecast when the
/// sample is flagged as proxy-supervised.
inline double resolve_target(const MaskedSample& s)
{
    if (s.y) {
        return *s.y;
    }
    if (s.y_is_proxy) {
        return s.x_e;
    }
    throw std::logic_error("sample has no target and is not flagged for proxy supervision");
}

struct ForwardTrace {
    Vec64 pre_hd, h_d;
    Vec64 pre_he, h_e;
    Vec64 e;
    Vec64 pre_zd, z_d;
    Vec64 pre_ze, z_e;
    double w_d = 0.0;
    double w_e = 0.0;
    double delta = 0.0;
    double yhat = 0.0;
};

struct InitOptions {
    // Memory starts at zero unless random_memory draws it like a weight.
    bool random_memory = false;
    bool memory_unit = true;
};

inline PgmnParams init_params(const PgmnDims& dims, std::uint64_t seed, InitOptions opts = {})
{
    PgmnParams p(dims);
    p.memory_unit = opts.memory_unit;
    std::mt19937_64 rng(seed);
    const auto fill = [&rng](std::span<double> t, std::size_t fan_in) {
        const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : t) {
            v = dist(rng);
        }
    };
    fill(p.w_d.values, 2);
    fill(p.w_e.values, 2);
    fill(p.w_zd.values, dims.d + dims.d_m);
    fill(p.w_ze.values, dims.d + dims.d_m);
    fill(p.w_pi1.values, dims.d_z);
    fill(p.w_pi2.values, dims.d_z);
    fill(p.w_pi3.values, dims.d_m);
    if (opts.random_memory) {
        fill(p.memory.values, dims.d_m);
    }
    if (!opts.memory_unit) {
        std::fill(p.memory.values.begin(), p.memory.values.end(), 0.0);
        std::fill(p.w_pi3.values.begin(), p.w_pi3.values.end(), 0.0);
        for (std::size_t r = 0; r < dims.d_z; ++r) {
            for (std::size_t c = dims.d; c < dims.d + dims.d_m; ++c) {
                p.w_zd(r, c) = 0.0;
                p.w_ze(r, c) = 0.0;
            }
        }
    }
    return p;
}

namespace detail {

inline void check_stage(std::span<const double> xs, const char* stage)
{
    if (!all_finite(xs)) {
        throw NumericError(std::string("forward: non-finite value at stage ") + stage);
    }
}

inline void check_stage(double x, const char* stage)
{
    check_stage(std::span<const double>(&x, 1), stage);
}

// W[:, :cols_used] * x + b, where x has cols_used entries.
inline Vec64 affine_prefix(const Mat64& w, std::span<const double> x, const Vec64& b)
{
    Vec64 out(w.rows);
    for (std::size_t r = 0; r < w.rows; ++r) {
        double acc = b[r];
        const double* wr = w.values.data() + r * w.cols;
        for (std::size_t c = 0; c < x.size(); ++c) {
            acc += wr[c] * x[c];
        }
        out[r] = acc;
    }
    return out;
}

inline Vec64 concat(const Vec64& a, const Vec64& b)
{
    Vec64 out(a.size() + b.size());
    std::copy(a.values.begin(), a.values.end(), out.values.begin());
    std::copy(b.values.begin(), b.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

} // namespace detail

/// h = relu(W [x, mask]^T + b).
inline Vec64 project(const Mat64& w, const Vec64& b, double x, int mask)
{
    if (!std::isfinite(x)) {
        throw NumericError("project: non-finite forecast input");
    }
    if (mask != 0 && mask != 1) {
        throw std::invalid_argument("project: mask must be 0 or 1");
    }
    const double in[2] = {x, static_cast<double>(mask)};
    return relu(affine(w, std::span<const double>(in), std::span<const double>(b.values)));
}

inline Vec64 project_dl(double x_d, int m_d, const PgmnParams& p)
{
    return project(p.w_d, p.b_d, x_d, m_d);
}

inline Vec64 project_ep(double x_e, int m_e, const PgmnParams& p)
{
    return project(p.w_e, p.b_e, x_e, m_e);
}

/// Identity read of the memory vector.
inline Vec64 retrieve_memory(const PgmnParams& p)
{
    return p.memory;
}

inline ForwardTrace forward(const MaskedSample& s, const PgmnParams& p)
{
    if (!std::isfinite(s.x_d) || !std::isfinite(s.x_e)) {
        throw NumericError("forward: non-finite value at stage input");
    }
    ForwardTrace t;
    const double in_d[2] = {s.x_d, static_cast<double>(s.m_d)};
    const double in_e[2] = {s.x_e, static_cast<double>(s.m_e)};
    t.pre_hd = affine(p.w_d, std::span<const double>(in_d), p.b_d.values);
    t.h_d = relu(t.pre_hd);
    detail::check_stage(t.h_d.values, "h_d");
    t.pre_he = affine(p.w_e, std::span<const double>(in_e), p.b_e.values);
    t.h_e = relu(t.pre_he);
    detail::check_stage(t.h_e.values, "h_e");

    if (p.memory_unit) {
        t.e = retrieve_memory(p);
        detail::check_stage(t.e.values, "e");
        t.pre_zd = affine(p.w_zd, detail::concat(t.h_d, t.e), p.b_zd);
        t.pre_ze = affine(p.w_ze, detail::concat(t.h_e, t.e), p.b_ze);
    } else {
        t.pre_zd = detail::affine_prefix(p.w_zd, t.h_d.values, p.b_zd);
        t.pre_ze = detail::affine_prefix(p.w_ze, t.h_e.values, p.b_ze);
    }
    t.z_d = relu(t.pre_zd);
    detail::check_stage(t.z_d.values, "z_d");
    t.z_e = relu(t.pre_ze);
    detail::check_stage(t.z_e.values, "z_e");

    t.w_d = dot(p.w_pi1.values, t.z_d.values) + p.b_pi1;
    detail::check_stage(t.w_d, "w_d");
    t.w_e = dot(p.w_pi2.values, t.z_e.values) + p.b_pi2;
    detail::check_stage(t.w_e, "w_e");
    t.delta = p.memory_unit ? dot(p.w_pi3.values, t.e.values) + p.b_pi3 : p.b_pi3;
    detail::check_stage(t.delta, "delta");
    t.yhat = t.w_d + t.w_e + t.delta;
    detail::check_stage(t.yhat, "yhat");
    return t;
}

/// Adds scale * dL/dθ into `grads` and returns the unscaled loss.
inline double accumulate_gradients(const ForwardTrace& t, const MaskedSample& s, const PgmnParams& p,
                                   Gradients& grads, double scale = 1.0)
{
    const double y = resolve_target(s);
    const double loss = mse(y, t.yhat);
    const double g = scale * 2.0 * (t.yhat - y);
    const std::size_t d = p.dims.d;
    const std::size_t dm = p.dims.d_m;
    const std::size_t dz = p.dims.d_z;
    const bool mu = p.memory_unit;

    grads.b_pi1 += g;
    grads.b_pi2 += g;
    grads.b_pi3 += g;

    std::vector<double> dmem(dm, 0.0);
    if (mu) {
        for (std::size_t k = 0; k < dm; ++k) {
            grads.w_pi3[k] += g * t.e[k];
            dmem[k] += g * p.w_pi3[k];
        }
    }

    // One aggregator stream: w = W_pi . relu(W_z [h; e] + b_z) + b_pi.
    const auto stream = [&](const Vec64& w_pi, const Vec64& pre_z, const Vec64& z, const Vec64& h,
                            const Mat64& w_z, Vec64& gw_pi, Mat64& gw_z, Vec64& gb_z, std::vector<double>& dh) {
        dh.assign(d, 0.0);
        const std::size_t used = mu ? d + dm : d;
        for (std::size_t r = 0; r < dz; ++r) {
            gw_pi[r] += g * z[r];
            const double da = g * w_pi[r] * relu_grad(pre_z[r]);
            if (da == 0.0) {
                continue;
            }
            gb_z[r] += da;
            double* gw = gw_z.values.data() + r * w_z.cols;
            const double* w = w_z.values.data() + r * w_z.cols;
            for (std::size_t c = 0; c < d; ++c) {
                gw[c] += da * h[c];
                dh[c] += da * w[c];
            }
            for (std::size_t c = d; c < used; ++c) {
                gw[c] += da * t.e[c - d];
                dmem[c - d] += da * w[c];
            }
        }
    };

    std::vector<double> dh_d;
    std::vector<double> dh_e;
    stream(p.w_pi1, t.pre_zd, t.z_d, t.h_d, p.w_zd, grads.w_pi1, grads.w_zd, grads.b_zd, dh_d);
    stream(p.w_pi2, t.pre_ze, t.z_e, t.h_e, p.w_ze, grads.w_pi2, grads.w_ze, grads.b_ze, dh_e);

    if (mu) {
        for (std::size_t k = 0; k < dm; ++k) {
            grads.memory[k] += dmem[k];
        }
    }

    const auto projection = [&](const std::vector<double>& dh, const Vec64& pre, double x, int mask, Mat64& gw,
                                Vec64& gb) {
        for (std::size_t r = 0; r < d; ++r) {
            const double da = dh[r] * relu_grad(pre[r]);
            gw(r, 0) += da * x;
            gw(r, 1) += da * static_cast<double>(mask);
            gb[r] += da;
        }
    };
    projection(dh_d, t.pre_hd, s.x_d, s.m_d, grads.w_d, grads.b_d);
    projection(dh_e, t.pre_he, s.x_e, s.m_e, grads.w_e, grads.b_e);
    return loss;
}

/// Squared-error loss and its exact gradient for one sample.
inline std::pair<double, Gradients> backward(const ForwardTrace& t, const MaskedSample& s, const PgmnParams& p)
{
    Gradients grads(zeros_like, p);
    const double loss = accumulate_gradients(t, s, p, grads);
    return {loss, std::move(grads)};
}

inline double sample_loss(const MaskedSample& s, const PgmnParams& p)
{
    return mse(resolve_target(s), forward(s, p).yhat);
}

inline std::vector<double> predict(std::span<const MaskedSample> samples, const PgmnParams& p)
{
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back(forward(s, p).yhat);
    }
    return out;
}

} // namespace pgmn
