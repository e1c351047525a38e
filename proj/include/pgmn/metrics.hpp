#pragma once

#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>

namespace pgmn::metrics {

namespace detail {

inline void require_pairs(std::span<const double> y, std::span<const double> yhat, const char* name)
{
    if (y.size() != yhat.size()) {
        throw std::invalid_argument(std::string(name) + ": length mismatch (" + std::to_string(y.size()) + " vs "
                                    + std::to_string(yhat.size()) + ")");
    }
    if (y.empty()) {
        throw std::invalid_argument(std::string(name) + ": empty input");
    }
}

inline double mean_actual(std::span<const double> y, const char* name)
{
    double s = 0.0;
    for (double v : y) {
        s += v;
    }
    const double m = s / static_cast<double>(y.size());
    if (m == 0.0) {
        throw std::domain_error(std::string(name) + ": actuals have zero mean");
    }
    return m;
}

} // namespace detail

inline double mae(std::span<const double> y, std::span<const double> yhat)
{
    detail::require_pairs(y, yhat, "mae");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        s += std::abs(y[i] - yhat[i]);
    }
    return s / static_cast<double>(y.size());
}

inline double rmse(std::span<const double> y, std::span<const double> yhat)
{
    detail::require_pairs(y, yhat, "rmse");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - yhat[i];
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(y.size()));
}

/// Percent, in [0, 200]. A pair with |y| + |yhat| = 0 contributes 0.
inline double smape(std::span<const double> y, std::span<const double> yhat)
{
    detail::require_pairs(y, yhat, "smape");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double denom = (std::abs(y[i]) + std::abs(yhat[i])) / 2.0;
        if (denom > 0.0) {
            s += std::abs(y[i] - yhat[i]) / denom;
        }
    }
    return s / static_cast<double>(y.size()) * 100.0;
}

/// Signed mean of (y - yhat): over-prediction comes out negative.
inline double mean_error(std::span<const double> y, std::span<const double> yhat)
{
    detail::require_pairs(y, yhat, "mean_error");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        s += y[i] - yhat[i];
    }
    return s / static_cast<double>(y.size());
}

inline double nmbe(std::span<const double> y, std::span<const double> yhat)
{
    detail::require_pairs(y, yhat, "nmbe");
    const double ybar = detail::mean_actual(y, "nmbe");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        s += y[i] - yhat[i];
    }
    return s / (static_cast<double>(y.size()) * ybar) * 100.0;
}

inline double cv_rmse(std::span<const double> y, std::span<const double> yhat)
{
    detail::require_pairs(y, yhat, "cv_rmse");
    return rmse(y, yhat) / detail::mean_actual(y, "cv_rmse") * 100.0;
}

struct MetricReport {
    std::size_t n = 0;
    double mae = 0.0;
    double rmse = 0.0;
    double smape = 0.0;
    double nmbe = 0.0;
    double cv_rmse = 0.0;
    double mean_error = 0.0;
};

inline MetricReport evaluate(std::span<const double> y, std::span<const double> yhat)
{
    MetricReport r;
    r.n = y.size();
    r.mae = mae(y, yhat);
    r.rmse = rmse(y, yhat);
    r.smape = smape(y, yhat);
    r.nmbe = nmbe(y, yhat);
    r.cv_rmse = cv_rmse(y, yhat);
    r.mean_error = mean_error(y, yhat);
    return r;
}

inline std::string format_sig6(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline constexpr const char* csv_header = "scenario,method,n,mae,rmse,smape,nmbe,cv_rmse,mean_error";

inline std::string to_csv_row(const std::string& scenario, const std::string& method, const MetricReport& r)
{
    return scenario + "," + method + "," + std::to_string(r.n) + "," + format_sig6(r.mae) + ","
           + format_sig6(r.rmse) + "," + format_sig6(r.smape) + "," + format_sig6(r.nmbe) + ","
           + format_sig6(r.cv_rmse) + "," + format_sig6(r.mean_error);
}

} // namespace pgmn::metrics
