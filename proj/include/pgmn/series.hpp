#pragma once

// Hourly series with per-step presence flags, naive local timestamps, and the
// CSV formats used for ingestion and emission.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pgmn {

using Hour = std::chrono::sys_time<std::chrono::hours>;

inline constexpr double missing_sentinel = std::numeric_limits<double>::quiet_NaN();

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Accepts "YYYY-MM-DDTHH[:MM[:SS]]" with 'T' or a space; minutes and seconds must be zero.
inline Hour parse_timestamp(const std::string& text)
{
    int y = 0;
    unsigned mo = 0;
    unsigned d = 0;
    unsigned h = 0;
    unsigned mi = 0;
    unsigned s = 0;
    char sep = 0;
    const int n = std::sscanf(text.c_str(), "%d-%u-%u%c%u:%u:%u", &y, &mo, &d, &sep, &h, &mi, &s);
    if (n < 5 || (sep != 'T' && sep != ' ')) {
        throw FormatError("bad timestamp '" + text + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo}, std::chrono::day{d}};
    if (!ymd.ok() || h > 23 || mi != 0 || s != 0) {
        throw FormatError("timestamp '" + text + "' is not a valid whole hour");
    }
    return std::chrono::sys_days{ymd} + std::chrono::hours{h};
}

inline std::string format_timestamp(Hour t)
{
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::year_month_day ymd{day};
    const auto hour = (t - day).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(hour));
    return buf;
}

struct Calendar {
    int hour = 0;         // 0..23
    int day_of_week = 0;  // 0 = Monday
    int day_of_month = 1; // 1..31
    int day_of_year = 1;  // 1..366
};

inline Calendar calendar_of(Hour t)
{
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const weekday wd{day};
    Calendar c;
    c.hour = static_cast<int>((t - day).count());
    c.day_of_week = static_cast<int>(wd.iso_encoding()) - 1;
    c.day_of_month = static_cast<int>(static_cast<unsigned>(ymd.day()));
    c.day_of_year = static_cast<int>((day - sys_days{ymd.year() / January / 1}).count()) + 1;
    return c;
}

/// Index 0..167, Monday 00:00 first.
inline int hour_of_week(Hour t)
{
    const auto c = calendar_of(t);
    return c.day_of_week * 24 + c.hour;
}

inline std::string format_value(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct EnergySeries {
    std::vector<Hour> timestamps;
    std::vector<double> values;
    std::vector<std::uint8_t> present;

    EnergySeries() = default;

    /// Fully present series starting at `start`.
    EnergySeries(Hour start, std::vector<double> vals) : values(std::move(vals)), present(values.size(), 1)
    {
        timestamps.reserve(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            timestamps.push_back(start + std::chrono::hours{static_cast<long>(i)});
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }

    void mark_missing(std::size_t i)
    {
        present.at(i) = 0;
        values[i] = missing_sentinel;
    }

    [[nodiscard]] std::size_t missing_count() const noexcept
    {
        std::size_t n = 0;
        for (auto p : present) {
            n += p == 0 ? 1 : 0;
        }
        return n;
    }

    void validate() const
    {
        if (timestamps.size() != values.size() || present.size() != values.size()) {
            throw std::invalid_argument("EnergySeries: field lengths differ");
        }
        for (std::size_t i = 1; i < timestamps.size(); ++i) {
            if (timestamps[i] - timestamps[i - 1] != std::chrono::hours{1}) {
                throw std::invalid_argument("EnergySeries: timestamps not contiguous hourly at index "
                                            + std::to_string(i));
            }
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (present[i] > 1) {
                throw std::invalid_argument("EnergySeries: presence flag must be 0 or 1");
            }
            if (present[i] == 1 && !std::isfinite(values[i])) {
                throw std::invalid_argument("EnergySeries: non-finite present value at index " + std::to_string(i));
            }
        }
    }

    bool operator==(const EnergySeries& o) const
    {
        if (timestamps != o.timestamps || present != o.present || values.size() != o.values.size()) {
            return false;
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (present[i] != 0 && values[i] != o.values[i]) {
                return false;
            }
        }
        return true;
    }
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        fields.push_back(trim(field));
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

inline double parse_double(const std::string& s, const std::string& context)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw FormatError(context + ": cannot parse number '" + s + "'");
    }
    if (used != s.size()) {
        throw FormatError(context + ": trailing characters in '" + s + "'");
    }
    return v;
}

// Reads `timestamp,<column>` rows. Empty or NaN fields become missing.
inline EnergySeries read_two_column(std::istream& in, const std::string& column)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty CSV");
    }
    const auto header = split_csv_line(line);
    if (header.size() != 2 || header[0] != "timestamp" || header[1] != column) {
        throw FormatError("expected header 'timestamp," + column + "'");
    }
    EnergySeries s;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 2) {
            throw FormatError("row " + std::to_string(row) + ": expected 2 fields");
        }
        s.timestamps.push_back(parse_timestamp(f[0]));
        if (f[1].empty() || f[1] == "NaN" || f[1] == "nan") {
            s.values.push_back(missing_sentinel);
            s.present.push_back(0);
        } else {
            s.values.push_back(parse_double(f[1], "row " + std::to_string(row)));
            s.present.push_back(1);
        }
    }
    s.validate();
    return s;
}

inline void write_two_column(std::ostream& out, const EnergySeries& s, const std::string& column)
{
    out << "timestamp," << column << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        out << format_timestamp(s.timestamps[i]) << ',';
        if (s.present[i] != 0) {
            out << format_value(s.values[i]);
        }
        out << '\n';
    }
}

} // namespace detail

inline EnergySeries read_series_csv(std::istream& in)
{
    return detail::read_two_column(in, "value");
}

inline void write_series_csv(std::ostream& out, const EnergySeries& s)
{
    detail::write_two_column(out, s, "value");
}

inline EnergySeries read_series_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path);
    }
    return read_series_csv(in);
}

inline void write_series_csv(const std::string& path, const EnergySeries& s)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write " + path);
    }
    write_series_csv(out, s);
}

/// Outdoor temperature column; calendar fields are derived from timestamps.
struct TemperatureSeries {
    std::vector<Hour> timestamps;
    std::vector<double> temp_c;
};

inline TemperatureSeries read_temperature_csv(std::istream& in)
{
    const auto raw = detail::read_two_column(in, "temp_c");
    if (raw.missing_count() != 0) {
        throw FormatError("temperature CSV may not contain missing values");
    }
    return {raw.timestamps, raw.values};
}

inline void write_temperature_csv(std::ostream& out, const TemperatureSeries& t)
{
    EnergySeries s;
    s.timestamps = t.timestamps;
    s.values = t.temp_c;
    s.present.assign(t.temp_c.size(), 1);
    detail::write_two_column(out, s, "temp_c");
}

inline void write_temperature_csv(const std::string& path, const TemperatureSeries& t)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write " + path);
    }
    write_temperature_csv(out, t);
}

} // namespace pgmn
