#pragma once

// Text checkpoint, version tag "pgmn-ckpt-1". Line-oriented, LF endings,
// single spaces between tokens; reals are C99 hex-float literals (%a) so
// that save/load is bit-exact:
//
//   pgmn-ckpt-1
//   dims <d> <d_m> <d_z>
//   memory_unit <0|1>
//   norm <x_d mean> <x_d std> <x_e mean> <x_e std> <y mean> <y std>
//   tensor <name> <rows> <cols> <rows*cols row-major values>
//   ... one tensor line per entry of PgmnParams::names, in that order
//   end

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pgmn/model.hpp"
#include "pgmn/pipeline.hpp"
#include "pgmn/series.hpp"

namespace pgmn {

inline constexpr const char* checkpoint_version = "pgmn-ckpt-1";

struct Checkpoint {
    PgmnParams params;
    NormStats norm;
};

namespace detail {

inline std::string hexfloat(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double read_hexfloat(std::istream& in, const std::string& what)
{
    std::string tok;
    if (!(in >> tok)) {
        throw FormatError("checkpoint: truncated while reading " + what);
    }
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) {
        throw FormatError("checkpoint: bad real '" + tok + "' in " + what);
    }
    return v;
}

inline void expect_token(std::istream& in, const std::string& want)
{
    std::string tok;
    if (!(in >> tok) || tok != want) {
        throw FormatError("checkpoint: expected '" + want + "', found '" + tok + "'");
    }
}

} // namespace detail

inline void save_checkpoint(std::ostream& out, const Checkpoint& ck)
{
    const auto& p = ck.params;
    out << checkpoint_version << '\n';
    out << "dims " << p.dims.d << ' ' << p.dims.d_m << ' ' << p.dims.d_z << '\n';
    out << "memory_unit " << (p.memory_unit ? 1 : 0) << '\n';
    out << "norm";
    for (const auto& c : {ck.norm.x_d, ck.norm.x_e, ck.norm.y}) {
        out << ' ' << detail::hexfloat(c.mean) << ' ' << detail::hexfloat(c.std);
    }
    out << '\n';
    const auto tensors = p.tensors();
    const auto shapes = p.shapes();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        out << "tensor " << PgmnParams::names[i] << ' ' << shapes[i].first << ' ' << shapes[i].second;
        for (double v : tensors[i]) {
            out << ' ' << detail::hexfloat(v);
        }
        out << '\n';
    }
    out << "end\n";
}

inline Checkpoint load_checkpoint(std::istream& in)
{
    std::string version;
    if (!std::getline(in, version) || version != checkpoint_version) {
        throw FormatError("checkpoint: unsupported version tag '" + version + "'");
    }
    PgmnDims dims;
    detail::expect_token(in, "dims");
    if (!(in >> dims.d >> dims.d_m >> dims.d_z)) {
        throw FormatError("checkpoint: bad dims line");
    }
    try {
        dims.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
    Checkpoint ck{PgmnParams(dims), {}};
    detail::expect_token(in, "memory_unit");
    int mu = 0;
    if (!(in >> mu) || (mu != 0 && mu != 1)) {
        throw FormatError("checkpoint: bad memory_unit flag");
    }
    ck.params.memory_unit = mu == 1;
    detail::expect_token(in, "norm");
    for (ChannelStats* c : {&ck.norm.x_d, &ck.norm.x_e, &ck.norm.y}) {
        c->mean = detail::read_hexfloat(in, "norm");
        c->std = detail::read_hexfloat(in, "norm");
    }
    auto tensors = ck.params.tensors();
    const auto shapes = ck.params.shapes();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        detail::expect_token(in, "tensor");
        detail::expect_token(in, PgmnParams::names[i]);
        std::size_t rows = 0;
        std::size_t cols = 0;
        if (!(in >> rows >> cols) || rows != shapes[i].first || cols != shapes[i].second) {
            throw FormatError(std::string("checkpoint: shape mismatch for ") + PgmnParams::names[i]);
        }
        for (double& v : tensors[i]) {
            v = detail::read_hexfloat(in, PgmnParams::names[i]);
        }
    }
    detail::expect_token(in, "end");
    return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write " + path);
    }
    save_checkpoint(out, ck);
}

inline Checkpoint load_checkpoint(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path);
    }
    return load_checkpoint(in);
}

} // namespace pgmn
