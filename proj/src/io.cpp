// SPDX-License-Identifier: Apache-2.0

#include "pmlam/io.h"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "pmlam/types.h"

namespace pmlam {

std::string_view to_string(DistanceKind k) {
    return k == DistanceKind::W2Squared ? "w2" : "euclidean";
}

std::string_view to_string(Relation r) {
    switch (r) {
        case Relation::UserItem: return "ui";
        case Relation::UserUser: return "uu";
        case Relation::ItemItem: return "ii";
    }
    return "?";
}

std::string_view to_string(IndicatorMode m) {
    switch (m) {
        case IndicatorMode::Gap: return "gap";
        case IndicatorMode::Concat: return "concat";
        case IndicatorMode::Sum: return "sum";
    }
    return "?";
}

DistanceKind parse_distance_kind(std::string_view s) {
    if (s == "w2" || s == "w2_squared" || s == "W2_SQUARED") return DistanceKind::W2Squared;
    if (s == "euclidean" || s == "euclidean_squared" || s == "EUCLIDEAN_SQUARED")
        return DistanceKind::EuclideanSquared;
    throw InputError("unknown distance kind '" + std::string(s) + "'");
}

Relation parse_relation(std::string_view s) {
    if (s == "ui") return Relation::UserItem;
    if (s == "uu") return Relation::UserUser;
    if (s == "ii") return Relation::ItemItem;
    throw InputError("unknown relation '" + std::string(s) + "'");
}

IndicatorMode parse_indicator_mode(std::string_view s) {
    if (s == "gap" || s == "gaps") return IndicatorMode::Gap;
    if (s == "concat" || s == "cat") return IndicatorMode::Concat;
    if (s == "sum" || s == "add") return IndicatorMode::Sum;
    throw InputError("unknown indicator mode '" + std::string(s) + "'");
}

}  // namespace pmlam

namespace pmlam::io {

namespace {

void check(std::istream& in) {
    if (!in) throw InputError("truncated or unreadable binary file");
}

}  // namespace

void write_magic(std::ostream& out, std::string_view magic) {
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
    out.put('\n');
}

void expect_magic(std::istream& in, std::string_view magic, const std::string& what) {
    std::string line;
    std::getline(in, line);
    if (!in || line != magic) {
        throw InputError(what + ": bad header (expected '" + std::string(magic) + "')");
    }
}

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_string(std::ostream& out, std::string_view s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_f64s(std::ostream& out, std::span<const double> v) {
    write_u64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

void write_u32s(std::ostream& out, std::span<const std::uint32_t> v) {
    write_u64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    check(in);
    return v;
}

double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    check(in);
    return v;
}

std::string read_string(std::istream& in) {
    const auto n = read_u64(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    check(in);
    return s;
}

std::vector<double> read_f64s(std::istream& in) {
    const auto n = read_u64(in);
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    check(in);
    return v;
}

std::vector<std::uint32_t> read_u32s(std::istream& in) {
    const auto n = read_u64(in);
    std::vector<std::uint32_t> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(std::uint32_t)));
    check(in);
    return v;
}

void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot open '" + tmp.string() + "' for writing");
        body(out);
        out.flush();
        if (!out) throw InputError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

void Fnv1a::update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        state_ ^= p[i];
        state_ *= 1099511628211ull;
    }
}

}  // namespace pmlam::io
