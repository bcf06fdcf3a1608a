// SPDX-License-Identifier: Apache-2.0
//
// Little-endian binary helpers for the versioned cache and checkpoint files.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmlam::io {

void write_magic(std::ostream& out, std::string_view magic);
/// Throws InputError when the stream does not start with `magic`.
void expect_magic(std::istream& in, std::string_view magic, const std::string& what);

void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_string(std::ostream& out, std::string_view s);
void write_f64s(std::ostream& out, std::span<const double> v);
void write_u32s(std::ostream& out, std::span<const std::uint32_t> v);

std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
std::string read_string(std::istream& in);
std::vector<double> read_f64s(std::istream& in);
std::vector<std::uint32_t> read_u32s(std::istream& in);

/// Writes through `body` into `path.tmp`, then renames over `path`.
void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

/// FNV-1a, used to key caches on content.
class Fnv1a {
public:
    void update(const void* data, std::size_t n);
    template <class T>
    void update_pod(const T& v) { update(&v, sizeof(T)); }
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 14695981039346656037ull;
};

}  // namespace pmlam::io
