// SPDX-License-Identifier: Apache-2.0

#include "pmlam/simgraph.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "pmlam/io.h"

namespace pmlam {

namespace {
constexpr std::string_view kMagic = "PMLAM-NBR v1";
}

std::size_t NeighborSets::n_edges() const {
    std::size_t n = 0;
    for (const auto& row : neighbors) n += row.size();
    return n;
}

double cosine_binary(std::span<const Index> a, std::span<const Index> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("cosine_binary: empty row");
    std::size_t common = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (b[j] < a[i]) ++j;
        else {
            ++common;
            ++i;
            ++j;
        }
    }
    return static_cast<double>(common) / std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

NeighborSets build_neighbors(const std::vector<std::vector<Index>>& rows, std::size_t n_cols, double threshold,
                             EntityKind kind) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("similarity threshold must be in (0, 1]");
    NeighborSets out;
    out.kind = kind;
    out.threshold = threshold;
    const auto n = rows.size();
    out.neighbors.resize(n);

    std::vector<std::vector<Index>> postings(n_cols);
    for (std::size_t e = 0; e < n; ++e) {
        for (auto c : rows[e]) {
            if (c >= n_cols) throw std::invalid_argument("build_neighbors: column index out of range");
            postings[c].push_back(static_cast<Index>(e));
        }
    }

    // Co-occurrence counts for anchor e against every later entity; the pair is
    // then recorded on both sides, which keeps the sets symmetric by construction.
    std::vector<std::uint32_t> counts(n, 0);
    std::vector<Index> touched;
    for (std::size_t e = 0; e < n; ++e) {
        if (rows[e].empty()) continue;
        touched.clear();
        for (auto c : rows[e]) {
            for (auto other : postings[c]) {
                if (other <= e) continue;
                if (counts[other]++ == 0) touched.push_back(other);
            }
        }
        for (auto other : touched) {
            const double sim = static_cast<double>(counts[other]) /
                               std::sqrt(static_cast<double>(rows[e].size()) * static_cast<double>(rows[other].size()));
            counts[other] = 0;
            if (sim >= threshold) {
                out.neighbors[e].push_back(other);
                out.neighbors[other].push_back(static_cast<Index>(e));
            }
        }
    }
    for (auto& row : out.neighbors) std::sort(row.begin(), row.end());
    return out;
}

void save_neighbors(const std::filesystem::path& path, const NeighborSets& sets, const NeighborCacheKey& key) {
    io::atomic_write(path, [&](std::ostream& out) {
        io::write_magic(out, kMagic);
        io::write_u64(out, key.dataset_hash);
        io::write_u64(out, key.fold);
        io::write_f64(out, key.threshold);
        io::write_u64(out, key.kind == EntityKind::User ? 0 : 1);
        io::write_u64(out, sets.neighbors.size());
        for (const auto& row : sets.neighbors) io::write_u32s(out, row);
    });
}

std::optional<NeighborSets> load_neighbors(const std::filesystem::path& path, const NeighborCacheKey& key) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    io::expect_magic(in, kMagic, path.string());
    const auto hash = io::read_u64(in);
    const auto fold = io::read_u64(in);
    const auto threshold = io::read_f64(in);
    const auto kind = io::read_u64(in) == 0 ? EntityKind::User : EntityKind::Item;
    if (hash != key.dataset_hash || fold != key.fold || threshold != key.threshold || kind != key.kind)
        return std::nullopt;
    NeighborSets sets;
    sets.kind = kind;
    sets.threshold = threshold;
    sets.neighbors.resize(io::read_u64(in));
    for (auto& row : sets.neighbors) row = io::read_u32s(in);
    return sets;
}

}  // namespace pmlam
