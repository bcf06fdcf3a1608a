// SPDX-License-Identifier: Apache-2.0

#include "pmlam/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

#include "pmlam/io.h"

namespace pmlam {

namespace {

constexpr std::string_view kDatasetMagic = "PMLAM-DS v1";
constexpr std::string_view kFoldMagic = "PMLAM-FOLDS v1";

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_double(std::string_view s) {
    // std::from_chars for double is available in libstdc++ 11.
    double v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return v;
}

std::string error_at(std::size_t line_no, const std::string& msg) {
    return "line " + std::to_string(line_no) + ": " + msg;
}

}  // namespace

RawRating parse_rating_line(std::string_view line, char delimiter, std::size_t line_no) {
    const auto fields = split(line, delimiter);
    if (fields.size() < 3 || fields.size() > 4) {
        throw InputError(error_at(line_no, "expected 3 or 4 fields, got " + std::to_string(fields.size())));
    }
    RawRating r;
    r.user_ext_id = std::string(fields[0]);
    r.item_ext_id = std::string(fields[1]);
    if (r.user_ext_id.empty() || r.item_ext_id.empty()) throw InputError(error_at(line_no, "empty id"));
    const auto rating = parse_double(fields[2]);
    if (!rating || !std::isfinite(*rating)) {
        throw InputError(error_at(line_no, "rating '" + std::string(fields[2]) + "' is not a finite number"));
    }
    r.rating = *rating;
    if (fields.size() == 4 && !fields[3].empty()) {
        std::int64_t ts = 0;
        const auto* end = fields[3].data() + fields[3].size();
        auto [ptr, ec] = std::from_chars(fields[3].data(), end, ts);
        if (ec != std::errc{} || ptr != end) {
            throw InputError(error_at(line_no, "timestamp '" + std::string(fields[3]) + "' is not an integer"));
        }
        r.timestamp = ts;
    }
    return r;
}

std::vector<ImplicitPair> ingest(const std::filesystem::path& path, double rating_threshold) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open ratings file '" + path.string() + "'");

    std::vector<ImplicitPair> out;
    std::unordered_set<std::string> seen;
    std::optional<char> delimiter;
    std::string line;
    std::size_t line_no = 0;
    bool first_data_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (!delimiter) delimiter = body.find('\t') != std::string_view::npos ? '\t' : ',';
        if (first_data_line) {
            first_data_line = false;
            const auto fields = split(body, *delimiter);
            if (fields.size() >= 3 && !parse_double(fields[2])) continue;  // header row
        }
        const auto r = parse_rating_line(body, *delimiter, line_no);
        if (r.rating < rating_threshold) continue;
        std::string key = r.user_ext_id;
        key.push_back('\x1f');
        key += r.item_ext_id;
        if (seen.insert(std::move(key)).second) out.push_back({r.user_ext_id, r.item_ext_id});
    }
    if (out.empty()) {
        throw InputError("no positives: no rating in '" + path.string() + "' reaches threshold " +
                         std::to_string(rating_threshold));
    }
    return out;
}

void InteractionDataset::rebuild_lookups() {
    user_lookup.clear();
    item_lookup.clear();
    for (Index u = 0; u < user_ids.size(); ++u) user_lookup.emplace(user_ids[u], u);
    for (Index i = 0; i < item_ids.size(); ++i) item_lookup.emplace(item_ids[i], i);
}

double InteractionDataset::density() const {
    if (n_users == 0 || n_items == 0) return 0.0;
    return static_cast<double>(n_interactions()) / (static_cast<double>(n_users) * static_cast<double>(n_items));
}

std::optional<Index> InteractionDataset::user_index(std::string_view ext_id) const {
    const auto it = user_lookup.find(std::string(ext_id));
    if (it == user_lookup.end()) return std::nullopt;
    return it->second;
}

std::optional<Index> InteractionDataset::item_index(std::string_view ext_id) const {
    const auto it = item_lookup.find(std::string(ext_id));
    if (it == item_lookup.end()) return std::nullopt;
    return it->second;
}

std::uint64_t InteractionDataset::content_hash() const {
    io::Fnv1a h;
    h.update_pod(static_cast<std::uint64_t>(n_users));
    h.update_pod(static_cast<std::uint64_t>(n_items));
    for (auto off : row_offsets) h.update_pod(static_cast<std::uint64_t>(off));
    h.update(item_indices.data(), item_indices.size() * sizeof(Index));
    return h.digest();
}

InteractionDataset filter_iterative(std::span<const ImplicitPair> pairs, std::size_t min_user,
                                    std::size_t min_item) {
    if (min_user < 1 || min_item < 1) throw std::invalid_argument("filter thresholds must be >= 1");

    // Provisional dense ids in first-seen order.
    std::unordered_map<std::string, Index> user_tmp, item_tmp;
    std::vector<std::string> user_names, item_names;
    std::vector<std::pair<Index, Index>> edges;
    edges.reserve(pairs.size());
    std::unordered_set<std::uint64_t> dedup;
    for (const auto& p : pairs) {
        auto [uit, unew] = user_tmp.try_emplace(p.user, static_cast<Index>(user_names.size()));
        if (unew) user_names.push_back(p.user);
        auto [iit, inew] = item_tmp.try_emplace(p.item, static_cast<Index>(item_names.size()));
        if (inew) item_names.push_back(p.item);
        const std::uint64_t key = (static_cast<std::uint64_t>(uit->second) << 32) | iit->second;
        if (dedup.insert(key).second) edges.emplace_back(uit->second, iit->second);
    }

    std::vector<char> user_alive(user_names.size(), 1), item_alive(item_names.size(), 1);
    std::vector<std::size_t> user_deg(user_names.size()), item_deg(item_names.size());
    for (bool changed = true; changed;) {
        changed = false;
        std::fill(user_deg.begin(), user_deg.end(), 0);
        std::fill(item_deg.begin(), item_deg.end(), 0);
        for (auto [u, i] : edges) {
            if (user_alive[u] && item_alive[i]) {
                ++user_deg[u];
                ++item_deg[i];
            }
        }
        for (std::size_t u = 0; u < user_deg.size(); ++u) {
            if (user_alive[u] && user_deg[u] < min_user) {
                user_alive[u] = 0;
                changed = true;
            }
        }
        for (std::size_t i = 0; i < item_deg.size(); ++i) {
            if (item_alive[i] && item_deg[i] < min_item) {
                item_alive[i] = 0;
                changed = true;
            }
        }
    }

    InteractionDataset ds;
    std::vector<Index> user_map(user_names.size(), 0), item_map(item_names.size(), 0);
    std::vector<char> user_mapped(user_names.size(), 0), item_mapped(item_names.size(), 0);
    for (auto [u, i] : edges) {
        if (!user_alive[u] || !item_alive[i]) continue;
        if (!user_mapped[u]) {
            user_mapped[u] = 1;
            user_map[u] = static_cast<Index>(ds.user_ids.size());
            ds.user_ids.push_back(user_names[u]);
        }
        if (!item_mapped[i]) {
            item_mapped[i] = 1;
            item_map[i] = static_cast<Index>(ds.item_ids.size());
            ds.item_ids.push_back(item_names[i]);
        }
    }
    if (ds.user_ids.empty()) throw InputError("dataset eliminated by filtering");
    ds.n_users = ds.user_ids.size();
    ds.n_items = ds.item_ids.size();

    std::vector<std::vector<Index>> rows(ds.n_users);
    for (auto [u, i] : edges) {
        if (user_alive[u] && item_alive[i]) rows[user_map[u]].push_back(item_map[i]);
    }
    ds.row_offsets.assign(1, 0);
    for (auto& r : rows) {
        std::sort(r.begin(), r.end());
        ds.item_indices.insert(ds.item_indices.end(), r.begin(), r.end());
        ds.row_offsets.push_back(ds.item_indices.size());
    }
    ds.rebuild_lookups();
    return ds;
}

std::vector<std::uint8_t> assign_folds(const InteractionDataset& ds, std::uint64_t seed, std::size_t fold_count) {
    if (fold_count < 2 || fold_count > 255) throw std::invalid_argument("fold_count must be in [2, 255]");
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> out(ds.n_interactions());
    std::vector<std::size_t> order;
    for (Index u = 0; u < ds.n_users; ++u) {
        const auto begin = ds.row_offsets[u];
        const auto n = ds.row_offsets[u + 1] - begin;
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t pos = 0; pos < n; ++pos) {
            out[begin + order[pos]] = static_cast<std::uint8_t>(pos % fold_count);
        }
    }
    return out;
}

FoldSplit make_fold(const InteractionDataset& ds, std::span<const std::uint8_t> assignment, std::size_t fold_index,
                    std::uint64_t seed, std::size_t fold_count) {
    if (assignment.size() != ds.n_interactions()) throw std::invalid_argument("fold assignment size mismatch");
    if (fold_index >= fold_count) throw std::invalid_argument("fold index out of range");
    FoldSplit f;
    f.fold_count = fold_count;
    f.fold_index = fold_index;
    f.rng_seed = seed;
    f.train.resize(ds.n_users);
    f.test.resize(ds.n_users);
    for (Index u = 0; u < ds.n_users; ++u) {
        for (auto k = ds.row_offsets[u]; k < ds.row_offsets[u + 1]; ++k) {
            (assignment[k] == fold_index ? f.test : f.train)[u].push_back(ds.item_indices[k]);
        }
    }
    return f;
}

std::vector<FoldSplit> split_five_fold(const InteractionDataset& ds, std::uint64_t seed) {
    const auto assignment = assign_folds(ds, seed, 5);
    std::vector<FoldSplit> folds;
    folds.reserve(5);
    for (std::size_t k = 0; k < 5; ++k) folds.push_back(make_fold(ds, assignment, k, seed, 5));
    return folds;
}

std::vector<std::vector<Index>> transpose_rows(const std::vector<std::vector<Index>>& rows, std::size_t n_cols) {
    std::vector<std::vector<Index>> cols(n_cols);
    for (Index r = 0; r < rows.size(); ++r) {
        for (auto c : rows[r]) cols[c].push_back(r);
    }
    return cols;  // rows visited in increasing order, so columns are sorted
}

void save_dataset(const InteractionDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    io::atomic_write(dir / "dataset.bin", [&](std::ostream& out) {
        io::write_magic(out, kDatasetMagic);
        io::write_u64(out, ds.n_users);
        io::write_u64(out, ds.n_items);
        io::write_u64(out, ds.row_offsets.size());
        for (auto off : ds.row_offsets) io::write_u64(out, off);
        io::write_u32s(out, ds.item_indices);
    });
    auto write_map = [](const std::filesystem::path& p, const std::vector<std::string>& ids) {
        io::atomic_write(p, [&](std::ostream& out) {
            for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << '\t' << i << '\n';
        });
    };
    write_map(dir / "users.tsv", ds.user_ids);
    write_map(dir / "items.tsv", ds.item_ids);
}

InteractionDataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "dataset.bin", std::ios::binary);
    if (!in) throw InputError("no dataset cache in '" + dir.string() + "' (run `pmlam prepare` first)");
    io::expect_magic(in, kDatasetMagic, "dataset.bin");
    InteractionDataset ds;
    ds.n_users = io::read_u64(in);
    ds.n_items = io::read_u64(in);
    const auto n_off = io::read_u64(in);
    if (n_off != ds.n_users + 1) throw InputError("dataset.bin: inconsistent row offsets");
    ds.row_offsets.resize(n_off);
    for (auto& off : ds.row_offsets) off = io::read_u64(in);
    ds.item_indices = io::read_u32s(in);

    auto read_map = [](const std::filesystem::path& p, std::size_t n) {
        std::ifstream m(p);
        if (!m) throw InputError("missing id map '" + p.string() + "'");
        std::vector<std::string> ids(n);
        std::string line;
        while (std::getline(m, line)) {
            const auto tab = line.rfind('\t');
            if (tab == std::string::npos) throw InputError("malformed id map '" + p.string() + "'");
            const auto idx = std::stoul(line.substr(tab + 1));
            if (idx >= n) throw InputError("id map index out of range in '" + p.string() + "'");
            ids[idx] = line.substr(0, tab);
        }
        return ids;
    };
    ds.user_ids = read_map(dir / "users.tsv", ds.n_users);
    ds.item_ids = read_map(dir / "items.tsv", ds.n_items);
    ds.rebuild_lookups();
    return ds;
}

void save_folds(const std::filesystem::path& path, std::span<const std::uint8_t> assignment, std::uint64_t seed,
                std::size_t fold_count) {
    io::atomic_write(path, [&](std::ostream& out) {
        io::write_magic(out, kFoldMagic);
        io::write_u64(out, seed);
        io::write_u64(out, fold_count);
        io::write_u64(out, assignment.size());
        out.write(reinterpret_cast<const char*>(assignment.data()), static_cast<std::streamsize>(assignment.size()));
    });
}

FoldFile load_folds(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("missing fold file '" + path.string() + "'");
    io::expect_magic(in, kFoldMagic, path.filename().string());
    FoldFile f;
    f.seed = io::read_u64(in);
    f.fold_count = io::read_u64(in);
    f.assignment.resize(io::read_u64(in));
    in.read(reinterpret_cast<char*>(f.assignment.data()), static_cast<std::streamsize>(f.assignment.size()));
    if (!in) throw InputError("truncated fold file '" + path.string() + "'");
    return f;
}

}  // namespace pmlam
