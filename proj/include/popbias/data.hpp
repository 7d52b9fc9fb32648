#pragma once

// Rating ingestion, the indexed dataset, and the train/test split.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "popbias/error.hpp"
#include "popbias/random.hpp"

namespace popbias {

using UserId = std::int64_t;
using ItemId = std::int64_t;
using UserIndex = std::uint32_t;
using ItemIndex = std::uint32_t;

struct Rating {
    UserId user = 0;
    ItemId item = 0;
    double value = 0.0;
    std::int64_t timestamp = 0;

    friend bool operator==(const Rating&, const Rating&) = default;
};

enum class RatingFormat { DoubleColon, Comma, Tab };

/// Accepts the CLI spellings `ml1m`, `csv` and `tsv`.
inline RatingFormat parse_rating_format(std::string_view name) {
    if (name == "ml1m") return RatingFormat::DoubleColon;
    if (name == "csv") return RatingFormat::Comma;
    if (name == "tsv") return RatingFormat::Tab;
    throw ConfigError("unknown ratings format '" + std::string(name) + "' (expected ml1m, csv or tsv)");
}

inline std::string_view to_string(RatingFormat format) {
    switch (format) {
        case RatingFormat::DoubleColon: return "ml1m";
        case RatingFormat::Comma: return "csv";
        case RatingFormat::Tab: return "tsv";
    }
    return "ml1m";
}

namespace detail {

inline std::string_view separator_of(RatingFormat format) {
    switch (format) {
        case RatingFormat::DoubleColon: return "::";
        case RatingFormat::Comma: return ",";
        case RatingFormat::Tab: return "\t";
    }
    return "::";
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
T parse_number(std::string_view field, std::size_t line, const char* name) {
    field = trim(field);
    T value{};
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc{} || ptr != last) {
        throw ParseError(line, std::string("non-numeric ") + name + " field '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace detail

/// Parses one record per line: user, item, rating, timestamp. Blank lines are
/// ignored; anything else that does not hold exactly four numeric fields is a
/// ParseError carrying the 1-based line number.
inline std::vector<Rating> parse_ratings(std::istream& in, RatingFormat format) {
    const std::string_view sep = detail::separator_of(format);
    std::vector<Rating> out;
    std::string line;
    std::size_t line_no = 0;
    std::string_view fields[4];
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view rest = detail::trim(line);
        if (rest.empty()) continue;

        std::size_t count = 0;
        while (true) {
            const auto pos = rest.find(sep);
            if (count < 4) fields[count] = rest.substr(0, pos);
            ++count;
            if (pos == std::string_view::npos) break;
            rest.remove_prefix(pos + sep.size());
        }
        if (count != 4) {
            throw ParseError(line_no, "expected 4 fields, found " + std::to_string(count));
        }

        Rating r;
        r.user = detail::parse_number<UserId>(fields[0], line_no, "user");
        r.item = detail::parse_number<ItemId>(fields[1], line_no, "item");
        r.value = detail::parse_number<double>(fields[2], line_no, "rating");
        r.timestamp = detail::parse_number<std::int64_t>(fields[3], line_no, "timestamp");
        if (r.user < 0 || r.item < 0) throw ParseError(line_no, "negative user or item id");
        if (!std::isfinite(r.value)) throw ParseError(line_no, "non-finite rating value");
        out.push_back(r);
    }
    if (out.empty()) throw EmptyInputError();
    return out;
}

/// File variant of parse_ratings; error messages are prefixed with the path.
inline std::vector<Rating> load_ratings(const std::filesystem::path& path, RatingFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": cannot open ratings file");
    try {
        return parse_ratings(in, format);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.detail(), path.string());
    } catch (const EmptyInputError& e) {
        throw EmptyInputError(path.string() + ": " + e.what());
    }
}

/// Compressed row storage: row r owns cols/values in [offsets[r], offsets[r+1]),
/// sorted by column.
struct SparseRows {
    std::vector<std::size_t> offsets{0};
    std::vector<std::uint32_t> cols;
    std::vector<double> values;

    std::size_t rows() const { return offsets.size() - 1; }
    std::size_t row_size(std::size_t r) const { return offsets[r + 1] - offsets[r]; }
    std::span<const std::uint32_t> row_cols(std::size_t r) const {
        return {cols.data() + offsets[r], row_size(r)};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {values.data() + offsets[r], row_size(r)};
    }
    double row_mean(std::size_t r) const {
        const auto v = row_values(r);
        if (v.empty()) return 0.0;
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }
};

struct IndexedRating {
    UserIndex user;
    ItemIndex item;
    double value;
};

/// Immutable user x item rating matrix with dense indices assigned in
/// ascending external-id order.
class RatingDataset {
public:
    RatingDataset() = default;

    const std::vector<Rating>& ratings() const { return ratings_; }
    /// Dense view aligned with ratings().
    const std::vector<IndexedRating>& indexed() const { return indexed_; }

    std::size_t num_users() const { return user_ids_.size(); }
    std::size_t num_items() const { return item_ids_.size(); }
    std::size_t num_ratings() const { return ratings_.size(); }

    UserId user_id(UserIndex u) const { return user_ids_[u]; }
    ItemId item_id(ItemIndex i) const { return item_ids_[i]; }
    const std::vector<UserId>& user_ids() const { return user_ids_; }
    const std::vector<ItemId>& item_ids() const { return item_ids_; }

    std::optional<UserIndex> user_index(UserId id) const { return lookup(user_ids_, id); }
    std::optional<ItemIndex> item_index(ItemId id) const { return lookup(item_ids_, id); }

    /// Per-user profile p_u: items (ascending index) and their values.
    const SparseRows& by_user() const { return by_user_; }
    /// Per-item raters: users (ascending index) and their values.
    const SparseRows& by_item() const { return by_item_; }

    std::span<const ItemIndex> profile_items(UserIndex u) const { return by_user_.row_cols(u); }
    std::span<const double> profile_values(UserIndex u) const { return by_user_.row_values(u); }
    std::size_t profile_size(UserIndex u) const { return by_user_.row_size(u); }
    std::size_t rating_count(ItemIndex i) const { return by_item_.row_size(i); }

    double global_mean() const { return global_mean_; }

    friend RatingDataset build_dataset(std::span<const Rating> ratings);

private:
    template <class Id>
    static std::optional<std::uint32_t> lookup(const std::vector<Id>& ids, Id id) {
        const auto it = std::lower_bound(ids.begin(), ids.end(), id);
        if (it == ids.end() || *it != id) return std::nullopt;
        return static_cast<std::uint32_t>(it - ids.begin());
    }

    std::vector<Rating> ratings_;
    std::vector<IndexedRating> indexed_;
    std::vector<UserId> user_ids_;
    std::vector<ItemId> item_ids_;
    SparseRows by_user_;
    SparseRows by_item_;
    double global_mean_ = 0.0;
};

namespace detail {

inline SparseRows make_rows(std::size_t n_rows, std::span<const IndexedRating> triplets, bool by_user) {
    SparseRows rows;
    rows.offsets.assign(n_rows + 1, 0);
    for (const auto& t : triplets) ++rows.offsets[(by_user ? t.user : t.item) + 1];
    for (std::size_t r = 0; r < n_rows; ++r) rows.offsets[r + 1] += rows.offsets[r];
    rows.cols.resize(triplets.size());
    rows.values.resize(triplets.size());
    std::vector<std::size_t> cursor(rows.offsets.begin(), rows.offsets.end() - 1);
    for (const auto& t : triplets) {
        const std::size_t r = by_user ? t.user : t.item;
        const std::size_t at = cursor[r]++;
        rows.cols[at] = by_user ? t.item : t.user;
        rows.values[at] = t.value;
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t lo = rows.offsets[r];
        const std::size_t hi = rows.offsets[r + 1];
        std::vector<std::size_t> order(hi - lo);
        std::iota(order.begin(), order.end(), lo);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rows.cols[a] < rows.cols[b]; });
        std::vector<std::uint32_t> c(order.size());
        std::vector<double> v(order.size());
        for (std::size_t k = 0; k < order.size(); ++k) {
            c[k] = rows.cols[order[k]];
            v[k] = rows.values[order[k]];
        }
        std::copy(c.begin(), c.end(), rows.cols.begin() + static_cast<std::ptrdiff_t>(lo));
        std::copy(v.begin(), v.end(), rows.values.begin() + static_cast<std::ptrdiff_t>(lo));
    }
    return rows;
}

}  // namespace detail

/// Builds the indexed dataset. A repeated (user, item) pair keeps its last
/// occurrence, positioned where that last occurrence appeared.
inline RatingDataset build_dataset(std::span<const Rating> ratings) {
    if (ratings.empty()) throw EmptyInputError("cannot build a dataset from zero ratings");

    RatingDataset ds;
    {
        struct PairHash {
            std::size_t operator()(const std::pair<UserId, ItemId>& p) const noexcept {
                return static_cast<std::size_t>(splitmix64(static_cast<std::uint64_t>(p.first) * 0x9e3779b97f4a7c15ULL ^
                                                           static_cast<std::uint64_t>(p.second)));
            }
        };
        std::unordered_map<std::pair<UserId, ItemId>, std::size_t, PairHash> last;
        last.reserve(ratings.size());
        for (std::size_t k = 0; k < ratings.size(); ++k) last[{ratings[k].user, ratings[k].item}] = k;
        if (last.size() == ratings.size()) {
            ds.ratings_.assign(ratings.begin(), ratings.end());
        } else {
            std::vector<bool> keep(ratings.size(), false);
            for (const auto& [key, k] : last) keep[k] = true;
            ds.ratings_.reserve(last.size());
            for (std::size_t k = 0; k < ratings.size(); ++k) {
                if (keep[k]) ds.ratings_.push_back(ratings[k]);
            }
        }
    }

    for (const auto& r : ds.ratings_) {
        ds.user_ids_.push_back(r.user);
        ds.item_ids_.push_back(r.item);
    }
    std::sort(ds.user_ids_.begin(), ds.user_ids_.end());
    ds.user_ids_.erase(std::unique(ds.user_ids_.begin(), ds.user_ids_.end()), ds.user_ids_.end());
    std::sort(ds.item_ids_.begin(), ds.item_ids_.end());
    ds.item_ids_.erase(std::unique(ds.item_ids_.begin(), ds.item_ids_.end()), ds.item_ids_.end());

    ds.indexed_.reserve(ds.ratings_.size());
    double sum = 0.0;
    for (const auto& r : ds.ratings_) {
        ds.indexed_.push_back({*ds.user_index(r.user), *ds.item_index(r.item), r.value});
        sum += r.value;
    }
    ds.global_mean_ = sum / static_cast<double>(ds.ratings_.size());
    ds.by_user_ = detail::make_rows(ds.user_ids_.size(), ds.indexed_, true);
    ds.by_item_ = detail::make_rows(ds.item_ids_.size(), ds.indexed_, false);
    return ds;
}

struct SplitPair {
    RatingDataset train;
    std::vector<Rating> test;
    std::uint64_t seed = 0;
    double train_fraction = 0.8;
};

/// Uniform random split over rating records. |train| = round(fraction * n);
/// both sides keep the dataset's record order.
inline SplitPair split_train_test(const RatingDataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train fraction must lie in (0, 1)");
    }
    const std::size_t n = ds.num_ratings();
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    if (n_train == 0) throw DataError("train split would be empty");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    std::vector<bool> in_train(n, false);
    for (std::size_t k = 0; k < n_train; ++k) in_train[order[k]] = true;

    std::vector<Rating> train;
    SplitPair split;
    train.reserve(n_train);
    split.test.reserve(n - n_train);
    for (std::size_t k = 0; k < n; ++k) {
        (in_train[k] ? train : split.test).push_back(ds.ratings()[k]);
    }
    split.train = build_dataset(train);
    split.seed = seed;
    split.train_fraction = train_fraction;
    return split;
}

}  // namespace popbias
