#pragma once

// Mean-centred cosine similarity between users or between items, truncated to
// the k strongest neighbours of each entity.

#include <algorithm>
#include <cmath>
#include <vector>

#include "popbias/data.hpp"

namespace popbias {

enum class NeighborKind { User, Item };

struct Neighbor {
    std::uint32_t index;
    double similarity;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct SimilarityOptions {
    std::size_t k = 50;
    std::size_t min_overlap = 3;
    /// Significance damping: similarity is scaled by n / (n + shrinkage) for
    /// an overlap of n. Zero leaves it undamped.
    double shrinkage = 0.0;
};

/// For every entity, up to k neighbours with non-zero similarity, ordered by
/// |similarity| descending then index ascending.
struct NeighborLists {
    NeighborKind kind = NeighborKind::User;
    std::vector<std::vector<Neighbor>> neighbors;
    /// Per-entity mean rating used for centring.
    std::vector<double> means;
};

/// Strongest-first order used for truncation.
inline bool stronger_neighbor(const Neighbor& a, const Neighbor& b) {
    const double ma = std::abs(a.similarity);
    const double mb = std::abs(b.similarity);
    if (ma != mb) return ma > mb;
    return a.index < b.index;
}

inline void keep_top_k(std::vector<Neighbor>& candidates, std::size_t k) {
    if (candidates.size() > k) {
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end(),
                          stronger_neighbor);
        candidates.resize(k);
    } else {
        std::sort(candidates.begin(), candidates.end(), stronger_neighbor);
    }
}

/// sim(a, b) = sum_c da_c db_c / sqrt(sum_c da_c^2 * sum_c db_c^2) over the
/// co-rated set c, where d is the deviation from the entity's mean rating.
/// Zero when the overlap is below min_overlap or either norm vanishes.
/// Optionally damped by the overlap size (see SimilarityOptions::shrinkage).
inline NeighborLists similarity(NeighborKind kind, const RatingDataset& train, const SimilarityOptions& opts = {}) {
    const SparseRows& rows = kind == NeighborKind::User ? train.by_user() : train.by_item();
    const SparseRows& cols = kind == NeighborKind::User ? train.by_item() : train.by_user();
    const std::size_t n = rows.rows();

    NeighborLists out;
    out.kind = kind;
    out.means.resize(n);
    for (std::size_t r = 0; r < n; ++r) out.means[r] = rows.row_mean(r);
    out.neighbors.resize(n);

    std::vector<double> dot(n, 0.0), norm_a(n, 0.0), norm_b(n, 0.0);
    std::vector<std::uint32_t> overlap(n, 0);
    std::vector<std::uint32_t> touched;
    touched.reserve(n);

    for (std::size_t a = 0; a < n; ++a) {
        const auto a_cols = rows.row_cols(a);
        const auto a_vals = rows.row_values(a);
        for (std::size_t x = 0; x < a_cols.size(); ++x) {
            const double da = a_vals[x] - out.means[a];
            const std::uint32_t c = a_cols[x];
            const auto others = cols.row_cols(c);
            const auto other_vals = cols.row_values(c);
            for (std::size_t y = 0; y < others.size(); ++y) {
                const std::uint32_t b = others[y];
                if (b == a) continue;
                const double db = other_vals[y] - out.means[b];
                if (overlap[b] == 0) touched.push_back(b);
                ++overlap[b];
                dot[b] += da * db;
                norm_a[b] += da * da;
                norm_b[b] += db * db;
            }
        }
        std::vector<Neighbor> candidates;
        for (std::uint32_t b : touched) {
            if (overlap[b] >= opts.min_overlap && norm_a[b] > 0.0 && norm_b[b] > 0.0) {
                double s = dot[b] / std::sqrt(norm_a[b] * norm_b[b]);
                if (opts.shrinkage > 0.0) s *= overlap[b] / (overlap[b] + opts.shrinkage);
                if (s != 0.0) candidates.push_back({b, std::clamp(s, -1.0, 1.0)});
            }
            dot[b] = norm_a[b] = norm_b[b] = 0.0;
            overlap[b] = 0;
        }
        touched.clear();
        keep_top_k(candidates, opts.k);
        out.neighbors[a] = std::move(candidates);
    }
    return out;
}

}  // namespace popbias
