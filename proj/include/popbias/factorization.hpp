#pragma once

// Biased matrix factorization and SVD++ trained by seeded SGD.
//
//   biased-mf: r(u,i) = mu + b_u + b_i + q_i . p_u
//   svdpp:     r(u,i) = mu + b_u + b_i + q_i . (p_u + |N(u)|^-1/2 sum_{j in N(u)} y_j)
//
// N(u) is the user's set of training items.

#include <cmath>
#include <functional>
#include <optional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "popbias/algorithm.hpp"
#include "popbias/data.hpp"
#include "popbias/random.hpp"

namespace popbias {

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void fill_uniform(Rng& rng, double scale) {
        for (double& v : data_) v = rng.uniform(-scale, scale);
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t f = 0; f < a.size(); ++f) s += a[f] * b[f];
    return s;
}

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

struct BiasedMfModel {
    double global_mean = 0.0;
    std::vector<double> user_bias;
    std::vector<double> item_bias;
    Matrix user_factors;
    Matrix item_factors;

    bool finite() const {
        return std::isfinite(global_mean) && all_finite(user_bias) && all_finite(item_bias) &&
               all_finite(user_factors.data()) && all_finite(item_factors.data());
    }

    /// Bias-only fallbacks cover users/items missing from training.
    double predict(std::optional<UserIndex> u, std::optional<ItemIndex> i) const {
        double r = global_mean;
        if (u) r += user_bias[*u];
        if (i) r += item_bias[*i];
        if (u && i) r += dot(item_factors.row(*i), user_factors.row(*u));
        return r;
    }
};

struct SvdppModel {
    BiasedMfModel base;
    Matrix implicit_factors;
    /// N(u) for every training user.
    SparseRows implicit_items;

    bool finite() const { return base.finite() && all_finite(implicit_factors.data()); }

    /// p_u + |N(u)|^-1/2 sum_{j in N(u)} y_j
    std::vector<double> user_vector(UserIndex u) const {
        const auto pu = base.user_factors.row(u);
        std::vector<double> z(pu.begin(), pu.end());
        const auto items = implicit_items.row_cols(u);
        if (!items.empty()) {
            std::vector<double> sum(z.size(), 0.0);
            for (ItemIndex j : items) {
                const auto yj = implicit_factors.row(j);
                for (std::size_t f = 0; f < sum.size(); ++f) sum[f] += yj[f];
            }
            const double norm = 1.0 / std::sqrt(static_cast<double>(items.size()));
            for (std::size_t f = 0; f < z.size(); ++f) z[f] += norm * sum[f];
        }
        return z;
    }

    double predict(std::optional<UserIndex> u, std::optional<ItemIndex> i) const {
        if (!(u && i)) return base.predict(u, i);
        const auto z = user_vector(*u);
        return base.global_mean + base.user_bias[*u] + base.item_bias[*i] + dot(base.item_factors.row(*i), z);
    }
};

namespace detail {

/// Per-entity multipliers on the L2 penalty for one SGD visit.
inline std::vector<double> reg_weights(const SparseRows& rows, RegularizationScaling scaling) {
    std::vector<double> w(rows.rows(), 1.0);
    if (scaling == RegularizationScaling::PerEntity) {
        for (std::size_t r = 0; r < w.size(); ++r) {
            w[r] = rows.row_size(r) > 0 ? 1.0 / static_cast<double>(rows.row_size(r)) : 0.0;
        }
    }
    return w;
}

}  // namespace detail

/// The objective the SGD in train_biased_mf descends: squared error over the
/// training ratings plus the L2 penalties. Under PerRating scaling each
/// entity's penalty is counted once per rating it takes part in.
inline double mf_objective(const BiasedMfModel& m, const RatingDataset& train, const AlgorithmConfig& cfg) {
    double loss = 0.0;
    for (const auto& t : train.indexed()) {
        const double e = t.value - m.predict(t.user, t.item);
        loss += e * e;
    }
    const bool per_rating = cfg.regularization_scaling == RegularizationScaling::PerRating;
    auto penalty = [&](const SparseRows& rows, const std::vector<double>& bias, const Matrix& factors) {
        double sum = 0.0;
        for (std::size_t r = 0; r < bias.size(); ++r) {
            const double mult = per_rating ? static_cast<double>(rows.row_size(r)) : 1.0;
            const auto f = factors.row(r);
            sum += mult * (cfg.bias_reg() * bias[r] * bias[r] + cfg.regularization * dot(f, f));
        }
        return sum;
    };
    return loss + penalty(train.by_user(), m.user_bias, m.user_factors) +
           penalty(train.by_item(), m.item_bias, m.item_factors);
}

using MfEpochObserver = std::function<void(std::size_t epoch, const BiasedMfModel&)>;

namespace detail {

inline BiasedMfModel init_mf(const AlgorithmConfig& cfg, const RatingDataset& train, Rng& rng) {
    BiasedMfModel m;
    m.global_mean = train.global_mean();
    m.user_bias.assign(train.num_users(), 0.0);
    m.item_bias.assign(train.num_items(), 0.0);
    m.user_factors = Matrix(train.num_users(), cfg.factors);
    m.item_factors = Matrix(train.num_items(), cfg.factors);
    m.user_factors.fill_uniform(rng, cfg.init_scale);
    m.item_factors.fill_uniform(rng, cfg.init_scale);
    return m;
}

}  // namespace detail

/// SGD over the ratings in a freshly shuffled order every epoch. The observer
/// (if any) sees the model at epoch 0 (initialization) and after each epoch.
inline BiasedMfModel train_biased_mf(const AlgorithmConfig& cfg, const RatingDataset& train,
                                     const MfEpochObserver& observer = {}) {
    cfg.validate();
    Rng rng(cfg.seed);
    BiasedMfModel m = detail::init_mf(cfg, train, rng);
    if (observer) observer(0, m);

    const auto& data = train.indexed();
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    const double lr = cfg.learning_rate;
    const double reg = cfg.regularization;
    const double breg = cfg.bias_reg();
    const std::size_t nf = cfg.factors;
    const auto wu = detail::reg_weights(train.by_user(), cfg.regularization_scaling);
    const auto wi = detail::reg_weights(train.by_item(), cfg.regularization_scaling);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t k : order) {
            const auto& t = data[k];
            auto pu = m.user_factors.row(t.user);
            auto qi = m.item_factors.row(t.item);
            const double e = t.value - (m.global_mean + m.user_bias[t.user] + m.item_bias[t.item] + dot(qi, pu));
            const double ru = reg * wu[t.user];
            const double ri = reg * wi[t.item];
            m.user_bias[t.user] += lr * (e - breg * wu[t.user] * m.user_bias[t.user]);
            m.item_bias[t.item] += lr * (e - breg * wi[t.item] * m.item_bias[t.item]);
            for (std::size_t f = 0; f < nf; ++f) {
                const double p = pu[f];
                const double q = qi[f];
                pu[f] += lr * (e * q - ru * p);
                qi[f] += lr * (e * p - ri * q);
            }
        }
        if (!m.finite()) throw TrainingDivergedError(std::string(to_string(Algorithm::BiasedMf)), epoch);
        if (observer) observer(epoch, m);
    }
    return m;
}

/// SVD++ SGD. Users are visited in a shuffled order and each user's ratings
/// in a shuffled order; the implicit term is computed once per user visit and
/// the y_j gradient accumulated over that user's ratings is applied at the
/// end of the visit, which keeps an epoch linear in the number of ratings.
inline SvdppModel train_svdpp(const AlgorithmConfig& cfg, const RatingDataset& train) {
    cfg.validate();
    Rng rng(cfg.seed);
    SvdppModel m;
    m.base = detail::init_mf(cfg, train, rng);
    m.implicit_factors = Matrix(train.num_items(), cfg.factors);
    m.implicit_factors.fill_uniform(rng, cfg.init_scale);
    m.implicit_items = train.by_user();

    const double lr = cfg.learning_rate;
    const double reg = cfg.regularization;
    const double breg = cfg.bias_reg();
    const std::size_t nf = cfg.factors;
    const SparseRows& profiles = train.by_user();
    const auto wu = detail::reg_weights(train.by_user(), cfg.regularization_scaling);
    const auto wi = detail::reg_weights(train.by_item(), cfg.regularization_scaling);

    std::vector<UserIndex> users(train.num_users());
    std::iota(users.begin(), users.end(), UserIndex{0});
    std::vector<std::size_t> slots;
    std::vector<double> z(nf), y_grad(nf);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(std::span<UserIndex>(users));
        for (UserIndex u : users) {
            const auto items = profiles.row_cols(u);
            const auto values = profiles.row_values(u);
            if (items.empty()) continue;
            const double norm = 1.0 / std::sqrt(static_cast<double>(items.size()));
            std::fill(z.begin(), z.end(), 0.0);
            for (ItemIndex j : items) {
                const auto yj = m.implicit_factors.row(j);
                for (std::size_t f = 0; f < nf; ++f) z[f] += yj[f];
            }
            for (std::size_t f = 0; f < nf; ++f) z[f] *= norm;
            std::fill(y_grad.begin(), y_grad.end(), 0.0);

            slots.resize(items.size());
            std::iota(slots.begin(), slots.end(), 0);
            rng.shuffle(std::span<std::size_t>(slots));
            auto pu = m.base.user_factors.row(u);
            for (std::size_t s : slots) {
                const ItemIndex i = items[s];
                auto qi = m.base.item_factors.row(i);
                double pred = m.base.global_mean + m.base.user_bias[u] + m.base.item_bias[i];
                for (std::size_t f = 0; f < nf; ++f) pred += qi[f] * (pu[f] + z[f]);
                const double e = values[s] - pred;
                const double ru = reg * wu[u];
                const double ri = reg * wi[i];
                m.base.user_bias[u] += lr * (e - breg * wu[u] * m.base.user_bias[u]);
                m.base.item_bias[i] += lr * (e - breg * wi[i] * m.base.item_bias[i]);
                for (std::size_t f = 0; f < nf; ++f) {
                    const double p = pu[f];
                    const double q = qi[f];
                    y_grad[f] += e * norm * q;
                    pu[f] += lr * (e * q - ru * p);
                    qi[f] += lr * (e * (p + z[f]) - ri * q);
                }
            }
            for (ItemIndex j : items) {
                auto yj = m.implicit_factors.row(j);
                const double rj = reg * wi[j];
                for (std::size_t f = 0; f < nf; ++f) yj[f] += lr * (y_grad[f] - rj * yj[f]);
            }
        }
        if (!m.finite()) throw TrainingDivergedError(std::string(to_string(Algorithm::SvdPlusPlus)), epoch);
    }
    return m;
}

}  // namespace popbias
