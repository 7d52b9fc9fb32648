#pragma once

// End-to-end orchestration behind the `analyze`, `run` and `plotdata`
// subcommands.

#include <algorithm>
#include <array>
#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "popbias/config.hpp"
#include "popbias/csv.hpp"
#include "popbias/data.hpp"
#include "popbias/metrics.hpp"
#include "popbias/popularity.hpp"
#include "popbias/recommender.hpp"

namespace popbias {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kManifestName = "run_manifest.json";

struct GroupStats {
    UserGroup group = UserGroup::Niche;
    std::size_t users = 0;
    double mean_profile_size = 0.0;
    double mean_popular_ratio = 0.0;
};

struct AnalysisResult {
    PopularityModel popularity;
    std::vector<UserPropensity> propensities;
    ProfileSizeCorrelations correlations;
    UserGroupAssignment groups;
    std::array<GroupStats, 3> group_stats{};
    std::size_t users = 0;
    std::size_t items = 0;
    std::size_t ratings = 0;
};

inline AnalysisResult analyze_dataset(const RatingDataset& ds, double quantile) {
    AnalysisResult a;
    a.users = ds.num_users();
    a.items = ds.num_items();
    a.ratings = ds.num_ratings();
    a.popularity = popularity_model(ds, quantile);
    a.propensities = user_propensities(ds, a.popularity);
    a.correlations = profile_size_correlations(a.propensities);
    a.groups = segment_users(a.propensities);
    for (UserGroup g : kAllGroups) {
        auto& s = a.group_stats[static_cast<std::size_t>(g)];
        s.group = g;
    }
    for (const auto& p : a.propensities) {
        auto& s = a.group_stats[static_cast<std::size_t>(a.groups.group_of.at(p.user_id))];
        ++s.users;
        s.mean_profile_size += static_cast<double>(p.profile_size);
        s.mean_popular_ratio += p.popular_ratio;
    }
    for (auto& s : a.group_stats) {
        if (s.users > 0) {
            s.mean_profile_size /= static_cast<double>(s.users);
            s.mean_popular_ratio /= static_cast<double>(s.users);
        }
    }
    return a;
}

/// Output file name -> content.
using ArtifactMap = std::map<std::string, std::string>;

inline ArtifactMap analysis_artifacts(const AnalysisResult& a) {
    ArtifactMap files;
    const auto& pm = a.popularity;

    CsvBuilder items("item_id,count,phi,is_popular");
    for (ItemIndex i = 0; i < pm.num_items(); ++i) {
        items.row(pm.item_ids[i], pm.rating_counts[i], pm.phi[i], pm.is_popular[i] ? 1 : 0);
    }
    files["item_popularity.csv"] = items.str();

    CsvBuilder users("user_id,profile_size,popular_count,popular_ratio,mean_item_popularity");
    for (const auto& p : a.propensities) {
        users.row(p.user_id, p.profile_size, p.popular_count, p.popular_ratio, p.mean_item_popularity);
    }
    files["user_propensity.csv"] = users.str();

    std::vector<const UserPropensity*> curve;
    for (const auto& p : a.propensities) curve.push_back(&p);
    std::stable_sort(curve.begin(), curve.end(),
                     [](const UserPropensity* x, const UserPropensity* y) { return x->popular_ratio > y->popular_ratio; });
    CsvBuilder curve_csv("rank,user_id,popular_ratio");
    for (std::size_t r = 0; r < curve.size(); ++r) curve_csv.row(r + 1, curve[r]->user_id, curve[r]->popular_ratio);
    files["propensity_curve.csv"] = curve_csv.str();

    const nlohmann::json corr = {{"statistic", "pearson"},
                                 {"users", a.propensities.size()},
                                 {"profile_size_vs_popular_count", a.correlations.popular_count},
                                 {"profile_size_vs_popular_ratio", a.correlations.popular_ratio},
                                 {"profile_size_vs_mean_item_popularity", a.correlations.mean_item_popularity}};
    files["correlations.json"] = corr.dump(2) + "\n";

    CsvBuilder groups("user_id,group");
    for (const auto& [id, g] : a.groups.group_of) groups.row(id, to_string(g));
    files["groups.csv"] = groups.str();

    std::size_t popular_ratings = 0;
    for (ItemIndex i : pm.popular_set) popular_ratings += pm.rating_counts[i];
    nlohmann::json stats = {{"users", a.users},
                            {"items", a.items},
                            {"ratings", a.ratings},
                            {"popular_items", pm.popular_set.size()},
                            {"popular_rating_share", static_cast<double>(popular_ratings) / static_cast<double>(a.ratings)},
                            {"niche_cut", a.groups.niche_cut},
                            {"blockbuster_cut", a.groups.blockbuster_cut}};
    nlohmann::json groups_json = nlohmann::json::object();
    std::size_t largest = 0;
    for (const auto& s : a.group_stats) {
        groups_json[std::string(to_string(s.group))] = {{"users", s.users},
                                                        {"mean_profile_size", s.mean_profile_size},
                                                        {"mean_popular_ratio", s.mean_popular_ratio}};
        if (s.users > a.group_stats[largest].users) largest = static_cast<std::size_t>(s.group);
    }
    stats["groups"] = groups_json;
    stats["largest_group"] = to_string(a.group_stats[largest].group);
    files["group_stats.json"] = stats.dump(2) + "\n";
    return files;
}

/// Writes a set of artifacts; if any write fails, the files written so far
/// are removed before the error propagates.
inline void write_artifacts(const std::filesystem::path& dir, const ArtifactMap& files) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    try {
        for (const auto& [name, content] : files) {
            write_file_atomic(dir / name, content);
            written.push_back(dir / name);
        }
    } catch (...) {
        std::error_code ec;
        for (const auto& p : written) std::filesystem::remove(p, ec);
        throw;
    }
}

inline RatingDataset load_dataset(const RunConfig& cfg) {
    if (cfg.ratings.empty()) throw ConfigError("no ratings file given (--ratings)");
    const auto ratings = load_ratings(cfg.ratings, cfg.format);
    return build_dataset(ratings);
}

/// Data-side analysis over the full dataset.
inline AnalysisResult cmd_analyze(const RunConfig& cfg) {
    cfg.validate();
    const RatingDataset ds = load_dataset(cfg);
    AnalysisResult a = analyze_dataset(ds, cfg.popular_quantile);
    write_artifacts(cfg.out, analysis_artifacts(a));
    return a;
}

/// Fixed inputs shared by every algorithm's evaluation.
struct EvaluationContext {
    const RatingDataset* train = nullptr;
    const std::vector<Rating>* test = nullptr;
    /// Popularity used for GAP and popular ratios.
    const PopularityModel* popularity = nullptr;
    /// Profiles used as the GAP_p / profile-ratio baseline.
    const UserItemLists* profiles = nullptr;
    const UserGroupAssignment* groups = nullptr;
    std::vector<UserId> test_users;
    std::size_t top_n = 10;
    std::optional<double> relevance_threshold;
};

struct AlgorithmEvaluation {
    AlgorithmConfig config;
    RecommendationBatch batch;
    double precision = 0.0;
    ExposureReport exposure;
    std::vector<GroupRatioSummary> profile_ratios;
    std::vector<GroupRatioSummary> recommendation_ratios;
    std::array<GapValue, 3> gaps{};
};

/// Keeps only the members that received a recommendation list.
inline UserGroupAssignment restrict_groups(const UserGroupAssignment& groups, const UserItemLists& lists) {
    UserGroupAssignment out;
    out.niche = members_with_lists(groups.niche, lists);
    out.diverse = members_with_lists(groups.diverse, lists);
    out.blockbuster = members_with_lists(groups.blockbuster, lists);
    out.niche_cut = groups.niche_cut;
    out.blockbuster_cut = groups.blockbuster_cut;
    for (UserGroup g : kAllGroups) {
        for (UserId u : out.members(g)) out.group_of[u] = g;
    }
    return out;
}

inline AlgorithmEvaluation evaluate_model(const TrainedModel& model, const EvaluationContext& ctx) {
    AlgorithmEvaluation ev;
    ev.config = model.config();
    ev.batch = recommend_for_users(model, *ctx.train, ctx.test_users, ctx.top_n);
    ev.precision = precision_at_n(ev.batch, *ctx.test, ctx.top_n, ctx.relevance_threshold);
    ev.exposure = exposure_analysis(ev.batch, *ctx.train);

    const UserItemLists recs = recommendation_lists(ev.batch);
    const UserGroupAssignment evaluated = restrict_groups(*ctx.groups, recs);
    ev.profile_ratios = group_ratio_summary(evaluated, *ctx.profiles, *ctx.popularity, ListSource::Profile);
    ev.recommendation_ratios = group_ratio_summary(evaluated, recs, *ctx.popularity, ListSource::Recommendations);
    for (UserGroup g : kAllGroups) {
        const auto& members = evaluated.members(g);
        const double gp = group_gap(members, *ctx.profiles, *ctx.popularity);
        const double gr = group_gap(members, recs, *ctx.popularity);
        ev.gaps[static_cast<std::size_t>(g)] = make_gap_value(g, gp, gr);
    }
    return ev;
}

inline std::string recommendations_csv(const RecommendationBatch& batch) {
    CsvBuilder csv("user_id,rank,item_id,score");
    for (const auto& rec : batch.lists) {
        for (std::size_t r = 0; r < rec.items.size(); ++r) {
            csv.row(rec.user_id, r + 1, batch.item_id(rec.items[r].item), rec.items[r].score);
        }
    }
    return csv.str();
}

inline std::string exposure_csv(const ExposureReport& rep) {
    CsvBuilder csv("item_id,times_rated,times_recommended,mean_rating");
    for (const auto& r : rep.records) csv.row(r.item_id, r.times_rated_train, r.times_recommended, r.mean_rating);
    return csv.str();
}

struct AlgorithmOutcome {
    Algorithm algorithm = Algorithm::MostPopular;
    bool ok = false;
    std::string error;
    double wall_seconds = 0.0;
    std::optional<AlgorithmEvaluation> evaluation;
};

struct RunResult {
    AnalysisResult analysis;
    std::size_t train_ratings = 0;
    std::size_t test_ratings = 0;
    std::uint64_t split_seed = 0;
    std::vector<AlgorithmOutcome> outcomes;

    const AlgorithmOutcome* find(Algorithm a) const {
        for (const auto& o : outcomes) {
            if (o.algorithm == a) return &o;
        }
        return nullptr;
    }
    bool all_failed() const {
        return std::none_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.ok; });
    }
};

inline std::uint64_t algorithm_seed(std::uint64_t master, Algorithm a) {
    return derive_seed(master, "algorithm:" + std::string(to_string(a)));
}

inline std::uint64_t split_seed(std::uint64_t master) { return derive_seed(master, "split"); }

/// Full pipeline: analysis, split, every configured algorithm, reports, and
/// finally the manifest. A diverging algorithm is recorded and skipped.
inline RunResult cmd_run(const RunConfig& cfg) {
    cfg.validate();
    const RatingDataset full = load_dataset(cfg);
    RunResult result;
    result.analysis = analyze_dataset(full, cfg.popular_quantile);
    ArtifactMap analysis_files = analysis_artifacts(result.analysis);
    write_artifacts(cfg.out, analysis_files);

    result.split_seed = split_seed(cfg.seed);
    SplitPair split = split_train_test(full, cfg.train_fraction, result.split_seed);
    const auto train_set = std::make_shared<const RatingDataset>(std::move(split.train));
    result.train_ratings = train_set->num_ratings();
    result.test_ratings = split.test.size();

    const bool use_train = cfg.popularity_source == PopularitySource::Train;
    const PopularityModel metric_popularity = use_train ? popularity_model(*train_set, cfg.popular_quantile)
                                                        : result.analysis.popularity;
    const RatingDataset& profile_source = use_train ? *train_set : full;
    const UserItemLists profiles = profile_lists(profile_source);
    const UserGroupAssignment groups =
        use_train ? segment_users(user_propensities(*train_set, metric_popularity)) : result.analysis.groups;

    EvaluationContext ctx;
    ctx.train = train_set.get();
    ctx.test = &split.test;
    ctx.popularity = &metric_popularity;
    ctx.profiles = &profiles;
    ctx.groups = &groups;
    ctx.top_n = cfg.top_n;
    ctx.relevance_threshold = cfg.relevance_threshold;
    for (const auto& r : split.test) ctx.test_users.push_back(r.user);
    std::sort(ctx.test_users.begin(), ctx.test_users.end());
    ctx.test_users.erase(std::unique(ctx.test_users.begin(), ctx.test_users.end()), ctx.test_users.end());

    CsvBuilder precision_csv("algorithm,n,precision");
    CsvBuilder gap_csv("algorithm,group,gap_profile,gap_recs,delta_gap");
    CsvBuilder ratio_csv("algorithm,group,source,mean,min,q1,median,q3,max,n_users");
    std::vector<std::string> files;
    for (const auto& [name, content] : analysis_files) files.push_back(name);

    for (AlgorithmConfig algo : cfg.algorithms) {
        algo.seed = algorithm_seed(cfg.seed, algo.algorithm);
        algo.top_n = cfg.top_n;
        AlgorithmOutcome outcome;
        outcome.algorithm = algo.algorithm;
        const auto start = std::chrono::steady_clock::now();
        try {
            const TrainedModel model = train(algo, train_set);
            outcome.evaluation = evaluate_model(model, ctx);
            outcome.ok = true;
        } catch (const TrainingDivergedError& e) {
            outcome.error = e.what();
        }
        outcome.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        if (outcome.ok) {
            const auto& ev = *outcome.evaluation;
            const std::string name(to_string(algo.algorithm));
            ArtifactMap algo_files;
            algo_files["recs_" + name + ".csv"] = recommendations_csv(ev.batch);
            algo_files["exposure_" + name + ".csv"] = exposure_csv(ev.exposure);
            write_artifacts(cfg.out, algo_files);
            for (const auto& [f, c] : algo_files) files.push_back(f);

            precision_csv.row(name, cfg.top_n, ev.precision);
            for (const auto& g : ev.gaps) gap_csv.row(name, to_string(g.group), g.gap_profile, g.gap_recs, g.delta_gap);
            for (const auto* list : {&ev.profile_ratios, &ev.recommendation_ratios}) {
                for (const auto& s : *list) {
                    ratio_csv.row(name, to_string(s.group), to_string(s.source), s.summary.mean, s.summary.min,
                                  s.summary.q1, s.summary.median, s.summary.q3, s.summary.max, s.ratios.size());
                }
            }
        }
        result.outcomes.push_back(std::move(outcome));
    }

    write_artifacts(cfg.out, {{"precision.csv", precision_csv.str()},
                              {"gap_report.csv", gap_csv.str()},
                              {"group_ratio.csv", ratio_csv.str()}});
    for (const char* f : {"gap_report.csv", "group_ratio.csv", "precision.csv"}) files.push_back(f);
    std::sort(files.begin(), files.end());

    nlohmann::json algos = nlohmann::json::array();
    for (std::size_t k = 0; k < result.outcomes.size(); ++k) {
        const auto& o = result.outcomes[k];
        nlohmann::json entry = to_json(cfg.algorithms[k]);
        entry["seed"] = algorithm_seed(cfg.seed, o.algorithm);
        entry["top_n"] = cfg.top_n;
        entry["status"] = o.ok ? "complete" : "diverged";
        entry["wall_time_seconds"] = o.wall_seconds;
        if (!o.ok) entry["error"] = o.error;
        if (o.ok) entry["precision"] = o.evaluation->precision;
        algos.push_back(entry);
    }
    const nlohmann::json manifest = {
        {"tool", "popbias"},
        {"version", kToolVersion},
        {"status", result.all_failed() ? "failed" : "complete"},
        {"config", to_json(cfg)},
        {"dataset", {{"users", result.analysis.users}, {"items", result.analysis.items}, {"ratings", result.analysis.ratings}}},
        {"split", {{"seed", result.split_seed}, {"train", result.train_ratings}, {"test", result.test_ratings},
                   {"test_users", ctx.test_users.size()}}},
        {"stages", {{"analyze", "complete"}, {"split", "complete"}, {"algorithms", algos}, {"reports", "complete"}}},
        {"files", files}};
    write_file_atomic(cfg.out / kManifestName, manifest.dump(2) + "\n");
    return result;
}

/// Deterministic stride sample of at most `cap` row indices out of `n`.
inline std::vector<std::size_t> stride_sample(std::size_t n, std::size_t cap) {
    std::vector<std::size_t> idx;
    if (n <= cap) {
        idx.resize(n);
        for (std::size_t k = 0; k < n; ++k) idx[k] = k;
        return idx;
    }
    idx.reserve(cap);
    for (std::size_t j = 0; j < cap; ++j) idx.push_back(j * n / cap);
    return idx;
}

inline std::string table_csv(const CsvTable& t, const std::vector<std::string>& columns,
                             const std::vector<std::size_t>& rows, bool with_rank = false) {
    std::vector<std::size_t> cols;
    for (const auto& c : columns) cols.push_back(t.column(c));
    std::string out = with_rank ? "rank," : "";
    for (std::size_t k = 0; k < columns.size(); ++k) out += (k ? "," : "") + columns[k];
    out += '\n';
    for (std::size_t r : rows) {
        if (with_rank) out += std::to_string(r + 1) + ",";
        for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + t.rows[r][cols[k]];
        out += '\n';
    }
    return out;
}

/// Plot-ready reshaping of existing run artifacts in cfg.out. Writes the
/// fig*.csv files listed in the README; renders nothing.
inline std::vector<std::string> cmd_plotdata(const RunConfig& cfg) {
    cfg.validate();
    const auto& dir = cfg.out;
    std::vector<std::string> required = {"item_popularity.csv", "user_propensity.csv", "propensity_curve.csv",
                                         "gap_report.csv"};
    for (const auto& a : cfg.algorithms) {
        required.push_back("recs_" + std::string(to_string(a.algorithm)) + ".csv");
        required.push_back("exposure_" + std::string(to_string(a.algorithm)) + ".csv");
    }
    for (const auto& f : required) {
        if (!std::filesystem::exists(dir / f)) throw MissingArtifactError(f + " not found");
    }

    ArtifactMap out;
    {
        CsvTable items = read_csv(dir / "item_popularity.csv");
        const std::size_t count_col = items.column("count");
        std::vector<std::size_t> order(items.rows.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::stoll(items.rows[a][count_col]) > std::stoll(items.rows[b][count_col]);
        });
        CsvTable sorted{items.header, {}};
        for (std::size_t k : order) sorted.rows.push_back(items.rows[k]);
        out["fig2_longtail.csv"] =
            table_csv(sorted, {"item_id", "count", "phi"}, stride_sample(sorted.rows.size(), cfg.plot_cap), true);
    }
    {
        CsvTable curve = read_csv(dir / "propensity_curve.csv");
        out["fig3_propensity.csv"] =
            table_csv(curve, {"rank", "user_id", "popular_ratio"}, stride_sample(curve.rows.size(), cfg.plot_cap));
    }
    {
        CsvTable users = read_csv(dir / "user_propensity.csv");
        out["fig4_profile_size.csv"] =
            table_csv(users, {"user_id", "profile_size", "popular_count", "popular_ratio", "mean_item_popularity"},
                      stride_sample(users.rows.size(), cfg.plot_cap));
    }
    for (const auto& a : cfg.algorithms) {
        const std::string name(to_string(a.algorithm));
        CsvTable exp = read_csv(dir / ("exposure_" + name + ".csv"));
        out["fig6_exposure_" + name + ".csv"] =
            table_csv(exp, {"item_id", "times_rated", "times_recommended", "mean_rating"},
                      stride_sample(exp.rows.size(), cfg.plot_cap));
    }
    {
        CsvTable gap = read_csv(dir / "gap_report.csv");
        std::vector<std::size_t> all(gap.rows.size());
        for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
        out["fig8_bars.csv"] = table_csv(gap, {"algorithm", "group", "delta_gap"}, all);
    }
    write_artifacts(dir, out);
    std::vector<std::string> names;
    for (const auto& [n, c] : out) names.push_back(n);
    return names;
}

}  // namespace popbias
