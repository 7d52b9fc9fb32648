// popbias: popularity-bias audit of recommendation algorithms.
//
//   popbias analyze  --ratings ratings.dat --out out/
//   popbias run      --ratings ratings.dat --out out/ [--algos user-knn,svdpp]
//   popbias plotdata --out out/

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "popbias/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kDiverged = 3 };

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Popularity-bias audit: long-tail statistics, user groups, and GAP / delta-GAP per algorithm"};
    app.require_subcommand(1);

    std::string config_path, ratings, format, out, algos, popularity_source;
    std::uint64_t seed = 0;
    double quantile = 0.0, train_fraction = 0.0, relevance_threshold = 0.0;
    std::size_t top_n = 0, plot_cap = 0;

    auto* opt_config = app.add_option("--config", config_path, "JSON run configuration");
    auto* opt_ratings = app.add_option("--ratings", ratings, "ratings file");
    auto* opt_format = app.add_option("--format", format, "ratings format")->check(CLI::IsMember({"ml1m", "csv", "tsv"}));
    auto* opt_out = app.add_option("--out", out, "output directory");
    auto* opt_seed = app.add_option("--seed", seed, "master seed");
    auto* opt_quantile = app.add_option("--popular-quantile", quantile, "fraction of items considered popular");
    auto* opt_fraction = app.add_option("--train-fraction", train_fraction, "fraction of ratings used for training");
    auto* opt_top_n = app.add_option("--top-n", top_n, "recommendation list length");
    auto* opt_algos = app.add_option("--algos", algos, "comma-separated algorithm list");
    auto* opt_source = app.add_option("--popularity-source", popularity_source, "popularity for algorithm metrics")
                           ->check(CLI::IsMember({"train", "full"}));
    auto* opt_threshold =
        app.add_option("--relevance-threshold", relevance_threshold, "minimum test rating counted as a hit");
    auto* opt_cap = app.add_option("--plot-cap", plot_cap, "row cap for downsampled plot files");

    auto* analyze = app.add_subcommand("analyze", "data-side popularity statistics and user groups");
    auto* run = app.add_subcommand("run", "train, recommend, and report bias metrics for every algorithm");
    auto* plotdata = app.add_subcommand("plotdata", "reshape run artifacts into plot-ready files");
    for (auto* sub : {analyze, run, plotdata}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        popbias::RunConfig cfg;
        if (*opt_config) cfg = popbias::load_run_config(config_path);
        if (*opt_ratings) cfg.ratings = ratings;
        if (*opt_format) cfg.format = popbias::parse_rating_format(format);
        if (*opt_out) cfg.out = out;
        if (*opt_seed) cfg.seed = seed;
        if (*opt_quantile) cfg.popular_quantile = quantile;
        if (*opt_fraction) cfg.train_fraction = train_fraction;
        if (*opt_top_n) cfg.top_n = top_n;
        if (*opt_algos) popbias::select_algorithms(cfg, split_list(algos));
        if (*opt_source) cfg.popularity_source = popbias::parse_popularity_source(popularity_source);
        if (*opt_threshold) cfg.relevance_threshold = relevance_threshold;
        if (*opt_cap) cfg.plot_cap = plot_cap;
        cfg.validate();

        if (analyze->parsed()) {
            const auto a = popbias::cmd_analyze(cfg);
            std::cout << "users " << a.users << ", items " << a.items << ", ratings " << a.ratings << "\n";
            for (const auto& s : a.group_stats) {
                std::cout << popbias::to_string(s.group) << ": " << s.users << " users, mean profile size "
                          << s.mean_profile_size << ", mean popular ratio " << s.mean_popular_ratio << "\n";
            }
        } else if (run->parsed()) {
            const auto r = popbias::cmd_run(cfg);
            for (const auto& o : r.outcomes) {
                std::cout << popbias::to_string(o.algorithm) << ": ";
                if (!o.ok) {
                    std::cout << o.error << "\n";
                    continue;
                }
                std::cout << "precision@" << cfg.top_n << " " << o.evaluation->precision << ", delta-GAP";
                for (const auto& g : o.evaluation->gaps) {
                    std::cout << " " << popbias::to_string(g.group) << "=" << g.delta_gap;
                }
                std::cout << "\n";
            }
            if (r.all_failed()) {
                std::cerr << "error: every algorithm diverged\n";
                return kDiverged;
            }
        } else if (plotdata->parsed()) {
            for (const auto& f : popbias::cmd_plotdata(cfg)) std::cout << (cfg.out / f).string() << "\n";
        }
    } catch (const popbias::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const popbias::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const popbias::TrainingDivergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDiverged;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kOk;
}
