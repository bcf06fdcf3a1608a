// SPDX-License-Identifier: Apache-2.0

#include "cli.h"

#include <CLI11.hpp>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "pmlam/checkpoint.h"
#include "pmlam/config.h"
#include "pmlam/data.h"
#include "pmlam/evaluator.h"
#include "pmlam/experiments.h"
#include "pmlam/planted.h"
#include "pmlam/simgraph.h"
#include "pmlam/trainer.h"

namespace fs = std::filesystem;

namespace pmlam::cli {

namespace {

std::string kebab(std::string s) {
    for (auto& c : s) {
        if (c == '_') c = '-';
    }
    return s;
}

/// Every RunConfig key with its default, in the order to_text() lists them.
std::vector<std::pair<std::string, std::string>> config_defaults() {
    std::vector<std::pair<std::string, std::string>> keys;
    std::istringstream in(to_text(RunConfig{}));
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        keys.emplace_back(line.substr(0, eq), line.substr(eq + 3));
    }
    return keys;
}

constexpr std::string_view kBoolKeys[] = {"deterministic", "margin_grad_to_theta"};

/// Config flags shared by commands that build a RunConfig: `--config <file>` plus
/// one `--<key>` per config key. Values are applied file first, then flags.
struct ConfigFlags {
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, bool> switches;
    std::map<std::string, CLI::Option*> options;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "flat key = value configuration file");
        for (const auto& [key, fallback] : config_defaults()) {
            const bool is_bool = std::find(std::begin(kBoolKeys), std::end(kBoolKeys), key) != std::end(kBoolKeys);
            if (is_bool) {
                options[key] = app->add_flag("--" + kebab(key), switches[key], "default: " + fallback);
            } else {
                options[key] = app->add_option("--" + kebab(key), values[key], "default: " + fallback);
            }
        }
        options["distance"] = app->add_option("--distance", values["distance"], "alias of --distance-kind");
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_path.empty()) load_config_file(cfg, config_path);
        for (const auto& [key, opt] : options) {
            if (opt->count() == 0) continue;
            if (switches.count(key)) apply_setting(cfg, key, switches.at(key) ? "on" : "off");
            else apply_setting(cfg, key, values.at(key));
        }
        validate(cfg);
        return cfg;
    }
};

RunConfig config_from_checkpoint(const Checkpoint& ck) {
    RunConfig cfg;
    std::istringstream in(ck.config_text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

FoldSplit load_fold(const fs::path& data_dir, const InteractionDataset& ds, std::size_t fold) {
    const auto ff = load_folds(data_dir / "folds.bin");
    if (ff.assignment.size() != ds.n_interactions()) throw InputError("folds.bin does not match dataset.bin");
    if (fold >= ff.fold_count) throw InputError("fold " + std::to_string(fold) + " does not exist");
    return make_fold(ds, ff.assignment, fold, ff.seed, ff.fold_count);
}

NeighborSets cached_neighbors(const fs::path& dir, const RunConfig& cfg, const InteractionDataset& ds,
                              const FoldSplit& fold, EntityKind kind) {
    const bool wanted = kind == EntityKind::User ? cfg.has(Relation::UserUser) : cfg.has(Relation::ItemItem);
    NeighborSets empty;
    empty.kind = kind;
    if (!wanted) return empty;
    const NeighborCacheKey key{ds.content_hash(), fold.fold_index, cfg.sim_threshold, kind};
    std::ostringstream name;
    name << "neighbors_" << (kind == EntityKind::User ? "users" : "items") << "_fold" << fold.fold_index << "_t"
         << cfg.sim_threshold << ".bin";
    const auto path = dir / name.str();
    if (auto cached = load_neighbors(path, key)) return *cached;
    NeighborSets sets = kind == EntityKind::User
                            ? build_neighbors(fold.train, ds.n_items, cfg.sim_threshold, kind)
                            : build_neighbors(transpose_rows(fold.train, ds.n_items), ds.n_users, cfg.sim_threshold, kind);
    save_neighbors(path, sets, key);
    return sets;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << v;
    return os.str();
}

}  // namespace

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gaussian metric-learning recommender with adaptive margins", "pmlam"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);

    // prepare
    auto* prepare = app.add_subcommand("prepare", "ingest ratings, filter, split into five folds");
    std::string ratings_path, out_dir;
    ConfigFlags prepare_cfg;
    prepare->add_option("--ratings", ratings_path, "user,item,rating[,timestamp] file (tab or comma)")->required();
    prepare->add_option("--out", out_dir, "output dataset directory")->required();
    prepare_cfg.attach(prepare);

    // train
    auto* train_cmd = app.add_subcommand("train", "train one fold");
    std::string data_dir, run_dir, resume_path;
    ConfigFlags train_cfg;
    train_cmd->add_option("--data", data_dir, "dataset directory from `prepare`")->required();
    train_cmd->add_option("--out", run_dir, "run directory (checkpoint, loss trace)")->required();
    train_cmd->add_option("--resume", resume_path, "continue from a checkpoint up to --epochs");
    bool quiet = false;
    train_cmd->add_flag("--quiet", quiet, "suppress per-epoch lines");
    train_cfg.attach(train_cmd);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score checkpoints on their folds");
    std::vector<std::string> ckpt_paths;
    std::string ks_text, eval_out;
    std::string eval_data;
    eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
    eval_cmd->add_option("--checkpoint", ckpt_paths, "one checkpoint per fold (repeatable)")->required();
    eval_cmd->add_option("--ks", ks_text, "comma-separated K values (default: the run's ks)");
    eval_cmd->add_option("--out", eval_out, "CSV report path");

    // recommend
    auto* rec_cmd = app.add_subcommand("recommend", "top-K items for one user");
    std::string rec_data, rec_ckpt, rec_user;
    std::size_t rec_k = 10;
    rec_cmd->add_option("--data", rec_data, "dataset directory")->required();
    rec_cmd->add_option("--checkpoint", rec_ckpt, "checkpoint")->required();
    rec_cmd->add_option("--user", rec_user, "external user id")->required();
    rec_cmd->add_option("--k", rec_k, "list length");

    // ablate
    auto* abl_cmd = app.add_subcommand("ablate", "run ablation variants 1-8 across seeds");
    std::string abl_data, abl_out, abl_seeds = "1,2,3", abl_variants = "1,2,3,4,5,6,7,8";
    std::size_t abl_k = 10;
    ConfigFlags abl_cfg;
    abl_cmd->add_option("--data", abl_data, "dataset directory")->required();
    abl_cmd->add_option("--out", abl_out, "CSV output")->required();
    abl_cmd->add_option("--seeds", abl_seeds, "comma-separated seeds");
    abl_cmd->add_option("--variants", abl_variants, "comma-separated variant ids");
    abl_cmd->add_option("--at", abl_k, "K for the reported recall / ndcg");
    abl_cfg.attach(abl_cmd);

    // case-study
    auto* cs_cmd = app.add_subcommand("case-study", "margins for similar vs dissimilar negatives");
    std::string cs_data, cs_ckpt, cs_labels, cs_out;
    std::size_t cs_users = 10, cs_per_user = 2;
    std::uint64_t cs_seed = 1;
    cs_cmd->add_option("--data", cs_data, "dataset directory")->required();
    cs_cmd->add_option("--checkpoint", cs_ckpt, "checkpoint with an adaptive user-item margin")->required();
    cs_cmd->add_option("--labels", cs_labels, "item<TAB>label file")->required();
    cs_cmd->add_option("--users", cs_users, "number of sampled users");
    cs_cmd->add_option("--per-user", cs_per_user, "positives per user");
    cs_cmd->add_option("--seed", cs_seed, "sampling seed");
    cs_cmd->add_option("--out", cs_out, "CSV output");

    // generate-planted
    auto* gen_cmd = app.add_subcommand("generate-planted", "write a synthetic clustered ratings file with labels");
    PlantedSpec spec;
    std::string gen_out;
    gen_cmd->add_option("--out", gen_out, "output directory")->required();
    gen_cmd->add_option("--users", spec.n_users, "number of users");
    gen_cmd->add_option("--items", spec.n_items, "number of items");
    gen_cmd->add_option("--clusters", spec.n_clusters, "number of clusters");
    gen_cmd->add_option("--p-in", spec.p_in, "in-cluster interaction probability");
    gen_cmd->add_option("--p-out", spec.p_out, "cross-cluster interaction probability");
    gen_cmd->add_option("--seed", spec.seed, "generator seed");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n" << "run `pmlam --help` for usage\n";
        return 2;
    }

    try {
        if (*prepare) {
            const auto cfg = prepare_cfg.resolve();
            const auto pairs = ingest(ratings_path, cfg.rating_threshold);
            const auto ds = filter_iterative(pairs, cfg.min_user, cfg.min_item);
            const auto assignment = assign_folds(ds, cfg.seed);
            fs::create_directories(out_dir);
            save_dataset(ds, out_dir);
            save_folds(fs::path(out_dir) / "folds.bin", assignment, cfg.seed, 5);
            out << "users " << ds.n_users << "  items " << ds.n_items << "  interactions " << ds.n_interactions()
                << "  density " << std::setprecision(4) << 100.0 * ds.density() << "%\n";
            out << "dataset hash " << std::hex << ds.content_hash() << std::dec << "\n";
            return 0;
        }

        if (*train_cmd) {
            auto cfg = train_cfg.resolve();
            const auto ds = load_dataset(data_dir);
            ModelState state;
            if (!resume_path.empty()) {
                auto ck = load_checkpoint(resume_path);
                const auto saved = config_from_checkpoint(ck);
                if (ck.dataset_hash != ds.content_hash()) throw InputError("checkpoint was trained on another dataset");
                // The saved configuration wins except for the epoch budget.
                const auto epochs = cfg.epochs;
                cfg = saved;
                cfg.epochs = epochs;
                state = std::move(ck.state);
            }
            const auto fold = load_fold(data_dir, ds, cfg.fold);
            if (resume_path.empty()) state = init_model(cfg, ds.n_users, ds.n_items);
            const auto un = cached_neighbors(data_dir, cfg, ds, fold, EntityKind::User);
            const auto in = cached_neighbors(data_dir, cfg, ds, fold, EntityKind::Item);
            fs::create_directories(run_dir);
            const auto header = config_header(cfg);

            TrainHooks hooks;
            if (!quiet) {
                hooks.on_epoch = [&](const TraceRow& r) {
                    out << "epoch " << r.epoch << "  inner " << fmt(r.inner) << "  outer " << fmt(r.outer)
                        << "  margin " << fmt(r.mean_margin) << "\n";
                };
            }
            hooks.on_eval = [&](std::size_t epoch, const EvalReport& rep) {
                out << "epoch " << epoch << "  R@" << rep.ks.front() << " " << fmt(rep.recall.front()) << "  N@"
                    << rep.ks.front() << " " << fmt(rep.ndcg.front()) << "\n";
            };
            const auto result = train(cfg, state, fold, ds.n_items, un, in, hooks);

            save_checkpoint(fs::path(run_dir) / "checkpoint.bin", {to_text(cfg), fold.fold_index, ds.content_hash(), state});
            write_trace_csv(fs::path(run_dir) / "loss_trace.csv", result.trace, header);
            if (!result.evals.empty()) {
                std::vector<EvalReport> reps;
                for (const auto& [e, r] : result.evals) reps.push_back(r);
                write_eval_csv(fs::path(run_dir) / "eval_trace.csv", reps, header);
            }
            out << "trained to epoch " << state.epochs_done << (result.early_stopped ? " (early stop)" : "") << "\n";
            return 0;
        }

        if (*eval_cmd) {
            const auto ds = load_dataset(eval_data);
            std::vector<EvalReport> reports;
            std::string header;
            for (const auto& p : ckpt_paths) {
                const auto ck = load_checkpoint(p);
                if (ck.dataset_hash != ds.content_hash()) throw InputError(p + " was trained on another dataset");
                const auto cfg = config_from_checkpoint(ck);
                const auto ks = ks_text.empty() ? cfg.ks : parse_size_list(ks_text);
                const auto fold = load_fold(eval_data, ds, ck.fold);
                reports.push_back(evaluate(ck.state.theta, fold, ks, cfg.distance_kind));
                if (header.empty()) header = config_header(cfg);
            }
            if (reports.size() > 1) reports.push_back(cross_fold_mean(reports));
            out << format_eval_table(reports);
            if (!eval_out.empty()) write_eval_csv(eval_out, reports, header);
            return 0;
        }

        if (*rec_cmd) {
            const auto ds = load_dataset(rec_data);
            const auto ck = load_checkpoint(rec_ckpt);
            if (ck.dataset_hash != ds.content_hash()) throw InputError("checkpoint was trained on another dataset");
            const auto cfg = config_from_checkpoint(ck);
            const auto user = ds.user_index(rec_user);
            if (!user) throw InputError("unknown user id '" + rec_user + "'");
            const auto fold = load_fold(rec_data, ds, ck.fold);
            const auto ranked = rank_items(ck.state.theta, *user, fold.train[*user], cfg.distance_kind, rec_k);
            out << "rank\titem\tdistance\n" << std::setprecision(10);
            for (std::size_t r = 0; r < ranked.size(); ++r)
                out << r + 1 << '\t' << ds.item_ids[ranked[r].item] << '\t' << ranked[r].distance << '\n';
            return 0;
        }

        if (*abl_cmd) {
            const auto cfg = abl_cfg.resolve();
            const auto ds = load_dataset(abl_data);
            const auto fold = load_fold(abl_data, ds, cfg.fold);
            std::vector<std::uint64_t> seeds;
            for (auto s : parse_size_list(abl_seeds)) seeds.push_back(s);
            std::vector<int> variants;
            for (auto v : parse_size_list(abl_variants)) {
                if (v < 1 || v > 8) throw InputError("variant ids must be in 1..8");
                variants.push_back(static_cast<int>(v));
            }
            const auto rows = run_ablation(cfg, fold, ds.n_items, seeds, variants, abl_k, [&](const AblationRow& r) {
                out << "(" << r.variant << ") " << std::left << std::setw(18) << r.label << " seed " << r.seed << "  R@"
                    << r.k << " " << fmt(r.recall) << "  N@" << r.k << " " << fmt(r.ndcg) << "\n";
            });
            const auto means = ablation_means(rows);
            out << "mean over seeds:\n";
            for (const auto& m : means)
                out << "(" << m.variant << ") " << std::left << std::setw(18) << m.label << "  R@" << m.k << " "
                    << fmt(m.recall) << "  N@" << m.k << " " << fmt(m.ndcg) << "\n";
            write_ablation_csv(abl_out, rows, means, config_header(cfg));
            return 0;
        }

        if (*cs_cmd) {
            const auto ds = load_dataset(cs_data);
            const auto ck = load_checkpoint(cs_ckpt);
            if (ck.dataset_hash != ds.content_hash()) throw InputError("checkpoint was trained on another dataset");
            const auto cfg = config_from_checkpoint(ck);
            const auto fold = load_fold(cs_data, ds, ck.fold);
            const auto labels = load_item_labels(cs_labels, ds);
            const auto rows = case_study(ck.state, ds, fold, labels, cs_users, cs_per_user, cs_seed);
            out << "user\tpositive\tlabel\tsimilar\tmargin\tdissimilar\tlabel\tmargin\n" << std::setprecision(6);
            for (const auto& r : rows)
                out << r.user << '\t' << r.positive << '\t' << r.positive_label << '\t' << r.similar << '\t'
                    << r.margin_similar << '\t' << r.dissimilar << '\t' << r.dissimilar_label << '\t'
                    << r.margin_dissimilar << '\n';
            const auto s = summarize(rows);
            out << "mean margin: similar " << s.mean_similar << "  dissimilar " << s.mean_dissimilar << "  ("
                << s.rows << " tuples)\n";
            if (!cs_out.empty()) write_case_study_csv(cs_out, rows, config_header(cfg));
            return 0;
        }

        if (*gen_cmd) {
            const auto data = make_planted(spec);
            write_planted(gen_out, data);
            out << "wrote " << data.pairs.size() << " interactions to " << (fs::path(gen_out) / "ratings.tsv").string()
                << "\n";
            return 0;
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace pmlam::cli
