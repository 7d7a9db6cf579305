#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "foliograd/backtest.hpp"
#include "foliograd/config.hpp"
#include "foliograd/errors.hpp"
#include "foliograd/kv.hpp"
#include "foliograd/market_data.hpp"
#include "foliograd/policy_net.hpp"
#include "foliograd/sha1.hpp"
#include "foliograd/state_builder.hpp"
#include "foliograd/trainer.hpp"

namespace foliograd::cli {

using nlohmann::json;

// ---- file plumbing ----------------------------------------------------------

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write: " + path);
}

inline std::string hex_u64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(v));
    return buf;
}

// ---- resolved run: config plus input provenance ------------------------------

struct Run {
    RunConfig rc;
    std::map<std::string, std::string> inputs;  // input name -> git blob hash
};

inline Run load_run(const std::string& config_path,
                    std::optional<long long> seed_override) {
    KvMap kv;
    Run run;
    if (!config_path.empty()) {
        std::string text = read_file(config_path);
        run.inputs["config"] = git_blob_hash(text);
        kv = KvMap::from_text(text, config_path);
    }
    if (seed_override) kv.set("seed", std::to_string(*seed_override));
    run.rc = resolve_config(kv);
    if (!run.rc.synthetic) {
        run.inputs["data.csv"] = git_blob_hash(read_file(run.rc.csv_path));
        run.inputs["data.schema"] = git_blob_hash(read_file(run.rc.schema_path));
    }
    return run;
}

inline ReturnPanel build_panel(const RunConfig& rc) {
    ReturnPanel panel;
    if (rc.synthetic) {
        panel = synthesize(rc.synth);
    } else {
        CsvSchema schema = load_csv_schema(rc.schema_path);
        panel = load_csv(rc.csv_path, schema);
        if (rc.append_cash) panel = append_cash_asset(panel);
    }
    panel.validate();
    return panel;
}

// Reproducibility header: '#' lines carrying the resolved config and the
// content hashes of every input file, prepended to each CSV artifact.
inline std::string provenance_comments(
    const KvMap& echo, const std::map<std::string, std::string>& inputs) {
    std::string out;
    std::istringstream in(echo.render());
    std::string line;
    while (std::getline(in, line)) out += "# " + line + "\n";
    for (const auto& [k, v] : inputs) out += "# input." + k + " = " + v + "\n";
    return out;
}

inline json echo_json(const KvMap& echo) {
    json j = json::object();
    for (const auto& [k, v] : echo.entries()) j[k] = v;
    return j;
}

inline json inputs_json(const std::map<std::string, std::string>& inputs) {
    json j = json::object();
    for (const auto& [k, v] : inputs) j[k] = v;
    return j;
}

inline json summary_json(const BacktestSummary& s) {
    json j;
    j["total_return"] = s.total_return;
    j["annual_return"] = s.annual_return;
    j["annual_std"] = s.annual_std;
    j["sharpe"] = s.sharpe.available ? json(s.sharpe.raw) : json();
    j["sharpe_raw"] = s.sharpe.raw;  // NaN serializes as null
    j["max_drawdown"] = s.max_drawdown;
    return j;
}

// ---- shared pipeline state ----------------------------------------------------

// Splits, builders, and the fitted normalizer; heap-only because the
// builders hold pointers into the split panels.
struct Workspace {
    RunConfig rc;
    SplitResult splits;
    LagSpec d1, d2;
    std::unique_ptr<StateBuilder> train_b, val_b, test_b;
    Normalizer norm;
    PolicySpec policy;  // dimensions stamped from the panel

    Workspace() = default;
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    const SplitPanel& split_named(const std::string& name) const {
        if (name == "train") return splits.train;
        if (name == "validation") return splits.validation;
        return splits.test;
    }
    const StateBuilder& builder_named(const std::string& name) const {
        if (name == "train") return *train_b;
        if (name == "validation") return *val_b;
        return *test_b;
    }
};

inline std::unique_ptr<Workspace> make_workspace(const RunConfig& rc) {
    auto ws = std::make_unique<Workspace>();
    ws->rc = rc;
    ReturnPanel panel = build_panel(rc);
    ws->d1 = LagSpec(rc.return_lags);
    ws->d2 = LagSpec(rc.context_lags);
    std::size_t warmup =
        std::max(ws->d1.max_lag(), ws->d2.max_lag()) + rc.std_window;
    ws->splits = split(panel, rc.split, warmup);
    ws->train_b = std::make_unique<StateBuilder>(ws->splits.train.panel, ws->d1,
                                                 ws->d2, rc.std_window);
    ws->val_b = std::make_unique<StateBuilder>(ws->splits.validation.panel,
                                               ws->d1, ws->d2, rc.std_window);
    ws->test_b = std::make_unique<StateBuilder>(ws->splits.test.panel, ws->d1,
                                                ws->d2, rc.std_window);
    ws->policy = complete_policy(rc.policy, panel, rc.return_lags, rc.context_lags);

    // normalization constants come from the training decision days only
    const SplitPanel& tr = ws->splits.train;
    std::size_t begin = std::max(tr.eval_begin, ws->train_b->first_valid());
    if (tr.panel.days() < 2 || begin + 1 >= tr.panel.days())
        throw DataError("train split leaves no decision days");
    std::vector<double> w0 = initial_weights(tr.panel);
    std::vector<StateTensor> states;
    for (std::size_t t = begin; t + 1 < tr.panel.days(); ++t)
        states.push_back(ws->train_b->build(t, w0));
    ws->norm = Normalizer::fit(states);
    return ws;
}

inline ModelVariant run_variant(const RunConfig& rc) {
    return ModelVariant{rc.train.reward, rc.train.adversarial, rc.policy.arch,
                        rc.policy.use_prev_weights, rc.policy.use_context};
}

// ---- prepare -----------------------------------------------------------------

inline json split_json(const SplitPanel& sp) {
    json j;
    j["days"] = sp.panel.days();
    j["eval_begin"] = sp.eval_begin;
    j["eval_days"] = sp.eval_days();
    j["first_date"] = sp.panel.dates.front().to_string();
    j["last_date"] = sp.panel.dates.back().to_string();
    j["first_eval_date"] = sp.panel.dates[sp.eval_begin].to_string();
    return j;
}

inline int cmd_prepare(const Run& run, const std::string& out_dir) {
    ReturnPanel panel = build_panel(run.rc);
    LagSpec d1(run.rc.return_lags), d2(run.rc.context_lags);
    std::size_t warmup = std::max(d1.max_lag(), d2.max_lag()) + run.rc.std_window;
    SplitResult splits = split(panel, run.rc.split, warmup);

    // cached panel: returns + context under a role schema, reloadable as-is
    std::string csv = provenance_comments(run.rc.echo, run.inputs);
    csv += "date";
    for (const auto& n : panel.asset_names) csv += "," + n;
    for (const auto& n : panel.context_names) csv += "," + n;
    csv += '\n';
    for (std::size_t t = 0; t < panel.days(); ++t) {
        csv += panel.dates[t].to_string();
        for (std::size_t a = 0; a < panel.assets(); ++a)
            csv += "," + format_double(panel.asset_returns.at(t, a));
        for (std::size_t c = 0; c < panel.context_features(); ++c)
            csv += "," + format_double(panel.context.at(t, c));
        csv += '\n';
    }
    write_file(out_dir + "/panel.csv", csv);

    std::string schema = "date = date\n";
    for (std::size_t a = 0; a < panel.assets(); ++a)
        schema += panel.asset_names[a] +
                  (a == panel.cash_index ? " = asset_cash\n" : " = asset_return\n");
    for (const auto& n : panel.context_names) schema += n + " = context\n";
    write_file(out_dir + "/panel_schema.txt", schema);

    json j;
    j["command"] = "prepare";
    j["config"] = echo_json(run.rc.echo);
    j["inputs"] = inputs_json(run.inputs);
    j["files"] = {{"panel", "panel.csv"}, {"schema", "panel_schema.txt"}};
    json p;
    p["days"] = panel.days();
    p["assets"] = panel.asset_names;
    p["context"] = panel.context_names;
    p["cash_index"] =
        panel.cash_index == kNoCash ? json() : json(panel.cash_index);
    p["dropped_rows"] = panel.dropped_rows;
    j["panel"] = p;
    j["splits"] = {{"train", split_json(splits.train)},
                   {"validation", split_json(splits.validation)},
                   {"test", split_json(splits.test)}};
    j["warmup_days"] = warmup;
    write_file(out_dir + "/prepare.json", j.dump(2) + "\n");
    return 0;
}

// ---- train -------------------------------------------------------------------

inline int cmd_train(const Run& run, const std::string& out_dir) {
    auto ws = make_workspace(run.rc);
    TrainInputs in{ws->train_b.get(), ws->splits.train.eval_begin,
                   ws->val_b.get(), ws->splits.validation.eval_begin, &ws->norm};
    TrainResult tr = train(ws->policy, ws->rc.train, in);

    save_checkpoint(out_dir + "/checkpoint.bin", ws->policy, tr.best);
    write_file(out_dir + "/train_log.csv",
               provenance_comments(run.rc.echo, run.inputs) + tr.log_csv());

    json j;
    j["command"] = "train";
    j["config"] = echo_json(run.rc.echo);
    j["inputs"] = inputs_json(run.inputs);
    j["label"] = run_variant(run.rc).label();
    j["spec_hash"] = hex_u64(detail::spec_hash(ws->policy));
    j["param_count"] = tr.best.params.size();
    j["best_epoch"] = tr.best_epoch;
    j["best_metric"] = tr.best_metric;
    j["epochs"] = run.rc.train.epochs;
    j["aborted"] = tr.aborted;
    j["files"] = {{"checkpoint", "checkpoint.bin"}, {"log", "train_log.csv"}};
    write_file(out_dir + "/train.json", j.dump(2) + "\n");
    return 0;
}

// ---- evaluate ----------------------------------------------------------------

inline json mean_weights_json(const BacktestReport& rep) {
    json j = json::object();
    if (rep.weights.rows == 0) return j;
    for (std::size_t a = 0; a < rep.asset_names.size(); ++a) {
        double s = 0.0;
        for (std::size_t t = 0; t < rep.weights.rows; ++t)
            s += rep.weights.at(t, a);
        j[rep.asset_names[a]] = s / static_cast<double>(rep.weights.rows);
    }
    return j;
}

inline BacktestReport evaluate_params(const Workspace& ws, const PolicySpec& spec,
                                      const std::vector<double>& params,
                                      const std::string& label) {
    ParamSet ps;
    ps.slices = param_layout(spec);
    ps.values = params;
    const SplitPanel& sp = ws.split_named(ws.rc.eval_split);
    const StateBuilder& b = ws.builder_named(ws.rc.eval_split);
    BacktestWindow w = eval_window(sp, b, ws.rc.train.commission);
    BacktestReport rep = run_backtest(
        [&](const StateTensor& s) { return policy_evaluate(spec, ps, s); }, b,
        ws.norm, w);
    rep.model_label = label;
    return rep;
}

inline int cmd_evaluate(const Run& run, const std::string& out_dir,
                        const std::string& checkpoint_path, bool export_params) {
    auto ws = make_workspace(run.rc);
    Checkpoint ck = load_checkpoint(checkpoint_path, ws->policy);
    BacktestReport rep =
        evaluate_params(*ws, ws->policy, ck.params, run_variant(run.rc).label());

    write_file(out_dir + "/backtest.csv",
               provenance_comments(run.rc.echo, run.inputs) + report_csv(rep));

    json j;
    j["command"] = "evaluate";
    j["config"] = echo_json(run.rc.echo);
    j["inputs"] = inputs_json(run.inputs);
    j["label"] = rep.model_label;
    j["eval_split"] = run.rc.eval_split;
    j["checkpoint"] = {{"path", checkpoint_path},
                       {"spec_hash", hex_u64(detail::spec_hash(ws->policy))},
                       {"seed", ck.seed},
                       {"step", ck.step},
                       {"param_count", ck.params.size()}};
    j["first_date"] = rep.dates.front().to_string();
    j["last_date"] = rep.dates.back().to_string();
    j["decision_days"] = rep.dates.size();
    j["summary"] = summary_json(rep.summary);
    j["mean_weights"] = mean_weights_json(rep);
    j["files"] = {{"backtest", "backtest.csv"}};
    write_file(out_dir + "/evaluate.json", j.dump(2) + "\n");

    if (export_params) {
        json pj;
        pj["spec_hash"] = hex_u64(detail::spec_hash(ws->policy));
        pj["param_count"] = ck.params.size();
        json slices = json::array();
        for (const auto& s : param_layout(ws->policy)) {
            json sj;
            sj["name"] = s.name;
            sj["offset"] = s.offset;
            sj["shape"] = s.shape;
            sj["values"] = std::vector<double>(
                ck.params.begin() + static_cast<std::ptrdiff_t>(s.offset),
                ck.params.begin() + static_cast<std::ptrdiff_t>(s.offset + s.numel()));
            slices.push_back(sj);
        }
        pj["slices"] = slices;
        write_file(out_dir + "/params.json", pj.dump(2) + "\n");
    }
    return 0;
}

// ---- grid --------------------------------------------------------------------

struct GridOutcome {
    ModelVariant var;
    KvMap echo;
    BacktestReport rep;
    std::size_t best_epoch = 0;
    double best_metric = 0.0;
    bool aborted = false;
    std::uint64_t train_seed = 0;
};

inline GridOutcome run_grid_model(const Workspace& ws, const ModelVariant& var,
                                  std::size_t index) {
    GridOutcome out;
    out.var = var;

    PolicySpec spec = ws.policy;
    spec.arch = var.arch;
    spec.use_context = var.use_context;
    spec.use_prev_weights = var.use_prev_weights;
    spec.validate();

    TrainConfig tc = ws.rc.train;
    tc.reward = var.reward;
    tc.adversarial = var.adversarial;
    tc.seed = ws.rc.seed + index;  // independent streams per model
    out.train_seed = tc.seed;

    TrainInputs in{ws.train_b.get(), ws.splits.train.eval_begin, ws.val_b.get(),
                   ws.splits.validation.eval_begin, &ws.norm};
    TrainResult tr = train(spec, tc, in);
    out.best_epoch = tr.best_epoch;
    out.best_metric = tr.best_metric;
    out.aborted = tr.aborted;

    ParamSet ps;
    ps.slices = param_layout(spec);
    ps.values = tr.best.params;
    const SplitPanel& sp = ws.split_named(ws.rc.eval_split);
    const StateBuilder& b = ws.builder_named(ws.rc.eval_split);
    BacktestWindow w = eval_window(sp, b, tc.commission);
    out.rep = run_backtest(
        [&](const StateTensor& s) { return policy_evaluate(spec, ps, s); }, b,
        ws.norm, w);
    out.rep.model_label = var.label();

    out.echo = ws.rc.echo;
    out.echo.set("network.arch", arch_name(var.arch));
    out.echo.set("network.context", var.use_context ? "true" : "false");
    out.echo.set("network.prev_weights", var.use_prev_weights ? "true" : "false");
    out.echo.set("train.reward", reward_name(var.reward));
    out.echo.set("train.adversarial", var.adversarial ? "true" : "false");
    out.echo.set("seed", std::to_string(tc.seed));
    out.echo.set("grid.index", std::to_string(index));
    return out;
}

inline json grid_model_json(const GridOutcome& g, const Run& run) {
    json j;
    j["label"] = g.var.label();
    j["axes"] = {{"reward", reward_name(g.var.reward)},
                 {"adversarial", g.var.adversarial},
                 {"arch", arch_name(g.var.arch)},
                 {"prev_weights", g.var.use_prev_weights},
                 {"context", g.var.use_context}};
    j["seed"] = g.train_seed;
    j["eval_split"] = run.rc.eval_split;
    j["commission"] = run.rc.train.commission;
    j["training"] = {{"best_epoch", g.best_epoch},
                     {"best_metric", g.best_metric},
                     {"aborted", g.aborted}};
    j["summary"] = summary_json(g.rep.summary);
    json dates = json::array();
    for (const auto& d : g.rep.dates) dates.push_back(d.to_string());
    j["dates"] = dates;
    j["daily_returns"] = g.rep.daily_returns;
    j["mean_weights"] = mean_weights_json(g.rep);
    j["config"] = echo_json(g.echo);
    j["inputs"] = inputs_json(run.inputs);
    return j;
}

inline int cmd_grid(const Run& run, const std::string& out_dir) {
    auto ws = make_workspace(run.rc);
    std::vector<ModelVariant> variants = enumerate_grid();
    std::vector<std::unique_ptr<GridOutcome>> slots(variants.size());
    std::vector<std::exception_ptr> errors(variants.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= variants.size()) break;
            try {
                slots[i] = std::make_unique<GridOutcome>(
                    run_grid_model(*ws, variants[i], i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::size_t n_workers = std::min(run.rc.grid_parallelism, variants.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    // all artifacts are written after the joins, in enumeration order, so the
    // bytes cannot depend on the parallelism degree
    std::vector<std::pair<ModelVariant, BacktestReport>> pairs;
    for (const auto& g : slots) {
        write_file(out_dir + "/grid/" + g->var.label() + ".json",
                   grid_model_json(*g, run).dump(2) + "\n");
        pairs.emplace_back(g->var, g->rep);
    }
    Comparison cmp = compare(pairs);
    std::string head = provenance_comments(run.rc.echo, run.inputs);
    write_file(out_dir + "/ranking.csv", head + comparison_csv(cmp));
    write_file(out_dir + "/ablation.csv", head + ablation_csv(cmp));

    json j;
    j["command"] = "grid";
    j["config"] = echo_json(run.rc.echo);
    j["inputs"] = inputs_json(run.inputs);
    j["models"] = json::array();
    for (const auto& g : slots)
        j["models"].push_back(g->var.label());
    json ranked = json::array();
    for (const auto& r : cmp.rows) ranked.push_back(r.label);
    j["ranking"] = ranked;
    j["files"] = {{"reports", "grid/"},
                  {"ranking", "ranking.csv"},
                  {"ablation", "ablation.csv"}};
    write_file(out_dir + "/grid.json", j.dump(2) + "\n");
    return 0;
}

// ---- compare -----------------------------------------------------------------

inline std::pair<ModelVariant, BacktestReport> read_grid_report(
    const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    try {
        ModelVariant var;
        const json& ax = j.at("axes");
        var.reward = parse_reward(ax.at("reward").get<std::string>());
        var.adversarial = ax.at("adversarial").get<bool>();
        var.arch = parse_arch(ax.at("arch").get<std::string>());
        var.use_prev_weights = ax.at("prev_weights").get<bool>();
        var.use_context = ax.at("context").get<bool>();

        BacktestReport rep;
        rep.model_label = j.at("label").get<std::string>();
        for (const auto& d : j.at("dates"))
            rep.dates.push_back(parse_date(d.get<std::string>()));
        rep.daily_returns = j.at("daily_returns").get<std::vector<double>>();
        rep.commission = j.at("commission").get<double>();
        rep.values.assign(1, 1.0);
        for (double r : rep.daily_returns)
            rep.values.push_back(rep.values.back() * (1.0 + r));
        rep.recompute_summary();
        return {var, rep};
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

inline int cmd_compare(const Run& run, const std::string& reports_dir,
                       const std::string& out_dir) {
    if (!std::filesystem::is_directory(reports_dir))
        throw DataError("no report directory: " + reports_dir);
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(reports_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no grid reports in " + reports_dir);

    std::vector<std::pair<ModelVariant, BacktestReport>> pairs;
    for (const auto& f : files) pairs.push_back(read_grid_report(f));

    Comparison cmp = compare(pairs);
    std::string head = provenance_comments(run.rc.echo, run.inputs);
    write_file(out_dir + "/ranking.csv", head + comparison_csv(cmp));
    write_file(out_dir + "/ablation.csv", head + ablation_csv(cmp));
    return 0;
}

// ---- entry point ---------------------------------------------------------------

inline int run_command(std::vector<std::string> args) {
    CLI::App app{"context-driven deep-RL portfolio allocation"};
    app.name("foliograd");
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string checkpoint_path;
    std::string reports_dir;
    long long seed_val = 0;
    bool export_params = false;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path,
                      "run configuration (key = value lines)");
        c->add_option("--seed", seed_val, "override the config seed");
        c->add_option("--out", out_dir, "output directory (default: out)");
    };

    CLI::App* c_prepare =
        app.add_subcommand("prepare", "build, align, and cache the data panel");
    CLI::App* c_train =
        app.add_subcommand("train", "train a policy and keep the best checkpoint");
    CLI::App* c_eval = app.add_subcommand(
        "evaluate", "backtest a checkpoint on the evaluation split");
    CLI::App* c_grid =
        app.add_subcommand("grid", "train and evaluate the full 32-model grid");
    CLI::App* c_compare = app.add_subcommand(
        "compare", "rebuild ranking and ablation tables from grid reports");
    for (CLI::App* c : {c_prepare, c_train, c_eval, c_grid, c_compare})
        add_common(c);
    c_eval->add_option("--checkpoint", checkpoint_path,
                       "checkpoint file (default: <out>/checkpoint.bin)");
    c_eval->add_flag("--export-params", export_params,
                     "also write the parameter tensors as JSON");
    c_compare->add_option("--reports", reports_dir,
                          "directory of grid report JSONs (default: <out>/grid)");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));

        CLI::App* sub = app.get_subcommands().front();
        std::optional<long long> seed;
        if (sub->count("--seed")) seed = seed_val;
        Run run = load_run(config_path, seed);

        if (sub == c_prepare) return cmd_prepare(run, out_dir);
        if (sub == c_train) return cmd_train(run, out_dir);
        if (sub == c_eval)
            return cmd_evaluate(run, out_dir,
                                checkpoint_path.empty()
                                    ? out_dir + "/checkpoint.bin"
                                    : checkpoint_path,
                                export_params);
        if (sub == c_grid) return cmd_grid(run, out_dir);
        return cmd_compare(
            run, reports_dir.empty() ? out_dir + "/grid" : reports_dir, out_dir);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace foliograd::cli
