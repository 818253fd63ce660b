// ssb — command-line front end for the arbitrage-dynamics library.
//
// Subcommands: simulate, phase, estimate, backtest, sweep, stats.
// Shared flags: --config <json>, --out <dir>, --seed <u64>.
// Flag values override config-file values, which override built-in defaults.
// Every run writes a resolved run_config.json next to its outputs; outputs
// are deterministic byte-for-byte for a fixed config and seed.
//
// Exit codes: 0 success, 2 config/usage error, 3 data error, 4 numeric/
// domain error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ssb/dynamics.hpp"
#include "ssb/errors.hpp"
#include "ssb/estimation.hpp"
#include "ssb/marketdata.hpp"
#include "ssb/series.hpp"
#include "ssb/stats.hpp"
#include "ssb/strategy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 12345;

    // simulate
    double lambda = 1.0;
    double lambda_c = 1.0;
    double r_c = 1.0;
    double rho = 0.0;
    double r0 = 0.0;
    std::int64_t steps = 100;
    double noise = 0.0;

    // phase
    double ratio_min = 0.01;
    double ratio_max = 2.0;
    int ratio_steps = 200;

    // estimate / stats
    std::string input;
    int k = 10;
    std::string kind = "current";
    std::string cumulative = "sum";

    // backtest / sweep
    std::string prices;
    std::string membership;
    std::string riskfree;
    std::string benchmark;
    int j = 1;
    int k_hold = 1;
    int groups = 10;
    std::string direction = "contrarian";
    int gate_k = 0; // 0 = no gate
    std::string weak_field = "off";
    int k_min = 2;
    int k_max = 100;
    bool common_sample = false;
};

void apply_config_file(const std::string& path, Options& o) {
    std::ifstream is(path);
    if (!is) throw ssb::ConfigError("cannot open config file '" + path + "'");
    json cfg;
    try {
        cfg = json::parse(is);
    } catch (const json::exception& e) {
        throw ssb::ConfigError("config file '" + path + "': " + e.what());
    }
    if (!cfg.is_object()) throw ssb::ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : cfg.items()) {
        try {
            if (key == "out") o.out_dir = value.get<std::string>();
            else if (key == "seed") o.seed = value.get<std::uint64_t>();
            else if (key == "lambda") o.lambda = value.get<double>();
            else if (key == "lambda_c") o.lambda_c = value.get<double>();
            else if (key == "r_c") o.r_c = value.get<double>();
            else if (key == "rho") o.rho = value.get<double>();
            else if (key == "r0") o.r0 = value.get<double>();
            else if (key == "steps") o.steps = value.get<std::int64_t>();
            else if (key == "noise") o.noise = value.get<double>();
            else if (key == "ratio_min") o.ratio_min = value.get<double>();
            else if (key == "ratio_max") o.ratio_max = value.get<double>();
            else if (key == "ratio_steps") o.ratio_steps = value.get<int>();
            else if (key == "input") o.input = value.get<std::string>();
            else if (key == "k") o.k = value.get<int>();
            else if (key == "kind") o.kind = value.get<std::string>();
            else if (key == "cumulative") o.cumulative = value.get<std::string>();
            else if (key == "prices") o.prices = value.get<std::string>();
            else if (key == "membership") o.membership = value.get<std::string>();
            else if (key == "riskfree") o.riskfree = value.get<std::string>();
            else if (key == "benchmark") o.benchmark = value.get<std::string>();
            else if (key == "j") o.j = value.get<int>();
            else if (key == "k_hold") o.k_hold = value.get<int>();
            else if (key == "groups") o.groups = value.get<int>();
            else if (key == "direction") o.direction = value.get<std::string>();
            else if (key == "gate_k") o.gate_k = value.get<int>();
            else if (key == "weak_field") o.weak_field = value.get<std::string>();
            else if (key == "k_min") o.k_min = value.get<int>();
            else if (key == "k_max") o.k_max = value.get<int>();
            else if (key == "common_sample") o.common_sample = value.get<bool>();
            else throw ssb::ConfigError("unknown config key '" + key + "'");
        } catch (const json::exception& e) {
            throw ssb::ConfigError("config key '" + key + "': " + e.what());
        }
    }
}

// Removes this run's outputs if it fails partway, so failures never leave
// half-written files behind.
class OutputGuard {
public:
    ~OutputGuard() {
        if (!armed_) return;
        std::error_code ec;
        for (const auto& p : paths_) fs::remove(p, ec);
    }
    void track(const fs::path& p) { paths_.push_back(p); }
    void disarm() { armed_ = false; }

private:
    std::vector<fs::path> paths_;
    bool armed_ = true;
};

void write_text(const fs::path& path, const std::string& content, OutputGuard& guard) {
    guard.track(path);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ssb::DataError("cannot open '" + path.string() + "' for writing");
    os << content;
    if (!os) throw ssb::DataError("failed writing '" + path.string() + "'");
}

template <typename WriteFn>
void write_stream(const fs::path& path, OutputGuard& guard, WriteFn&& fn) {
    guard.track(path);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ssb::DataError("cannot open '" + path.string() + "' for writing");
    fn(os);
    if (!os) throw ssb::DataError("failed writing '" + path.string() + "'");
}

void require_file(const std::string& path, const std::string& flag) {
    if (path.empty()) throw ssb::ConfigError("missing required input: " + flag);
    if (!fs::exists(path)) throw ssb::ConfigError(flag + " file '" + path + "' does not exist");
}

fs::path prepare_out_dir(const Options& o) {
    fs::path dir(o.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ssb::ConfigError("cannot create output directory '" + o.out_dir + "'");
    return dir;
}

json base_config(const Options& o, const std::string& subcommand) {
    json j;
    j["subcommand"] = subcommand;
    j["out"] = o.out_dir;
    j["config"] = o.config_path.empty() ? json(nullptr) : json(o.config_path);
    return j;
}

json series_summary_json(const ssb::ReturnSeries& s) {
    return ssb::to_json(ssb::summary_stats(s));
}

// --------------------------------------------------------------------------
// Subcommand bodies.
// --------------------------------------------------------------------------

void cmd_simulate(const Options& o) {
    ssb::SsbParams params{o.lambda, o.lambda_c, o.r_c, o.rho};
    ssb::PathSpec spec{o.r0, o.steps, o.noise, o.seed};
    ssb::ReturnSeries path = ssb::simulate_path(params, spec);

    fs::path dir = prepare_out_dir(o);
    OutputGuard guard;

    json cfg = base_config(o, "simulate");
    cfg["seed"] = o.seed;
    cfg["lambda"] = o.lambda;
    cfg["lambda_c"] = o.lambda_c;
    cfg["r_c"] = o.r_c;
    cfg["rho"] = o.rho;
    cfg["r0"] = o.r0;
    cfg["steps"] = o.steps;
    cfg["noise"] = o.noise;
    write_text(dir / "run_config.json", cfg.dump(2) + "\n", guard);

    write_stream(dir / "path.csv", guard, [&](std::ostream& os) { ssb::write_series_csv(os, path); });

    json sidecar;
    sidecar["config"] = cfg;
    sidecar["phase"] = ssb::to_string(ssb::classify_phase(params));
    sidecar["fixed_points"] = ssb::fixed_points(params);
    auto rv = ssb::spontaneous_return(params);
    sidecar["spontaneous_return"] = rv ? json(*rv) : json(nullptr);
    sidecar["terminal_value"] = path.values.back();
    write_text(dir / "simulate.json", sidecar.dump(2) + "\n", guard);
    guard.disarm();
}

void cmd_phase(const Options& o) {
    if (!(o.ratio_min > 0.0)) throw ssb::ConfigError("ratio_min must be > 0");
    if (!(o.ratio_max >= o.ratio_min)) throw ssb::ConfigError("ratio_max must be >= ratio_min");
    if (o.ratio_steps < 1) throw ssb::ConfigError("ratio_steps must be >= 1");
    if (!(o.r_c > 0.0)) throw ssb::ConfigError("r_c must be > 0");

    fs::path dir = prepare_out_dir(o);
    OutputGuard guard;

    json cfg = base_config(o, "phase");
    cfg["r_c"] = o.r_c;
    cfg["ratio_min"] = o.ratio_min;
    cfg["ratio_max"] = o.ratio_max;
    cfg["ratio_steps"] = o.ratio_steps;
    write_text(dir / "run_config.json", cfg.dump(2) + "\n", guard);

    write_stream(dir / "phase.csv", guard, [&](std::ostream& os) {
        os << "lambda_ratio,asymptotic_return\n";
        for (int i = 0; i < o.ratio_steps; ++i) {
            double ratio = o.ratio_steps == 1
                               ? o.ratio_min
                               : o.ratio_min + (o.ratio_max - o.ratio_min) * i / (o.ratio_steps - 1);
            double asym = ratio < 1.0 ? std::sqrt(1.0 - ratio) * o.r_c : 0.0;
            os << ssb::detail::format_double(ratio) << ','
               << ssb::detail::format_double(asym) << '\n';
        }
    });
    guard.disarm();
}

void cmd_estimate(const Options& o) {
    require_file(o.input, "--input");
    ssb::ReturnSeries series = ssb::read_series_csv(o.input);
    ssb::EstimatorKind kind = ssb::estimator_kind_from_string(o.kind);
    auto forecasts = ssb::lambda_series(series, ssb::MaWindow{o.k}, kind);

    fs::path dir = prepare_out_dir(o);
    OutputGuard guard;

    json cfg = base_config(o, "estimate");
    cfg["input"] = o.input;
    cfg["k"] = o.k;
    cfg["kind"] = o.kind;
    write_text(dir / "run_config.json", cfg.dump(2) + "\n", guard);

    write_stream(dir / "forecasts.csv", guard,
                 [&](std::ostream& os) { ssb::write_forecasts_csv(os, forecasts); });

    double mean = 0.0;
    for (const auto& f : forecasts) mean += f.value;
    mean /= static_cast<double>(forecasts.size());
    json sidecar;
    sidecar["config"] = cfg;
    sidecar["n_forecasts"] = forecasts.size();
    sidecar["mean_lambda_hat"] = mean;
    write_text(dir / "estimate.json", sidecar.dump(2) + "\n", guard);
    guard.disarm();
}

void cmd_stats(const Options& o) {
    require_file(o.input, "--input");
    ssb::ReturnSeries series = ssb::read_series_csv(o.input);
    ssb::CumulativeMode mode = ssb::cumulative_mode_from_string(o.cumulative);
    ssb::SummaryStats stats = ssb::summary_stats(series);
    ssb::ReturnSeries cumulative = ssb::cumulative_returns(series, mode);

    fs::path dir = prepare_out_dir(o);
    OutputGuard guard;

    json cfg = base_config(o, "stats");
    cfg["input"] = o.input;
    cfg["cumulative"] = o.cumulative;
    write_text(dir / "run_config.json", cfg.dump(2) + "\n", guard);

    json out;
    out["config"] = cfg;
    out["stats"] = ssb::to_json(stats);
    write_text(dir / "stats.json", out.dump(2) + "\n", guard);
    write_stream(dir / "cumulative.csv", guard,
                 [&](std::ostream& os) { ssb::write_series_csv(os, cumulative); });
    guard.disarm();
}

struct LoadedMarket {
    ssb::PriceTable prices;
    ssb::MembershipCalendar membership;
    ssb::RiskFreeSeries riskfree;
};

LoadedMarket load_market(const Options& o) {
    require_file(o.prices, "--prices");
    require_file(o.membership, "--membership");
    require_file(o.riskfree, "--riskfree");
    if (o.benchmark.empty()) throw ssb::ConfigError("missing required input: --benchmark");
    LoadedMarket m;
    m.prices = ssb::load_prices(o.prices);
    m.membership = ssb::load_membership(o.membership);
    m.riskfree = ssb::load_risk_free(o.riskfree);
    return m;
}

ssb::StrategySpec spec_from(const Options& o) {
    ssb::StrategySpec spec;
    spec.lookback_j = o.j;
    spec.holding_k = o.k_hold;
    spec.n_groups = o.groups;
    spec.direction = ssb::direction_from_string(o.direction);
    ssb::validate(spec);
    return spec;
}

json market_config(const Options& o, const std::string& subcommand) {
    json cfg = base_config(o, subcommand);
    cfg["prices"] = o.prices;
    cfg["membership"] = o.membership;
    cfg["riskfree"] = o.riskfree;
    cfg["benchmark"] = o.benchmark;
    cfg["j"] = o.j;
    cfg["k_hold"] = o.k_hold;
    cfg["groups"] = o.groups;
    cfg["direction"] = o.direction;
    cfg["kind"] = o.kind;
    return cfg;
}

void cmd_backtest(const Options& o) {
    LoadedMarket m = load_market(o);
    ssb::StrategySpec spec = spec_from(o);

    ssb::BacktestReport report;
    if (o.gate_k > 0) {
        ssb::GateConfig gate{o.gate_k, ssb::estimator_kind_from_string(o.kind),
                             ssb::weak_field_from_string(o.weak_field)};
        report = ssb::run_ssb_backtest(m.prices, m.membership, m.riskfree, spec, o.benchmark, gate);
    } else {
        report = ssb::run_naive_backtest(m.prices, m.membership, m.riskfree, spec, o.benchmark);
    }
    if (report.long_short.empty())
        throw ssb::DataError("backtest produced no feasible weeks; check data coverage");

    fs::path dir = prepare_out_dir(o);
    OutputGuard guard;

    json cfg = market_config(o, "backtest");
    cfg["gate_k"] = o.gate_k;
    cfg["weak_field"] = o.weak_field;
    write_text(dir / "run_config.json", cfg.dump(2) + "\n", guard);

    auto dump_series = [&](const char* name, const ssb::ReturnSeries& s) {
        write_stream(dir / (std::string(name) + ".csv"), guard,
                     [&](std::ostream& os) { ssb::write_series_csv(os, s); });
    };
    dump_series("winner", report.winner);
    dump_series("loser", report.loser);
    dump_series("long_short", report.long_short);
    dump_series("benchmark", report.benchmark);

    json out;
    out["config"] = cfg;
    out["n_weeks"] = report.long_short.size();
    out["stats"]["winner"] = series_summary_json(report.winner);
    out["stats"]["loser"] = series_summary_json(report.loser);
    out["stats"]["long_short"] = series_summary_json(report.long_short);
    out["stats"]["benchmark"] = series_summary_json(report.benchmark);
    json skipped = json::array();
    for (const auto& [week, reason] : report.skipped)
        skipped.push_back({{"week", week}, {"reason", reason}});
    out["skipped_weeks"] = skipped;

    if (report.gated) {
        dump_series("gated", *report.gated);
        write_stream(dir / "decisions.csv", guard, [&](std::ostream& os) {
            ssb::write_decisions_csv(os, report.decisions);
        });
        out["stats"]["gated"] = series_summary_json(*report.gated);
        std::size_t executed = 0;
        for (const auto& d : report.decisions)
            if (d.status == ssb::WeekStatus::Executed) ++executed;
        out["n_executed"] = executed;
    }
    write_text(dir / "report.json", out.dump(2) + "\n", guard);
    guard.disarm();
}

void cmd_sweep(const Options& o) {
    LoadedMarket m = load_market(o);
    ssb::StrategySpec spec = spec_from(o);
    ssb::EstimatorKind kind = ssb::estimator_kind_from_string(o.kind);
    ssb::WeakFieldMode wf = ssb::weak_field_from_string(o.weak_field);

    ssb::BacktestReport naive =
        ssb::run_naive_backtest(m.prices, m.membership, m.riskfree, spec, o.benchmark);
    if (naive.long_short.empty())
        throw ssb::DataError("backtest produced no feasible weeks; check data coverage");
    ssb::SweepTable table = ssb::sweep_ma_windows(naive, kind, o.k_min, o.k_max, o.common_sample, wf);

    fs::path dir = prepare_out_dir(o);
    OutputGuard guard;

    json cfg = market_config(o, "sweep");
    cfg["weak_field"] = o.weak_field;
    cfg["k_min"] = o.k_min;
    cfg["k_max"] = o.k_max;
    cfg["common_sample"] = o.common_sample;
    write_text(dir / "run_config.json", cfg.dump(2) + "\n", guard);

    write_stream(dir / "sweep.csv", guard,
                 [&](std::ostream& os) { ssb::write_sweep_csv(os, table); });

    json out;
    out["config"] = cfg;
    out["n_rows"] = table.rows.size();
    json failures = json::array();
    for (const auto& [k, reason] : table.failures)
        failures.push_back({{"k", k}, {"reason", reason}});
    out["failures"] = failures;
    write_text(dir / "sweep.json", out.dump(2) + "\n", guard);
    guard.disarm();
}

} // namespace

int main(int argc, char** argv) {
    Options o;

    // The config file provides defaults, so apply it before the real parse;
    // flags given on the command line then override it field by field.
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            o.config_path = argv[i + 1];
        } else if (arg.rfind("--config=", 0) == 0) {
            o.config_path = arg.substr(9);
        }
    }
    try {
        if (!o.config_path.empty()) apply_config_file(o.config_path, o);
    } catch (const ssb::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"Arbitrage-dynamics toolkit: simulate the cubic-drift return model, "
                 "estimate speeds of adjustment, and run regime-gated momentum/contrarian "
                 "backtests"};
    app.require_subcommand(1);

    auto add_shared = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON config file (defaults for any flag)");
        sub->add_option("--out", o.out_dir, "output directory");
        sub->add_option("--seed", o.seed, "RNG seed");
    };

    CLI::App* sim = app.add_subcommand("simulate", "iterate the discrete return map");
    add_shared(sim);
    sim->add_option("--lambda", o.lambda, "speed of adjustment");
    sim->add_option("--lambda-c", o.lambda_c, "critical speed of adjustment");
    sim->add_option("--r-c", o.r_c, "cutoff return scale");
    sim->add_option("--rho", o.rho, "weak-field constant");
    sim->add_option("--r0", o.r0, "initial return");
    sim->add_option("--steps", o.steps, "number of steps");
    sim->add_option("--noise", o.noise, "per-step Gaussian noise std");

    CLI::App* phase = app.add_subcommand("phase", "asymptotic return vs lambda/lambda_c");
    add_shared(phase);
    phase->add_option("--r-c", o.r_c, "cutoff return scale");
    phase->add_option("--ratio-min", o.ratio_min, "smallest lambda/lambda_c");
    phase->add_option("--ratio-max", o.ratio_max, "largest lambda/lambda_c");
    phase->add_option("--ratio-steps", o.ratio_steps, "number of grid points");

    CLI::App* est = app.add_subcommand("estimate", "rolling speed-of-adjustment forecasts");
    add_shared(est);
    est->add_option("--input", o.input, "return series CSV (period,value)");
    est->add_option("--k", o.k, "MA window length");
    est->add_option("--kind", o.kind, "estimator kind: current|lagged|covariance");

    CLI::App* bt = app.add_subcommand("backtest", "J/K momentum or contrarian backtest");
    add_shared(bt);
    bt->add_option("--prices", o.prices, "prices CSV (date,ticker,close)");
    bt->add_option("--membership", o.membership, "membership CSV (ticker,enter_date,exit_date)");
    bt->add_option("--riskfree", o.riskfree, "risk-free CSV (date,annual_rate)");
    bt->add_option("--benchmark", o.benchmark, "benchmark ticker symbol");
    bt->add_option("--j", o.j, "lookback weeks");
    bt->add_option("--k-hold", o.k_hold, "holding weeks");
    bt->add_option("--groups", o.groups, "number of performance groups");
    bt->add_option("--direction", o.direction, "momentum|contrarian");
    bt->add_option("--gate-k", o.gate_k, "regime-gate MA window (0 = ungated)");
    bt->add_option("--kind", o.kind, "gate estimator kind: current|lagged|covariance");
    bt->add_option("--weak-field", o.weak_field, "off|window_mean|previous_return");

    CLI::App* sweep = app.add_subcommand("sweep", "gate performance across MA windows");
    add_shared(sweep);
    sweep->add_option("--prices", o.prices, "prices CSV (date,ticker,close)");
    sweep->add_option("--membership", o.membership, "membership CSV");
    sweep->add_option("--riskfree", o.riskfree, "risk-free CSV");
    sweep->add_option("--benchmark", o.benchmark, "benchmark ticker symbol");
    sweep->add_option("--j", o.j, "lookback weeks");
    sweep->add_option("--k-hold", o.k_hold, "holding weeks");
    sweep->add_option("--groups", o.groups, "number of performance groups");
    sweep->add_option("--direction", o.direction, "momentum|contrarian");
    sweep->add_option("--kind", o.kind, "gate estimator kind");
    sweep->add_option("--weak-field", o.weak_field, "off|window_mean|previous_return");
    sweep->add_option("--k-min", o.k_min, "smallest MA window");
    sweep->add_option("--k-max", o.k_max, "largest MA window");
    sweep->add_flag("--common-sample", o.common_sample,
                    "evaluate every window over the largest window's sample");

    CLI::App* st = app.add_subcommand("stats", "summary statistics and cumulative curve");
    add_shared(st);
    st->add_option("--input", o.input, "return series CSV (period,value)");
    st->add_option("--cumulative", o.cumulative, "cumulative mode: sum|compound");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(sim)) cmd_simulate(o);
        else if (app.got_subcommand(phase)) cmd_phase(o);
        else if (app.got_subcommand(est)) cmd_estimate(o);
        else if (app.got_subcommand(bt)) cmd_backtest(o);
        else if (app.got_subcommand(sweep)) cmd_sweep(o);
        else if (app.got_subcommand(st)) cmd_stats(o);
        return 0;
    } catch (const ssb::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ssb::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ssb::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
