// cryptodir: fetch -> build -> train -> backtest -> report, one stage per subcommand.
//
// Stage outputs live in a data directory written by `build`:
//   pipeline.json     config + hash every later artifact must carry
//   train.csv/test.csv, scaling.json, frame.csv, test_prices.csv

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cryptodir/cryptodir.hpp"
#include "cryptodir/klines_client.hpp"

namespace fs = std::filesystem;
using namespace cryptodir;

namespace {

constexpr int kExitStrict = 2;

struct Options {
    std::string symbol = "ETHUSDT";
    std::string interval = "4h";
    std::string endpoint;
    std::string input;
    std::string out;
    std::string data = "data";
    std::string start;
    std::string end;
    int page_limit = 1000;
    bool strict = false;

    double threshold = 0.0015;
    std::size_t window = kDefaultWindow;
    double ratio = 0.95;

    std::string model = "gbt";
    std::uint64_t seed = 0;
    int rounds = -1;
    int trees = -1;
    int k = -1;

    std::vector<std::string> models;
    std::string preds;
    double fee = 0.00075;
    double qty = 1.0;

    std::vector<std::string> reports;
};

/// Unix seconds or a YYYY-MM-DD date (UTC midnight).
std::int64_t parse_time(const std::string& s) {
    std::int64_t v = 0;
    if (detail::parse_int64(s, v)) return v;
    std::tm tm{};
    std::istringstream in(s);
    in >> std::get_time(&tm, "%Y-%m-%d");
    if (in.fail()) throw Error(Errc::BadConfig, "bad time '" + s + "' (unix seconds or YYYY-MM-DD)");
    return static_cast<std::int64_t>(timegm(&tm));
}

struct Manifest {
    PipelineConfig config;
    std::string hash;
};

Manifest load_manifest(const fs::path& dir) {
    auto j = read_json(dir / "pipeline.json");
    Manifest m{PipelineConfig::from_json(j.at("config")), j.at("hash").get<std::string>()};
    if (m.hash != m.config.hash())
        throw Error(Errc::ModelFormat, "pipeline.json hash does not match its config");
    return m;
}

void require_hash(const std::string& found, const Manifest& m, const std::string& what) {
    if (found != m.hash)
        throw Error(Errc::AlignmentError,
                    what + " was built for pipeline " + found + ", data directory is " + m.hash);
}

int cmd_fetch(const Options& o) {
    CandleSeries series;
    if (!o.input.empty()) {
        series = parse_candles(read_file(o.input), o.symbol, interval_to_seconds(o.interval));
    } else {
        std::string endpoint = o.endpoint;
        if (endpoint.empty())
            if (const char* env = std::getenv("CRYPTODIR_ENDPOINT")) endpoint = env;
        if (endpoint.empty()) throw Error(Errc::BadConfig, "no --endpoint, CRYPTODIR_ENDPOINT or --input given");
        if (o.start.empty() || o.end.empty()) throw Error(Errc::BadConfig, "--start and --end are required");
        series = fetch_klines(endpoint, o.symbol, o.interval, parse_time(o.start), parse_time(o.end), o.page_limit);
    }
    const auto report = validate_series(series);
    std::cout << series.size() << " bars";
    if (!series.candles.empty())
        std::cout << " from " << series.candles.front().timestamp << " to " << series.candles.back().timestamp;
    std::cout << "\n" << report.gap_ranges.size() << " gaps, " << report.violations.size() << " violations\n";
    for (const auto& [from, to] : report.gap_ranges) std::cout << "  gap " << from << " -> " << to << "\n";
    for (const auto& v : report.violations) std::cout << "  bar " << v.index << ": " << v.rule << "\n";
    if (o.strict && !report.is_clean()) {
        std::cerr << "error: series is not clean (--strict); nothing written\n";
        return kExitStrict;
    }
    if (o.out.empty()) throw Error(Errc::BadConfig, "--out is required");
    write_file_atomic(o.out, write_candles(series));
    return 0;
}

std::string prices_csv(const CandleSeries& series, const std::vector<Sample>& test) {
    std::string out = "timestamp,close\n";
    std::size_t bar = 0;
    for (const auto& s : test) {
        while (series[bar].timestamp != s.anchor_ts) ++bar;
        out += std::to_string(s.anchor_ts) + ',' + detail::format_decimal(series[bar].close) + '\n';
    }
    return out;
}

int cmd_build(const Options& o) {
    if (o.input.empty()) throw Error(Errc::BadConfig, "--input candle CSV is required");
    const fs::path dir = o.out.empty() ? o.data : o.out;
    PipelineConfig cfg;
    cfg.symbol = o.symbol;
    cfg.interval = o.interval;
    cfg.input = fs::path(o.input).filename().string();
    cfg.dataset.labels.threshold = o.threshold;
    cfg.dataset.window = o.window;
    cfg.dataset.ratio = o.ratio;
    const auto hash = cfg.hash();

    const auto series = parse_candles(read_file(o.input), o.symbol, interval_to_seconds(o.interval));
    const auto built = build_dataset(series, cfg.dataset);

    nlohmann::ordered_json scaling;
    scaling["pipeline_hash"] = hash;
    scaling["divisors"] = built.stats.to_json();

    write_file_atomic(dir / "train.csv", samples_to_csv(built.split.train));
    write_file_atomic(dir / "test.csv", samples_to_csv(built.split.test));
    write_file_atomic(dir / "scaling.json", scaling.dump(2) + "\n");
    write_file_atomic(dir / "frame.csv", frame_to_csv(built.frame));
    write_file_atomic(dir / "test_prices.csv", prices_csv(series, built.split.test));
    // the manifest goes last: its presence marks a complete build
    nlohmann::ordered_json manifest;
    manifest["config"] = cfg.to_json();
    manifest["hash"] = hash;
    write_file_atomic(dir / "pipeline.json", manifest.dump(2) + "\n");

    std::cout << "frame " << built.frame.rows() << " x " << kFrameColumns << ", samples "
              << built.split.train.size() << " train / " << built.split.test.size() << " test, "
              << built.split.train.front().features.size() << " features\npipeline " << hash << "\n";
    return 0;
}

ScalingStats load_scaling(const fs::path& dir, const Manifest& m) {
    auto j = read_json(dir / "scaling.json");
    require_hash(j.at("pipeline_hash").get<std::string>(), m, "scaling.json");
    return ScalingStats::from_json(j.at("divisors"));
}

int cmd_train(const Options& o) {
    const fs::path dir = o.data;
    const auto manifest = load_manifest(dir);
    const auto kind = parse_model_kind(o.model);
    auto hp = Hyperparams::for_symbol(manifest.config.symbol);
    hp.seed = o.seed;
    if (o.rounds >= 0) hp.gbt_rounds = o.rounds;
    if (o.trees > 0) hp.rf_trees = o.trees;
    if (o.k > 0) hp.knn_k = o.k;

    const auto train = samples_from_csv(read_file(dir / "train.csv"));
    ModelFile file{fit_model(kind, to_labeled(train), hp), hp, manifest.hash, load_scaling(dir, manifest),
                   manifest.config.dataset.window};
    const fs::path out = o.out.empty() ? dir / ("model_" + std::string(model_kind_name(kind)) + ".json") : fs::path(o.out);
    write_file_atomic(out, model_to_json(file).dump() + "\n");

    const auto test = samples_from_csv(read_file(dir / "test.csv"));
    std::vector<int> truth;
    for (const auto& s : test) truth.push_back(s.label);
    std::cout << model_kind_name(kind) << " trained on " << train.size() << " samples; test accuracy "
              << accuracy(file.model.predict_labels(test), truth) << "\nwrote " << out.string() << "\n";
    return 0;
}

struct PriceTable {
    std::vector<std::int64_t> ts;
    std::vector<double> close;
};

PriceTable load_prices(const fs::path& path) {
    PriceTable t;
    detail::for_each_line(read_file(path), [&](std::size_t line_no, std::string_view raw) {
        auto line = detail::trim(raw);
        if (line_no == 1 || line.empty()) return;
        auto f = detail::split(line, ',');
        std::int64_t ts = 0;
        double c = 0;
        if (f.size() != 2 || !detail::parse_int64(f[0], ts) || !detail::parse_double(f[1], c))
            throw Error(Errc::MalformedRow, path.string() + " line " + std::to_string(line_no));
        t.ts.push_back(ts);
        t.close.push_back(c);
    });
    return t;
}

/// `timestamp,prediction` rows, one per test bar.
std::vector<int> load_predictions(const fs::path& path, const PriceTable& prices) {
    std::vector<int> out;
    detail::for_each_line(read_file(path), [&](std::size_t line_no, std::string_view raw) {
        auto line = detail::trim(raw);
        if (line_no == 1 || line.empty()) return;
        auto f = detail::split(line, ',');
        std::int64_t ts = 0, p = 0;
        if (f.size() != 2 || !detail::parse_int64(f[0], ts) || !detail::parse_int64(f[1], p) || (p != 0 && p != 1))
            throw Error(Errc::MalformedRow, path.string() + " line " + std::to_string(line_no));
        if (out.size() >= prices.ts.size() || prices.ts[out.size()] != ts)
            throw Error(Errc::AlignmentError, path.string() + ": timestamps must match test_prices.csv");
        out.push_back(static_cast<int>(p));
    });
    if (out.size() != prices.ts.size())
        throw Error(Errc::AlignmentError, path.string() + ": one prediction per test bar required");
    return out;
}

struct BacktestJob {
    std::string name;
    std::string model_kind;
    std::vector<int> preds;
};

void write_backtest(const fs::path& out, const BacktestJob& job, const PriceTable& prices,
                    const std::vector<int>& truth, const StrategyConfig& strategy, const Manifest& manifest) {
    const auto log = run_strategy(prices.ts, prices.close, job.preds, strategy);
    const auto report = compute_report(log, job.preds, truth, span_days(prices.ts.front(), prices.ts.back()));
    nlohmann::ordered_json j;
    j["pipeline_hash"] = manifest.hash;
    j["name"] = job.name;
    j["model"] = job.model_kind;
    j["symbol"] = manifest.config.symbol;
    j["fee_rate_per_leg"] = strategy.fee_rate_per_leg;
    j["position_qty"] = strategy.position_qty;
    j["buy_and_hold"] = buy_and_hold(prices.close, strategy);
    j["metrics"] = report_to_json(report);
    write_file_atomic(out / ("report_" + job.name + ".json"), j.dump(2) + "\n");
    write_file_atomic(out / ("trades_" + job.name + ".csv"), trades_to_csv(log));
    write_file_atomic(out / ("equity_" + job.name + ".csv"), equity_to_csv(prices.ts, log));
    write_file_atomic(out / ("pnl_histogram_" + job.name + ".csv"), pnl_histogram_csv(log));
}

int cmd_backtest(const Options& o) {
    const fs::path dir = o.data;
    const fs::path out = o.out.empty() ? dir : fs::path(o.out);
    const auto manifest = load_manifest(dir);
    const auto prices = load_prices(dir / "test_prices.csv");
    const auto test = samples_from_csv(read_file(dir / "test.csv"));
    if (test.size() != prices.ts.size()) throw Error(Errc::AlignmentError, "test.csv and test_prices.csv differ");
    std::vector<int> truth;
    for (const auto& s : test) truth.push_back(s.label);

    StrategyConfig strategy;
    strategy.fee_rate_per_leg = o.fee;
    strategy.position_qty = o.qty;
    strategy.validate();
    if (o.models.empty() && o.preds.empty()) throw Error(Errc::BadConfig, "give --model and/or --preds");

    // Models are independent, so each is loaded, predicted and replayed on its own thread.
    std::vector<std::future<BacktestJob>> pending;
    for (const auto& path : o.models)
        pending.push_back(std::async(std::launch::async, [&, path] {
            auto file = model_from_json(read_json(path));
            require_hash(file.pipeline_hash, manifest, path);
            return BacktestJob{fs::path(path).stem().string(), std::string(model_kind_name(file.model.kind())),
                               file.model.predict_labels(test)};
        }));
    std::vector<BacktestJob> jobs;
    for (auto& f : pending) jobs.push_back(f.get());
    if (!o.preds.empty()) jobs.push_back({fs::path(o.preds).stem().string(), "external", load_predictions(o.preds, prices)});

    std::vector<std::future<void>> writes;
    for (const auto& job : jobs)
        writes.push_back(std::async(std::launch::async, [&, &job = job] {
            write_backtest(out, job, prices, truth, strategy, manifest);
        }));
    for (auto& w : writes) w.get();
    for (const auto& job : jobs) std::cout << "wrote " << (out / ("report_" + job.name + ".json")).string() << "\n";
    return 0;
}

std::string cell(const nlohmann::json& v, int precision) {
    if (v.is_null()) return "-";
    if (v.is_number_integer() || v.is_number_unsigned()) return std::to_string(v.get<long long>());
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << v.get<double>();
    return s.str();
}

int cmd_report(const Options& o) {
    const fs::path dir = o.data;
    const auto manifest = load_manifest(dir);
    std::vector<std::string> paths = o.reports;
    if (paths.empty())
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().filename().string().starts_with("report_") && e.path().extension() == ".json")
                paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw Error(Errc::Io, "no report_*.json found; run backtest first");

    std::vector<nlohmann::json> reports;
    for (const auto& p : paths) {
        auto j = read_json(p);
        require_hash(j.at("pipeline_hash").get<std::string>(), manifest, p);
        report_from_json(j.at("metrics")); // validates the field set
        reports.push_back(std::move(j));
    }

    const std::vector<std::pair<std::string, std::string>> rows{
        {"testing_accuracy", "Testing Accuracy"}, {"net_profit", "Net Profit"},
        {"n_win", "Number of Winning Trades"},    {"n_lose", "Number of Losing Trades"},
        {"total_days", "Total Days in Test"},     {"pct_profitable", "Percent Profitable"},
        {"avg_win", "Avg Winning Trade"},         {"avg_lose", "Avg Losing Trade"},
        {"largest_win", "Largest Winning Trade"}, {"largest_lose", "Largest Losing Trade"},
        {"profit_factor", "Profit Factor"}};
    std::cout << manifest.config.symbol << " " << manifest.config.interval << "  pipeline " << manifest.hash << "\n";
    std::cout << std::left << std::setw(26) << "";
    for (const auto& r : reports) std::cout << std::right << std::setw(14) << r.at("name").get<std::string>();
    std::cout << "\n";
    for (const auto& [key, label] : rows) {
        std::cout << std::left << std::setw(26) << label;
        for (const auto& r : reports) {
            const auto& v = r.at("metrics").at(key);
            int precision = key == "testing_accuracy" || key == "pct_profitable" || key == "profit_factor" ? 4 : 3;
            std::cout << std::right << std::setw(14) << cell(v, precision);
        }
        std::cout << "\n";
    }
    std::cout << std::left << std::setw(26) << "Buy and Hold";
    for (const auto& r : reports) std::cout << std::right << std::setw(14) << cell(r.at("buy_and_hold"), 3);
    std::cout << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cryptodir - 4h candle direction classifiers and trade simulation"};
    app.require_subcommand(1);
    Options o;

    auto* fetch = app.add_subcommand("fetch", "download candles (or validate a local CSV) into a candle CSV");
    fetch->add_option("--symbol", o.symbol);
    fetch->add_option("--interval", o.interval);
    fetch->add_option("--endpoint", o.endpoint, "klines URL; defaults to $CRYPTODIR_ENDPOINT");
    fetch->add_option("--input", o.input, "read candles from this CSV instead of the network");
    fetch->add_option("--out", o.out, "candle CSV to write");
    fetch->add_option("--start", o.start, "first open time, unix seconds or YYYY-MM-DD");
    fetch->add_option("--end", o.end, "exclusive end time");
    fetch->add_option("--limit", o.page_limit, "bars per request")->check(CLI::PositiveNumber);
    fetch->add_flag("--strict", o.strict, "exit 2 instead of writing a series with gaps or bad bars");

    auto* build = app.add_subcommand("build", "indicator frame, labels, windows and split");
    build->add_option("--input", o.input, "candle CSV")->required();
    build->add_option("--out", o.out, "data directory (default: data)");
    build->add_option("--symbol", o.symbol);
    build->add_option("--interval", o.interval);
    build->add_option("--threshold", o.threshold, "label return threshold");
    build->add_option("--window", o.window, "bars per sample");
    build->add_option("--ratio", o.ratio, "training fraction");

    auto* train = app.add_subcommand("train", "fit a classifier on the training split");
    train->add_option("--data", o.data, "data directory from build");
    train->add_option("--model", o.model, "knn | rf | gbt");
    train->add_option("--seed", o.seed);
    train->add_option("--out", o.out, "model JSON (default: <data>/model_<kind>.json)");
    train->add_option("--rounds", o.rounds, "boosting rounds");
    train->add_option("--trees", o.trees, "forest size");
    train->add_option("--k", o.k, "neighbours");

    auto* backtest = app.add_subcommand("backtest", "replay predictions on the test span");
    backtest->add_option("--data", o.data, "data directory from build");
    backtest->add_option("--model", o.models, "model JSON; repeat to run several concurrently");
    backtest->add_option("--preds", o.preds, "timestamp,prediction CSV to replay instead of a model");
    backtest->add_option("--out", o.out, "output directory (default: the data directory)");
    backtest->add_option("--fee", o.fee, "fee rate per leg");
    backtest->add_option("--qty", o.qty, "position size in base units");

    auto* report = app.add_subcommand("report", "print backtest reports as a table");
    report->add_option("--data", o.data, "data directory from build");
    report->add_option("--report", o.reports, "report JSON (default: every report_*.json in the data directory)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (fetch->parsed()) return cmd_fetch(o);
        if (build->parsed()) return cmd_build(o);
        if (train->parsed()) return cmd_train(o);
        if (backtest->parsed()) return cmd_backtest(o);
        if (report->parsed()) return cmd_report(o);
    } catch (const Error& e) {
        std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
