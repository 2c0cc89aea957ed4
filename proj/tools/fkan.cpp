// fkan: command-line front end for the experiments and the Jacobi checks.

#include "fkan/experiments.hpp"
#include "fkan/jacobi_check.hpp"
#include "fkan/pinn.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

namespace fs = std::filesystem;
namespace ex = fkan::experiments;

namespace {

enum Exit : int { kOk = 0, kRuntime = 1, kUsage = 2, kStrict = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Settings {
    std::string command;
    std::uint64_t seed = 1;
    std::string seeds;
    std::size_t jobs = 1;
    std::string out;
    bool strict = false;
    bool wall_time = false;
    bool verbose = false;

    // regression and timing
    std::string activation = "fjnb(6)";
    std::size_t layers = 1;
    std::size_t neurons = 5;
    double lr = 0.01;
    std::size_t patience = 200;
    bool no_noise = false;
    std::size_t size = 1000;
    std::size_t repetitions = 100;

    // shared by the trained problems; 0 picks the problem default
    std::size_t iterations = 0;
    std::size_t points = 0;
    std::size_t history = ex::PinnOptions{}.history;
    std::vector<std::size_t> widths;
    std::vector<unsigned> degrees;

    unsigned m = 0;
    double m0 = 1.0;
    double m1 = 0.01;
    double m2 = 0.1;
    bool dump_caputo = false;
};

struct File {
    std::string name;
    std::string content;
};

struct RunOutput {
    ex::Metrics metrics;
    std::vector<File> files;
    std::string summary;
};

template <class F>
std::string render(F&& f)
{
    std::ostringstream s;
    f(s);
    return s.str();
}

std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

template <class T>
std::string join(const std::vector<T>& v)
{
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
    return s;
}

/// "fjnb(6)", "fjnb6" or "fjnb" (degree 6) and plain activation names.
std::pair<fkan::nn::Activation, unsigned> parse_activation_spec(const std::string& text)
{
    if (text.rfind("fjnb", 0) == 0) {
        std::string rest = text.substr(4);
        if (rest.size() >= 2 && rest.front() == '(' && rest.back() == ')') rest = rest.substr(1, rest.size() - 2);
        if (rest.empty()) return {fkan::nn::Activation::Fjnb, 6};
        if (rest.find_first_not_of("0123456789") != std::string::npos || rest.size() > 2)
            throw UsageError("bad fjnb degree in '" + text + "'");
        return {fkan::nn::Activation::Fjnb, static_cast<unsigned>(std::stoul(rest))};
    }
    try {
        return {fkan::nn::parse_activation(text), 0};
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string(e.what()) + ", fjnb(q)");
    }
}

std::vector<std::uint64_t> seed_list(const Settings& s)
{
    if (s.seeds.empty()) return {s.seed};
    const auto dots = s.seeds.find("..");
    if (dots == std::string::npos) throw UsageError("--seeds expects a..b");
    std::uint64_t a = 0, b = 0;
    try {
        std::size_t used = 0;
        const std::string lo = s.seeds.substr(0, dots), hi = s.seeds.substr(dots + 2);
        a = std::stoull(lo, &used);
        if (used != lo.size()) throw std::invalid_argument(lo);
        b = std::stoull(hi, &used);
        if (used != hi.size()) throw std::invalid_argument(hi);
    } catch (const std::exception&) {
        throw UsageError("--seeds expects a..b with integers, got '" + s.seeds + "'");
    }
    if (b < a || b - a >= 1000) throw UsageError("--seeds range must be ascending and at most 1000 long");
    std::vector<std::uint64_t> v;
    for (std::uint64_t k = a; k <= b; ++k) v.push_back(k);
    return v;
}

/// Settings that matter for the chosen command, in key=value form.
std::vector<std::pair<std::string, std::string>> resolved(const Settings& s)
{
    std::vector<std::pair<std::string, std::string>> kv{{"experiment", s.command}};
    if (s.command == "jacobi-check") {
        kv.emplace_back("seed", std::to_string(s.seed));
        kv.emplace_back("out", s.out);
        kv.emplace_back("strict", s.strict ? "true" : "false");
        return kv;
    }
    if (s.seeds.empty()) kv.emplace_back("seed", std::to_string(s.seed));
    else kv.emplace_back("seeds", s.seeds);
    kv.emplace_back("jobs", std::to_string(s.jobs));
    kv.emplace_back("out", s.out);
    kv.emplace_back("strict", s.strict ? "true" : "false");
    kv.emplace_back("wall-time", s.wall_time ? "true" : "false");
    if (s.command == "timing") {
        kv.emplace_back("size", std::to_string(s.size));
        kv.emplace_back("repetitions", std::to_string(s.repetitions));
        return kv;
    }
    if (s.command == "regress" || s.command == "trace-params") {
        kv.emplace_back("activation", s.activation);
        kv.emplace_back("layers", std::to_string(s.layers));
        kv.emplace_back("neurons", std::to_string(s.neurons));
        kv.emplace_back("lr", fmt(s.lr));
        kv.emplace_back("patience", std::to_string(s.patience));
        kv.emplace_back("no-noise", s.no_noise ? "true" : "false");
        kv.emplace_back("iterations", std::to_string(s.iterations ? s.iterations : 500));
        kv.emplace_back("points", std::to_string(s.points ? s.points : (s.command == "regress" ? 50 : 250)));
        return kv;
    }
    if (s.command == "lane-emden") kv.emplace_back("m", std::to_string(s.m));
    if (s.command == "burgers") {
        kv.emplace_back("m0", fmt(s.m0));
        kv.emplace_back("m1", fmt(s.m1));
        kv.emplace_back("m2", fmt(s.m2));
    }
    if (s.command == "delay-fde") kv.emplace_back("dump-caputo", s.dump_caputo ? "true" : "false");
    kv.emplace_back("iterations", std::to_string(s.iterations));
    kv.emplace_back("points", std::to_string(s.points));
    kv.emplace_back("history", std::to_string(s.history));
    kv.emplace_back("widths", join(s.widths));
    kv.emplace_back("degrees", join(s.degrees));
    return kv;
}

ex::PinnOptions pinn_options(const Settings& s)
{
    ex::PinnOptions o;
    o.max_iterations = s.iterations;
    o.points = s.points;
    o.widths = s.widths;
    o.degrees = s.degrees;
    o.history = s.history;
    o.verbose = s.verbose;
    return o;
}

std::string seed_tag(const std::string& experiment, std::uint64_t seed)
{
    return experiment + "-seed" + std::to_string(seed);
}

RunOutput pinn_output(ex::PinnResult&& r)
{
    RunOutput out;
    const std::string tag = seed_tag(r.metrics.experiment, r.metrics.seed);
    out.files.push_back({tag + "-solution.csv", render([&](std::ostream& o) { ex::write_table(o, r.solution); })});
    out.files.push_back({tag + "-residual.csv", render([&](std::ostream& o) { ex::write_table(o, r.residual); })});
    out.files.push_back({tag + "-loss.csv", render([&](std::ostream& o) { fkan::optim::write_loss_trace(o, r.loss_trace); })});
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s seed %llu: status %s, %zu iterations, loss %.3e", r.metrics.experiment.c_str(),
                  static_cast<unsigned long long>(r.metrics.seed), r.status.c_str(), r.iterations, r.final_loss);
    out.summary = buf;
    out.metrics = std::move(r.metrics);
    return out;
}

ex::RegressionOptions regression_options(const Settings& s)
{
    ex::RegressionOptions o;
    std::tie(o.activation, o.degree) = parse_activation_spec(s.activation);
    o.layers = s.layers;
    o.neurons = s.neurons;
    o.learning_rate = s.lr;
    o.noise = !s.no_noise;
    if (s.command == "trace-params") {
        o.patience = 0;
        o.points = s.points ? s.points : 250;
        o.trace_params = true;
        if (o.activation != fkan::nn::Activation::Fjnb || o.layers != 1)
            throw UsageError("trace-params needs a single fjnb hidden layer");
    } else {
        o.patience = s.patience;
        o.points = s.points ? s.points : 50;
    }
    o.max_iterations = s.iterations ? s.iterations : 500;
    return o;
}

RunOutput run_one(const Settings& s, std::uint64_t seed)
{
    if (s.command == "regress" || s.command == "trace-params") {
        ex::RegressionResult r = ex::run_regression(regression_options(s), seed);
        RunOutput out;
        const std::string tag = seed_tag(r.metrics.experiment, seed);
        out.files.push_back({tag + "-solution.csv", render([&](std::ostream& o) { ex::write_table(o, r.solution); })});
        if (s.command == "trace-params") {
            out.files.push_back(
                {tag + "-trace.csv", render([&](std::ostream& o) { ex::write_param_trace(o, r.param_trace); })});
            out.summary = tag + ": parameters " + (ex::params_converged(r.param_trace) ? "converged" : "still moving");
        } else {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s: %zu iterations, train mse %.3e", tag.c_str(), r.iterations, r.train_mse);
            out.summary = buf;
        }
        out.metrics = std::move(r.metrics);
        return out;
    }
    if (s.command == "lane-emden") {
        RunOutput out = pinn_output(ex::run_lane_emden(s.m, seed, pinn_options(s)));
        const auto table = ex::lane_emden_table_root(s.m);
        if (out.metrics.first_root && table) out.summary += ", root error " + fmt(std::abs(*out.metrics.first_root - *table));
        else if (!out.metrics.first_root) out.summary += ", no root";
        return out;
    }
    if (s.command == "burgers") return pinn_output(ex::run_burgers({s.m0, s.m1, s.m2}, seed, pinn_options(s)));
    return pinn_output(ex::run_delay_fde(seed, pinn_options(s)));
}

std::vector<RunOutput> run_seeds(const Settings& s, const std::vector<std::uint64_t>& seeds)
{
    std::vector<RunOutput> results(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    const std::size_t workers = std::max<std::size_t>(1, std::min(s.jobs, seeds.size()));
    auto work = [&](std::size_t first) {
        for (std::size_t i = first; i < seeds.size(); i += workers) {
            try {
                results[i] = run_one(s, seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Acceptance tolerance for the command; empty message means no gate.
std::pair<bool, std::string> strict_check(const Settings& s, const std::vector<RunOutput>& runs)
{
    auto best_max_abs = [&] {
        double best = INFINITY;
        for (const auto& r : runs) best = std::min(best, r.metrics.max_abs);
        return best;
    };
    if (s.command == "lane-emden") {
        const auto table = ex::lane_emden_table_root(s.m);
        if (!table) {
            const bool none = std::none_of(runs.begin(), runs.end(), [](const RunOutput& r) { return r.metrics.first_root.has_value(); });
            return {none, "no root expected"};
        }
        double best = INFINITY;
        for (const auto& r : runs)
            if (r.metrics.first_root) best = std::min(best, std::abs(*r.metrics.first_root - *table));
        return {best <= 1e-3, "best root error " + fmt(best) + " (<= 1e-3)"};
    }
    if (s.command == "burgers" || s.command == "delay-fde") {
        const double best = best_max_abs();
        return {best <= 1e-2, "best max abs error " + fmt(best) + " (<= 1e-2)"};
    }
    if (s.command == "regress") {
        if (parse_activation_spec(s.activation).first != fkan::nn::Activation::Fjnb) return {true, ""};
        std::vector<double> mae;
        for (const auto& r : runs) mae.push_back(r.metrics.mae);
        const double med = median(mae);
        return {med < 0.5, "median test mae " + fmt(med) + " (< 0.5)"};
    }
    if (s.command == "trace-params") {
        const bool all = std::all_of(runs.begin(), runs.end(), [](const RunOutput& r) {
            return r.summary.find("converged") != std::string::npos;
        });
        return {all, all ? "parameters converged" : "parameters did not converge"};
    }
    return {true, ""};
}

void write_file(const fs::path& dir, const File& f)
{
    std::ofstream os(dir / f.name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir / f.name).string());
    os << f.content;
}

int execute(const Settings& s)
{
    const auto header = resolved(s);
    for (const auto& [k, v] : header) std::cout << "# " << k << " = " << v << '\n';
    std::cout.flush();

    const fs::path dir(s.out);
    fs::create_directories(dir);
    write_file(dir, {"run.cfg", render([&](std::ostream& o) {
                         for (const auto& [k, v] : header) o << k << '=' << v << '\n';
                     })});

    if (s.command == "jacobi-check") {
        const auto report = fkan::jacobi::check_properties(s.seed);
        const std::string text = render([&](std::ostream& o) { fkan::jacobi::print_report(o, report); });
        std::cout << text;
        write_file(dir, {"jacobi-check.txt", text});
        return s.strict && !report.passed() ? kStrict : kOk;
    }

    if (s.command == "timing") {
        const auto rows = ex::run_activation_timing(s.size, s.repetitions, s.seed);
        const std::string csv = render([&](std::ostream& o) { ex::write_timing(o, rows); });
        std::cout << csv;
        write_file(dir, {"timing.csv", csv});
        return kOk;
    }

    if (s.command == "delay-fde" && s.dump_caputo) {
        const std::size_t n = s.points ? s.points : 2000;
        const auto m = fkan::pinn::caputo_l1_matrix(ex::kDelayOrder, n, 1.0 / static_cast<double>(n));
        write_file(dir, {"caputo.csv", render([&](std::ostream& o) { fkan::pinn::write_caputo_csv(o, m); })});
    }

    const auto runs = run_seeds(s, seed_list(s));
    std::ostringstream metrics;
    ex::write_metrics_header(metrics);
    for (const auto& r : runs) {
        ex::write_metrics_row(metrics, r.metrics, s.wall_time);
        for (const auto& f : r.files) write_file(dir, f);
        std::cerr << r.summary << '\n';
    }
    write_file(dir, {"metrics.csv", metrics.str()});
    std::cout << metrics.str();

    if (!s.strict) return kOk;
    const auto [ok, message] = strict_check(s, runs);
    if (!message.empty()) std::cout << "# strict: " << message << (ok ? " ok" : " FAILED") << '\n';
    return ok ? kOk : kStrict;
}

std::string trim(const std::string& t)
{
    const auto a = t.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    return t.substr(a, t.find_last_not_of(" \t\r") - a + 1);
}

struct ConfigFile {
    std::string experiment;
    std::vector<std::pair<std::string, std::string>> entries;
};

ConfigFile read_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    ConfigFile cfg;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty()) throw UsageError(path + ":" + std::to_string(no) + ": empty key");
        if (key == "experiment") cfg.experiment = value;
        else cfg.entries.emplace_back(key, value);
    }
    return cfg;
}

std::string config_path(const std::vector<std::string>& args)
{
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    return path;
}

void add_common(CLI::App& app, Settings& s)
{
    app.add_option("--config", "key=value file; command-line flags take precedence")->type_name("FILE");
    app.add_option("--seed", s.seed, "run seed")->capture_default_str();
    app.add_option("--seeds", s.seeds, "inclusive seed range a..b, one run per seed");
    app.add_option("--jobs", s.jobs, "worker threads for --seeds")->check(CLI::Range(1, 64))->capture_default_str();
    app.add_option("--out", s.out, "output directory (default $FKAN_OUT or .)");
    app.add_flag("--strict", s.strict, "exit with 3 when the acceptance tolerance is missed");
    app.add_flag("--wall-time", s.wall_time, "fill the wall_ms column (output is then not reproducible)");
    app.add_flag("--verbose", s.verbose, "progress on stderr");
}

void add_regression(CLI::App& sub, Settings& s)
{
    sub.add_option("--activation", s.activation, "sigmoid, tanh, relu, leaky-relu, elu, selu, gelu, silu, softplus or fjnb(q)")
        ->capture_default_str();
    sub.add_option("--layers", s.layers, "hidden layers")->check(CLI::Range(1, 64))->capture_default_str();
    sub.add_option("--neurons", s.neurons, "neurons per hidden layer")->check(CLI::Range(1, 4096))->capture_default_str();
    sub.add_option("--lr", s.lr, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    sub.add_option("--iterations", s.iterations, "Adam steps (default 500)");
    sub.add_option("--points", s.points, "data points (default 50, trace-params 250)");
    sub.add_flag("--no-noise", s.no_noise, "noiseless targets");
}

void add_pinn(CLI::App& sub, Settings& s)
{
    sub.add_option("--iterations", s.iterations, "L-BFGS iterations (0: problem default)");
    sub.add_option("--points", s.points, "collocation points per axis (0: problem default)");
    sub.add_option("--history", s.history, "L-BFGS history length")->check(CLI::Range(1, 1000))->capture_default_str();
    sub.add_option("--widths", s.widths, "layer widths, comma separated")->delimiter(',');
    sub.add_option("--degrees", s.degrees, "fjnb degrees of the fused blocks, comma separated")->delimiter(',');
}

} // namespace

int main(int argc, char** argv)
{
    Settings s;
    CLI::App app{"Fractional Jacobi KAN experiments", "fkan"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    add_common(app, s);

    auto* regress = app.add_subcommand("regress", "synthetic regression with Adam; test-set metrics");
    add_regression(*regress, s);
    regress->add_option("--patience", s.patience, "early stopping patience (0 disables)")->capture_default_str();

    auto* trace = app.add_subcommand("trace-params", "trace the effective fjnb parameters during training");
    add_regression(*trace, s);

    auto* timing = app.add_subcommand("timing", "forward time of every activation on a random matrix");
    timing->add_option("--size", s.size, "matrix side")->check(CLI::Range(1, 10000))->capture_default_str();
    timing->add_option("--repetitions", s.repetitions, "timed repetitions")->check(CLI::Range(2, 100000))->capture_default_str();

    auto* lane = app.add_subcommand("lane-emden", "Lane-Emden equation; reports the first root");
    lane->add_option("--m", s.m, "polytropic index")->check(CLI::Range(0, 5))->required();
    add_pinn(*lane, s);

    auto* burgers = app.add_subcommand("burgers", "Burgers equation against its travelling-wave solution");
    burgers->add_option("--m0", s.m0, "advection coefficient (nonzero)")->capture_default_str();
    burgers->add_option("--m1", s.m1, "diffusion coefficient")->capture_default_str();
    burgers->add_option("--m2", s.m2, "wave speed")->capture_default_str();
    add_pinn(*burgers, s);

    auto* delay = app.add_subcommand("delay-fde", "fractional delay equation with exact solution zeta^3");
    delay->add_flag("--dump-caputo", s.dump_caputo, "also write the Caputo matrix as caputo.csv");
    add_pinn(*delay, s);

    app.add_subcommand("jacobi-check", "randomised Jacobi polynomial property checks");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (const std::string path = config_path(args); !path.empty()) {
            const ConfigFile cfg = read_config(path);
            auto is_command = [&](const std::string& a) { return app.get_subcommand_no_throw(a) != nullptr; };
            auto pos = std::find_if(args.begin(), args.end(), is_command);
            std::string command = pos != args.end() ? *pos : cfg.experiment;
            if (pos != args.end()) args.erase(pos);
            if (command.empty() || !is_command(command)) throw UsageError("no experiment given on the command line or in " + path);
            CLI::App* sub = app.get_subcommand(command);
            std::vector<std::string> merged{command};
            for (const auto& [key, value] : cfg.entries) {
                const std::string flag = "--" + key;
                if (flag == "--config" || (!app.get_option_no_throw(flag) && !sub->get_option_no_throw(flag)))
                    throw UsageError("unknown config key '" + key + "' for " + command);
                merged.push_back(flag + "=" + value);
            }
            merged.insert(merged.end(), args.begin(), args.end());
            args = std::move(merged);
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }

    s.command = app.get_subcommands().front()->get_name();
    if (s.out.empty()) {
        const char* env = std::getenv("FKAN_OUT");
        s.out = env && *env ? env : ".";
    }
    if (s.command == "burgers" && s.m0 == 0.0) {
        std::cerr << "error: --m0 must be nonzero\n";
        return kUsage;
    }

    try {
        if (s.command == "regress" || s.command == "trace-params") (void)regression_options(s);
        (void)seed_list(s);
        return execute(s);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
