// Acceptance run: one PASS/FAIL line per criterion.
//
// usage: fkan_acceptance --fkan <path to fkan> [criterion ...]

#include "../oracles.hpp"

#include "fkan/experiments.hpp"
#include "fkan/fjnb.hpp"
#include "fkan/gradcheck.hpp"
#include "fkan/jacobi_check.hpp"
#include "fkan/optim.hpp"
#include "fkan/pinn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace fkan;
namespace ex = fkan::experiments;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

void log(const std::string& line)
{
    std::cerr << "  " << line << '\n';
}

Outcome jacobi_suite()
{
    const auto t0 = Clock::now();
    const auto r = jacobi::check_properties(2024);
    const double t = seconds_since(t0);
    std::ostringstream os;
    jacobi::print_report(os, r);
    std::istringstream lines(os.str());
    for (std::string l; std::getline(lines, l);) log(l);
    return {r.passed() && t < 10.0, "2F1 deviation " + sci(r.hyp2f1) + ", " + sci(t) + " s"};
}

Outcome gradient_integrity()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    double worst_layer = 0.0;
    for (unsigned q = 1; q <= 6; ++q) {
        for (int p = 0; p < 20; ++p) {
            ad::Tensor x(3, 4), theta(q + 1, 4);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = 2 * u(rng);
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = u(rng);
            const ad::MultiBuilder f = [&x, q](ad::Graph& g, std::span<const ad::Var> v) {
                const ad::Var input = g.input(x);
                return ad::sum(ad::square(nn::fjnb_forward({v[0], v[1], v[2], v[3], q}, input)));
            };
            const ad::Tensor pts[] = {ad::Tensor::scalar(u(rng)), ad::Tensor::scalar(u(rng)), ad::Tensor::scalar(u(rng)),
                                      theta};
            worst_layer = std::max(worst_layer, ad::grad_check(f, pts));
        }
    }
    log("fjnb layers q=1..6: max relative error " + sci(worst_layer));

    double worst_pinn = 0.0;
    const std::pair<const char*, pinn::Problem> problems[] = {
        {"lane-emden", ex::lane_emden_problem(3, 3.0, 12)},
        {"burgers", ex::burgers_problem({}, 4)},
        {"delay", ex::delay_problem(10)},
    };
    for (const auto& [name, problem] : problems) {
        double worst = 0.0;
        const std::size_t in = problem.grid.cols();
        for (std::uint64_t s = 0; s < 20; ++s) {
            const nn::Network net({nn::Architecture::ParallelFusion, {in, 3, 4, 1}, {2, 3}}, 1000 + s);
            worst = std::max(worst, oracle::pinn_grad_check(net, problem).max_rel_error);
        }
        log(std::string(name) + " loss: max relative error " + sci(worst));
        worst_pinn = std::max(worst_pinn, worst);
    }
    const double t = seconds_since(t0);
    const double worst = std::max(worst_layer, worst_pinn);
    return {worst < 1e-5 && t < 60.0, "max relative error " + sci(worst) + ", " + sci(t) + " s"};
}

std::vector<double> caputo_apply(const pinn::CaputoMatrix& m, const std::function<double(double)>& u)
{
    ad::Tensor col(m.n + 1, 1);
    for (std::size_t i = 0; i <= m.n; ++i) col[i] = u(static_cast<double>(i) * m.h);
    return ad::matmul(m.matrix, col).vector();
}

Outcome caputo()
{
    const auto t0 = Clock::now();
    double constant = 0.0, linear = 0.0;
    std::vector<double> errors;
    for (std::size_t n : {250u, 500u, 1000u}) {
        const auto m = pinn::caputo_l1_matrix(0.3, n, 1.0 / static_cast<double>(n));
        const double scale = std::pow(m.h, -0.3);
        for (double v : caputo_apply(m, [](double) { return 1.0; })) constant = std::max(constant, std::abs(v) / scale);
        const auto lin = caputo_apply(m, [](double t) { return t; });
        const auto cub = caputo_apply(m, [](double t) { return t * t * t; });
        double err = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            const double t = static_cast<double>(i) * m.h;
            const double exact_lin = std::pow(t, 0.7) / std::tgamma(1.7);
            linear = std::max(linear, std::abs(lin[i] - exact_lin) / exact_lin);
            err = std::max(err, std::abs(cub[i] - 6.0 / std::tgamma(3.7) * std::pow(t, 2.7)));
        }
        errors.push_back(err);
    }
    const double o1 = std::log2(errors[0] / errors[1]);
    const double o2 = std::log2(errors[1] / errors[2]);
    log("constants: max |M 1| / h^-a = " + sci(constant));
    log("linear: max relative error " + sci(linear));
    log("cubic errors " + sci(errors[0]) + " " + sci(errors[1]) + " " + sci(errors[2]) + ", orders " + sci(o1) + " " +
        sci(o2));
    const double t = seconds_since(t0);
    const bool pass = constant < 1e-14 && linear < 1e-12 && std::abs(o1 - 1.7) <= 0.1 && std::abs(o2 - 1.7) <= 0.1 && t < 10.0;
    return {pass, "orders " + sci(o1) + ", " + sci(o2) + "; linear " + sci(linear)};
}

/// Runs up to three seeds, stopping at the first that meets the tolerance.
template <class Run>
std::pair<double, std::uint64_t> best_of_three(Run&& run, double tolerance)
{
    double best = INFINITY;
    std::uint64_t best_seed = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const double err = run(seed);
        if (err < best) {
            best = err;
            best_seed = seed;
        }
        if (best <= tolerance) break;
    }
    return {best, best_seed};
}

Outcome lane_emden()
{
    bool pass = true;
    std::string detail;
    for (unsigned m = 0; m <= 4; ++m) {
        const auto t0 = Clock::now();
        const double table = *ex::lane_emden_table_root(m);
        const auto [best, seed] = best_of_three(
            [&](std::uint64_t s) {
                const auto t1 = Clock::now();
                const auto r = ex::run_lane_emden(m, s, {});
                const double err = r.metrics.first_root ? std::abs(*r.metrics.first_root - table) : INFINITY;
                log("m=" + std::to_string(m) + " seed " + std::to_string(s) + ": root " +
                    (r.metrics.first_root ? sci(*r.metrics.first_root) : std::string("none")) + " error " + sci(err) +
                    ", max |chi error| " + sci(r.metrics.max_abs) + ", loss " + sci(r.final_loss) + ", " +
                    sci(seconds_since(t1)) + " s");
                return err;
            },
            1e-3);
        const double t = seconds_since(t0);
        const bool ok = best <= 1e-3 && t < 600.0;
        pass = pass && ok;
        detail += (detail.empty() ? "" : "; ") + std::string("m=") + std::to_string(m) + " " + sci(best) +
                  (ok ? "" : " (miss)");
        log("m=" + std::to_string(m) + ": best root error " + sci(best) + " (seed " + std::to_string(seed) + "), " +
            sci(t) + " s");
    }
    return {pass, detail};
}

Outcome burgers()
{
    const auto t0 = Clock::now();
    const ex::BurgersParams p{1, 0.01, 0.1};
    const double oracle = oracle::oracle_loss(ex::burgers_problem(p, 100), oracle::burgers_oracle(p));
    log("oracle residual loss " + sci(oracle));
    const auto [best, seed] = best_of_three(
        [&](std::uint64_t s) {
            const auto r = ex::run_burgers(p, s, {});
            log("seed " + std::to_string(s) + ": max abs error " + sci(r.metrics.max_abs) + ", loss " + sci(r.final_loss));
            return r.metrics.max_abs;
        },
        1e-2);
    const double t = seconds_since(t0);
    return {oracle < 1e-10 && best <= 1e-2 && t < 600.0,
            "oracle loss " + sci(oracle) + ", best max abs error " + sci(best) + ", " + sci(t) + " s"};
}

Outcome delay()
{
    const auto t0 = Clock::now();
    const double lhs = 6.0 / std::tgamma(3.7);
    const double rhs = 2000.0 / (1071.0 * std::tgamma(0.7));
    const double identity = std::abs(lhs - rhs) / rhs;
    log("6/G(3.7) vs 2000/(1071 G(0.7)): relative difference " + sci(identity));
    const auto [best, seed] = best_of_three(
        [&](std::uint64_t s) {
            const auto r = ex::run_delay_fde(s, {});
            log("seed " + std::to_string(s) + ": L-inf error " + sci(r.metrics.max_abs) + ", loss " + sci(r.final_loss));
            return r.metrics.max_abs;
        },
        1e-2);
    const double t = seconds_since(t0);
    return {identity < 1e-12 && best <= 1e-2 && t < 600.0,
            "identity " + sci(identity) + ", best L-inf error " + sci(best) + ", " + sci(t) + " s"};
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

Outcome regression()
{
    const auto t0 = Clock::now();
    auto median_mae = [](nn::Activation a) {
        ex::RegressionOptions o;
        o.activation = a;
        std::vector<double> mae;
        for (std::uint64_t s = 1; s <= 5; ++s) mae.push_back(ex::run_regression(o, s).metrics.mae);
        return median(mae);
    };
    const double fjnb = median_mae(nn::Activation::Fjnb);
    log("fjnb(6) median test MAE " + sci(fjnb));
    bool ordered = fjnb < 0.5;
    for (auto a : {nn::Activation::Sigmoid, nn::Activation::Tanh, nn::Activation::Relu}) {
        const double m = median_mae(a);
        log(std::string(nn::activation_name(a)) + " median test MAE " + sci(m));
        ordered = ordered && fjnb < m;
    }
    const double t = seconds_since(t0);
    return {ordered && t < 300.0, "fjnb(6) median MAE " + sci(fjnb) + ", " + sci(t) + " s"};
}

Outcome constraint_safety()
{
    const auto t0 = Clock::now();
    nn::Network net({nn::Architecture::ParallelFusion, {1, 4, 1}, {1, 2, 3, 4, 5, 6}}, 5);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> magnitude(-3.0, 3.0);
    optim::Adam adam(net.parameters(), {0.5});
    std::vector<double> g(net.parameters().count());
    std::size_t violations = 0;
    double min_ab = INFINITY, min_gamma = INFINITY, max_gamma = -INFINITY;
    auto inspect = [&] {
        for (std::size_t b = 0; b < net.fjnb_count(); ++b) {
            const auto e = net.effective(b);
            min_ab = std::min({min_ab, e.alpha, e.beta});
            min_gamma = std::min(min_gamma, e.gamma);
            max_gamma = std::max(max_gamma, e.gamma);
            violations += !(e.alpha > -1.0 && e.beta > -1.0 && e.gamma > 0.0 && e.gamma < 1.0);
        }
    };
    for (int step = 0; step < 10000; ++step) {
        // gradients up to 1e3 in magnitude, with a persistent sign per half
        // of the run so that parameters are driven to the extremes
        const double drift = step < 5000 ? 1.0 : -1.0;
        for (auto& v : g) v = std::pow(10.0, magnitude(rng)) * (u(rng) + 0.5 * drift);
        if (step % 2 == 0) {
            adam.step(net.parameters(), g);
        } else {
            auto x = net.parameters().flatten();
            for (std::size_t i = 0; i < x.size(); ++i) x[i] -= g[i];
            net.parameters().assign(x);
        }
        inspect();
    }
    const double t = seconds_since(t0);
    log("min effective alpha/beta " + sci(min_ab) + ", gamma range [" + sci(min_gamma) + ", " + sci(max_gamma) + "]");
    return {violations == 0 && t < 5.0, std::to_string(violations) + " violations in 10000 steps, " + sci(t) + " s"};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::pair<std::string, std::string>> csv_files(const fs::path& dir)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv") out.emplace_back(e.path().filename().string(), slurp(e.path()));
    std::sort(out.begin(), out.end());
    return out;
}

Outcome determinism(const std::string& fkan)
{
    if (fkan.empty()) return {false, "no --fkan binary given"};
    const fs::path base = fs::temp_directory_path() / ("fkan-acceptance-" + std::to_string(::getpid()));
    const std::vector<std::string> runs = {
        "regress --seeds 1..2",
        "regress --activation tanh --seed 4",
        "trace-params --seed 2 --iterations 100",
        "lane-emden --m 2 --seed 3 --iterations 30 --points 200",
        "burgers --m0 0.1 --m1 0.0001 --m2 0.5 --seed 1 --iterations 20 --points 20",
        "delay-fde --seed 2 --iterations 20 --points 100 --dump-caputo",
        "jacobi-check --seed 5",
    };
    std::size_t files = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        std::vector<std::vector<std::pair<std::string, std::string>>> outputs;
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path dir = base / (std::to_string(i) + "-" + std::to_string(rep));
            const std::string cmd = "\"" + fkan + "\" " + runs[i] + " --out \"" + dir.string() + "\" > \"" +
                                    (dir.string() + ".stdout") + "\" 2>/dev/null";
            fs::create_directories(dir);
            if (std::system(cmd.c_str()) != 0) {
                fs::remove_all(base);
                return {false, "run failed: " + runs[i]};
            }
            outputs.push_back(csv_files(dir));
            if (runs[i].rfind("jacobi-check", 0) == 0) outputs.back().emplace_back("stdout", slurp(dir / "jacobi-check.txt"));
        }
        if (outputs[0].empty() && runs[i].rfind("jacobi-check", 0) != 0) {
            fs::remove_all(base);
            return {false, "no CSV written by: " + runs[i]};
        }
        if (outputs[0] != outputs[1]) {
            fs::remove_all(base);
            return {false, "outputs differ for: " + runs[i]};
        }
        files += outputs[0].size();
        log(runs[i] + ": " + std::to_string(outputs[0].size()) + " files identical");
    }
    fs::remove_all(base);
    return {true, std::to_string(files) + " outputs byte-identical across repeated runs"};
}

} // namespace

int main(int argc, char** argv)
{
    std::string fkan;
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--fkan" && i + 1 < argc) fkan = argv[++i];
        else only.insert(std::atoi(a.c_str()));
    }
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, jacobi_suite},
        {2, gradient_integrity},
        {3, caputo},
        {4, lane_emden},
        {5, burgers},
        {6, delay},
        {7, regression},
        {8, constraint_safety},
        {9, [&] { return determinism(fkan); }},
    };
    int failures = 0;
    for (const auto& [id, check] : criteria) {
        if (!only.empty() && !only.contains(id)) continue;
        std::cerr << "criterion " << id << '\n';
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << "CRITERION " << id << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
