// End-to-end acceptance run. Prints one PASS/FAIL line per criterion with
// the measured numbers, then a summary, and exits 0 once every criterion has
// been evaluated. An exception inside a criterion is reported as its FAIL.

#include "srdcc/field/chi.hpp"
#include "srdcc/field/samples.hpp"
#include "srdcc/harness/commands.hpp"
#include "srdcc/harness/config.hpp"
#include "srdcc/harness/csv.hpp"
#include "srdcc/optim/sqp.hpp"
#include "srdcc/problems/bilinear.hpp"
#include "srdcc/problems/linear.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace srdcc;
using namespace srdcc::harness;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "srdcc_acceptance";

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

fs::path fresh(const std::string& name) {
    const fs::path p = kRoot / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Vec random_vector(Index n, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = scale * nd(rng);
    return v;
}

Vec smooth_field(const mesh::Grid& g, const std::vector<Index>& nodes, double scale, std::uint64_t seed) {
    const Vec c = random_vector(9, scale, seed);
    Vec v(static_cast<Index>(nodes.size()));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double x = g.x1(nodes[k]), y = g.x2(nodes[k]);
        double s = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) s += c[3 * a + b] * std::cos(M_PI * a * x) * std::cos(M_PI * b * y);
        v[static_cast<Index>(k)] = s;
    }
    return v;
}

// Richardson-extrapolated central difference, fourth order in h.
double directional_fd(const std::function<double(double)>& f, double h) {
    const double d1 = (f(h) - f(-h)) / (2.0 * h);
    const double d2 = (f(h / 2) - f(-h / 2)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

// ---------------------------------------------------------------------------

Outcome probability_regression() {
    Outcome o{true, ""};
    const std::pair<double, std::pair<double, double>> cases[] = {{0.3, {0.6496, 0.005}}, {0.7, {0.9848, 0.003}}};
    for (const auto& [b, ref] : cases) {
        ExperimentConfig c;
        c.samplers = {"srd-qmc"};
        c.samples = 1000000;
        c.seed = 0;
        c.lower = -b;
        c.upper = b;
        c.output_dir = fresh("c1_" + fmt("%.1f", b)).string();
        const auto t0 = std::chrono::steady_clock::now();
        cmd_estimate(c);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double p = read_csv(fs::path(c.output_dir) / "estimate.csv").number(0, "p_hat");
        const bool ok = std::abs(p - ref.first) <= ref.second;
        o.pass = o.pass && ok;
        o.detail += "bounds +-" + fmt("%.1f", b) + ": p=" + fmt("%.5f", p) + " (target " + fmt("%.4f", ref.first) +
                    " +- " + fmt("%.3f", ref.second) + ", " + fmt("%.0f", secs) + " s); ";
    }
    return o;
}

Outcome convergence_slopes() {
    ExperimentConfig c = apply_fast(ExperimentConfig{});
    c.samplers = {"mc", "srd-mc", "srd-qmc"};
    c.schedule = {100, 200, 500, 1000, 2000, 5000, 10000};
    c.repetitions = 50;
    c.reference_samples = 1000000;
    c.output_dir = fresh("c2").string();
    cmd_converge(c);
    const CsvTable fit = read_csv(fs::path(c.output_dir) / "converge_fit.csv");
    const CsvTable conv = read_csv(fs::path(c.output_dir) / "converge.csv");
    double slope[3] = {}, icept_mc = 0.0, qmc_2000 = NAN;
    for (std::size_t i = 0; i < fit.rows.size(); ++i) {
        const std::string s = fit.text(i, "sampler");
        const int k = s == "mc" ? 0 : s == "srd-mc" ? 1 : 2;
        slope[k] = fit.number(i, "slope");
        if (k == 0) icept_mc = fit.number(i, "intercept");
    }
    for (std::size_t i = 0; i < conv.rows.size(); ++i)
        if (conv.text(i, "sampler") == "srd-qmc" && conv.number(i, "N") == 2000) qmc_2000 = conv.number(i, "rmse");
    const double mc_1e5 = std::pow(10.0, icept_mc + slope[0] * 5.0);
    Outcome o;
    o.pass = slope[0] >= -0.6 && slope[0] <= -0.4 && slope[1] >= -0.6 && slope[1] <= -0.4 && slope[2] <= -0.6 &&
             qmc_2000 <= mc_1e5;
    o.detail = "n=64 R=50: slopes mc " + fmt("%.3f", slope[0]) + ", srd-mc " + fmt("%.3f", slope[1]) + ", srd-qmc " +
               fmt("%.3f", slope[2]) + "; srd-qmc RMSE(2e3)=" + fmt("%.3g", qmc_2000) + " vs mc fit RMSE(1e5)=" +
               fmt("%.3g", mc_1e5);
    return o;
}

Outcome variance_reduction() {
    ExperimentConfig c = apply_fast(ExperimentConfig{});
    c.bound_levels = {0.5, 0.6, 0.7, 0.8, 0.9};
    c.samples = 500;
    c.repetitions = 100;
    c.reference_samples = 100000;
    c.output_dir = fresh("c3").string();
    cmd_variance_study(c);
    const CsvTable t = read_csv(fs::path(c.output_dir) / "variance.csv");
    Outcome o{true, "n=64 ratios"};
    double prev = kInf;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double ratio = t.number(i, "ratio");
        const bool ok = t.number(i, "v_srd") < t.number(i, "v_mc") && ratio < prev && t.text(i, "lemma1_ok") == "true";
        o.pass = o.pass && ok;
        o.detail += " " + fmt("%.3g", ratio) + (t.text(i, "lemma1_ok") == "true" ? "" : "(lemma1 violated)");
        prev = ratio;
    }
    return o;
}

Outcome analytic_oracles() {
    ExperimentConfig ball;
    ball.oracle = "ball";
    ball.oracle_radius = 2.0;
    ball.oracle_dim = 20;
    ball.samplers = {"srd-mc", "srd-qmc"};
    ball.samples = 100000;
    ball.output_dir = fresh("c4_ball").string();
    cmd_estimate(ball);
    const CsvTable b = read_csv(fs::path(ball.output_dir) / "estimate.csv");
    const double f = field::chi_cdf(2.0, 20);
    bool ok_ball = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < b.rows.size(); ++i) {
        worst = std::max(worst, std::abs(b.number(i, "p_hat") - f));
        ok_ball = ok_ball && b.number(i, "variance") == 0.0 && std::abs(b.number(i, "p_hat") - f) <= 1e-12;
    }

    ExperimentConfig hs;
    hs.oracle = "halfspace";
    hs.oracle_dim = 20;
    hs.oracle_offset = 0.0;
    hs.samples = 50000;
    hs.repetitions = 2;  // pooled N = 1e5
    hs.output_dir = fresh("c4_halfspace").string();
    cmd_variance_study(hs);
    const CsvTable h = read_csv(fs::path(hs.output_dir) / "variance.csv");
    const double vm = h.number(0, "v_mc"), vs = h.number(0, "v_srd");
    const double sm = h.number(0, "v_mc_se"), ss = h.number(0, "v_srd_se");
    const bool ok_hs = std::abs(vm - 0.25) <= 3.0 * sm && std::abs(vs - 0.25) <= 3.0 * ss;
    return {ok_ball && ok_hs, "ball: max |p - F_chi(R)| = " + fmt("%.2g", worst) + ", SRD variance 0 " +
                                  (ok_ball ? "yes" : "no") + "; half-space N=1e5: V_MC " + fmt("%.7f", vm) + " (se " +
                                  fmt("%.2g", sm) + "), V_SRD " + fmt("%.7f", vs) + " (se " + fmt("%.2g", ss) + ")"};
}

Outcome gradient_suites() {
    double worst_lp = 0.0, worst_lj = 0.0, worst_bp = 0.0, worst_bj = 0.0;

    problems::LinearSettings ls;
    ls.n = 32;
    ls.K = 10;
    const problems::LinearProblem lp(ls);
    const field::SampleSet lsamples = field::sphere_samples(field::SamplerKind::mc, 101, 2000, ls.K);
    const auto& free_nodes = lp.grid().free_nodes;
    for (int trial = 0; trial < 10; ++trial) {
        const Vec u = lp.nominal_control() + smooth_field(lp.grid(), free_nodes, 0.02, 200 + trial);
        const Vec d = smooth_field(lp.grid(), free_nodes, 0.1, 300 + trial);
        const srd::ProbabilityEstimate e = lp.chance(u, lsamples, true);
        const double fd = directional_fd([&](double t) { return lp.chance(u + t * d, lsamples, false).value; }, 2e-5);
        worst_lp = std::max(worst_lp, rel_gap(e.gradient.dot(d), fd));
        const double fj = directional_fd([&](double t) { return lp.objective(u + t * d); }, 1e-3);
        worst_lj = std::max(worst_lj, rel_gap(lp.objective_gradient(u).dot(d), fj));
    }

    problems::BilinearSettings bs;
    bs.n = 15;
    bs.upper = 0.99;
    const problems::BilinearProblem bp(bs);
    const field::SampleSet bsamples = field::sphere_samples(field::SamplerKind::mc, 102, 600, bp.chance_dof());
    std::vector<Index> all(static_cast<std::size_t>(bp.grid().num_nodes()));
    for (Index i = 0; i < bp.grid().num_nodes(); ++i) all[static_cast<std::size_t>(i)] = i;
    for (int trial = 0; trial < 10; ++trial) {
        const Vec u = bp.nominal_control() + smooth_field(bp.grid(), all, 0.1, 400 + trial);
        const Vec d = smooth_field(bp.grid(), all, 1.0, 500 + trial);
        const srd::ProbabilityEstimate e = bp.chance(u, bsamples, true);
        const double fd = directional_fd([&](double t) { return bp.chance(u + t * d, bsamples, false).value; }, 2e-5);
        worst_bp = std::max(worst_bp, rel_gap(e.gradient.dot(d), fd));
        const double fj = directional_fd([&](double t) { return bp.objective(u + t * d); }, 1e-3);
        worst_bj = std::max(worst_bj, rel_gap(bp.objective_gradient(u).dot(d), fj));
    }
    const bool ok = worst_lp <= 1e-5 && worst_bp <= 1e-5 && worst_lj <= 1e-7 && worst_bj <= 1e-7;
    return {ok, "worst relative error over 10 controls: linear probability " + fmt("%.2g", worst_lp) +
                    ", bilinear probability " + fmt("%.2g", worst_bp) + ", linear objective " + fmt("%.2g", worst_lj) +
                    ", bilinear objective " + fmt("%.2g", worst_bj)};
}

// The KL study and the spectrum comparison share one run.
struct KlRun {
    CsvTable study, spectrum;
};

KlRun kl_run() {
    ExperimentConfig c;
    c.samplers = {"srd-qmc"};
    c.kl_modes = {10, 15, 20};
    c.kl_reference_modes = 30;
    c.schedule = {1000, 10000, 100000};
    c.repetitions = 5;
    c.reference_samples = 1000000;
    c.seed = 3;
    c.output_dir = fresh("c6").string();
    cmd_kl_study(c);
    return {read_csv(fs::path(c.output_dir) / "kl_study.csv"), read_csv(fs::path(c.output_dir) / "kl_spectrum.csv")};
}

Outcome kl_floors(const KlRun& run) {
    const CsvTable& t = run.study;
    std::map<int, std::vector<double>> rmse;
    for (std::size_t i = 0; i < t.rows.size(); ++i) rmse[static_cast<int>(t.number(i, "K"))].push_back(t.number(i, "rmse"));
    const double f10 = rmse[10].back(), f15 = rmse[15].back(), f20 = rmse[20].back();
    bool plateau = true;
    for (const auto& [k, r] : rmse) plateau = plateau && r.back() >= 0.5 * r[r.size() - 2];
    const bool ok = plateau && f10 > f15 && f15 > f20 && f10 >= 1e-3 && f10 <= 4e-3 && f20 >= 2.5e-4 && f20 <= 1e-3;
    return {ok, "n=128 floors at N=1e5: K=10 " + fmt("%.3g", f10) + ", K=15 " + fmt("%.3g", f15) + ", K=20 " +
                    fmt("%.3g", f20) + (plateau ? ", plateaued" : ", still decaying")};
}

Outcome kl_decay(const KlRun& run) {
    const CsvTable& s = run.spectrum;
    double ry = NAN, rx = NAN;
    for (std::size_t i = 0; i < s.rows.size(); ++i)
        if (s.number(i, "k") == 20) {
            ry = s.number(i, "lambda_y_normalized");
            rx = s.number(i, "lambda_xi_normalized");
        }
    return {rx / ry >= 10.0, "n=128: lambda_20/lambda_1 state " + fmt("%.3g", ry) + ", input " + fmt("%.3g", rx) +
                                 ", factor " + fmt("%.3g", rx / ry)};
}

// Two largest strict local maxima of u - 1 on the node grid.
std::vector<std::array<double, 3>> top_bumps(const CsvTable& u) {
    const std::size_t nn = u.rows.size();
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(nn))));
    std::map<std::pair<long, long>, double> val;
    auto key = [side](double x) { return std::lround(x * (side - 1)); };
    for (std::size_t i = 0; i < nn; ++i) val[{key(u.number(i, "x1")), key(u.number(i, "x2"))}] = u.number(i, "value") - 1.0;
    std::vector<std::array<double, 3>> peaks;
    for (const auto& [ij, v] : val) {
        if (v <= 1e-8) continue;
        bool top = true;
        for (long di = -1; di <= 1; ++di)
            for (long dj = -1; dj <= 1; ++dj) {
                if (!di && !dj) continue;
                auto it = val.find({ij.first + di, ij.second + dj});
                if (it != val.end() && it->second >= v) top = false;
            }
        if (top)
            peaks.push_back({v, static_cast<double>(ij.first) / (side - 1), static_cast<double>(ij.second) / (side - 1)});
    }
    std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a[0] > b[0]; });
    if (peaks.size() > 2) peaks.resize(2);
    return peaks;
}

Outcome bilinear_optimization() {
    ExperimentConfig c = defaults_for("bilinear");
    c.output_dir = fresh("c8").string();
    cmd_optimize(c);
    const CsvTable t = read_csv(fs::path(c.output_dir) / "objective_vs_p.csv");
    const double reference[] = {3.209e-3, 1.7816e-2, 5.1092e-2, 9.7708e-2, 1.7611e-1};
    const double exceed0 = t.number(0, "exceedance");
    bool ok = std::abs(exceed0 - 0.196) <= 0.01;
    std::string detail = "n=31: unconstrained exceedance " + fmt("%.4f", exceed0) + " (target 0.196); objectives";
    double prev = -kInf;
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        const double j = t.number(i, "objective");
        const double ref = i - 1 < 5 ? reference[i - 1] : NAN;
        ok = ok && j > prev && std::abs(j - ref) <= 0.25 * ref;
        detail += " " + fmt("%.4g", j) + "/" + fmt("%.4g", ref);
        prev = j;
    }
    const std::string last = t.text(t.rows.size() - 1, "target");
    const auto peaks = top_bumps(read_csv(fs::path(c.output_dir) / ("control_p" + last + ".csv")));
    bool bumps = peaks.size() == 2;
    if (bumps) {
        auto near = [](const std::array<double, 3>& p, double a) {
            return std::abs(p[1] - a) <= 0.1 && std::abs(p[2] - a) <= 0.1;
        };
        bumps = (near(peaks[0], 0.25) && near(peaks[1], 0.75)) || (near(peaks[0], 0.75) && near(peaks[1], 0.25));
    }
    detail += "; local maxima of u-1 at p=" + last + ":";
    for (const auto& p : peaks) detail += " (" + fmt("%.3f", p[1]) + "," + fmt("%.3f", p[2]) + ")=" + fmt("%.3g", p[0]);
    if (peaks.empty()) detail += " none";
    return {ok && bumps, detail};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SRD_CHANCE_EXE) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
    const fs::path dir = fresh("c9");
    ExperimentConfig lin;
    lin.n = 24;
    lin.K = 8;
    lin.samplers = {"mc", "srd-mc", "srd-qmc"};
    lin.samples = 5000;
    lin.schedule = {200, 1000, 5000};
    lin.repetitions = 5;
    lin.reference_samples = 20000;
    lin.kl_modes = {4, 8};
    lin.kl_reference_modes = 12;
    lin.bound_levels = {0.5, 0.7};
    std::ofstream(dir / "linear.ini") << to_text(lin);
    ExperimentConfig opt = lin;
    opt.lower = -kInf;
    opt.samplers = {"srd-qmc"};
    opt.samples = 500;
    opt.targets = {0.9, 0.95};
    opt.validation_samples = 5000;
    opt.max_iterations = 60;
    std::ofstream(dir / "optimize.ini") << to_text(opt);
    ExperimentConfig bil = defaults_for("bilinear");
    bil.n = 15;
    bil.upper = 0.99;
    bil.samples = 300;
    bil.targets = {0.9};
    bil.validation_samples = 3000;
    bil.max_iterations = 40;
    std::ofstream(dir / "bilinear.ini") << to_text(bil);

    const std::pair<std::string, std::string> runs[] = {{"estimate", "linear"},       {"converge", "linear"},
                                                         {"kl-study", "linear"},       {"variance-study", "linear"},
                                                         {"optimize", "optimize"},     {"optimize", "bilinear"}};
    int compared = 0;
    std::string bad;
    for (const auto& [cmd, ini] : runs) {
        const std::string base = cmd + " --dump-operators --config " + (dir / (ini + ".ini")).string() + " --out ";
        const fs::path a = dir / (cmd + "_" + ini + "_a"), b = dir / (cmd + "_" + ini + "_b"),
                       d = dir / (cmd + "_" + ini + "_c");
        if (run_cli(base + a.string() + " --threads 1") != 0 || run_cli(base + b.string() + " --threads 1") != 0 ||
            run_cli(base + d.string() + " --threads 4") != 0) {
            bad += " " + cmd + "(" + ini + ") exited nonzero";
            continue;
        }
        for (const auto& entry : fs::recursive_directory_iterator(a)) {
            if (!entry.is_regular_file()) continue;
            const fs::path rel = fs::relative(entry.path(), a);
            const std::string ref = slurp(entry.path());
            ++compared;
            if (ref != slurp(b / rel) || ref != slurp(d / rel)) bad += " " + (cmd + "/" + rel.string());
        }
    }
    return {bad.empty() && compared > 0,
            std::to_string(compared) + " files compared across 2 runs and 1 vs 4 threads" +
                (bad.empty() ? std::string() : "; differing:" + bad)};
}

Outcome quasi_concavity() {
    problems::LinearSettings s;
    s.n = 32;
    s.K = 10;
    const problems::LinearProblem p(s);
    const field::SampleSet samples = field::sphere_samples(field::SamplerKind::mc, 103, 2000, s.K);
    const auto& nodes = p.grid().free_nodes;
    int segments = 0, dips = 0, tries = 0;
    double worst = -kInf;
    while (segments < 20 && tries < 200) {
        ++tries;
        const Vec a = p.nominal_control() + smooth_field(p.grid(), nodes, 0.05, 600 + 2 * tries);
        const Vec b = p.nominal_control() + smooth_field(p.grid(), nodes, 0.05, 601 + 2 * tries);
        if (!p.slater(a) || !p.slater(b)) continue;
        ++segments;
        const double pa = p.chance(a, samples, false).value, pb = p.chance(b, samples, false).value;
        const double floor = std::min(pa, pb);
        for (int k = 1; k < 20; ++k) {
            const double t = k / 20.0;
            const srd::ProbabilityEstimate e = p.chance((1 - t) * a + t * b, samples, false);
            const double se = std::max(e.standard_error(), 1e-300);
            worst = std::max(worst, (floor - e.value) / se);
            if (e.value < floor - 3.0 * se) ++dips;
        }
    }
    return {segments == 20 && dips == 0, std::to_string(segments) + " segments x 19 interior points, " +
                                             std::to_string(dips) + " dips beyond 3 SE, deepest " +
                                             fmt("%.2f", worst) + " SE below the endpoint minimum"};
}

// The p = 0.98 control should take smaller values than the p = 0.9 control;
// read here as a strictly smaller maximum.
Outcome linear_control_maximum() {
    problems::LinearSettings s;
    s.n = 32;
    s.K = 10;
    s.lower = -kInf;
    s.upper = 0.3;
    const problems::LinearProblem p(s);
    const field::SampleSet samples = field::sphere_samples(field::SamplerKind::qmc_halton, 0, 2000, s.K);
    optim::SqpConfig sc;
    sc.p = 0.9;
    const optim::SolveReport r90 = optim::solve_sqp(p, sc, samples, p.nominal_control());
    sc.p = 0.98;
    const optim::SolveReport r98 = optim::solve_sqp(p, sc, samples, p.nominal_control());
    const double m90 = r90.u.maxCoeff(), m98 = r98.u.maxCoeff();
    return {m98 < m90, "n=32: max u p=0.9 " + fmt("%.4g", m90) + ", p=0.98 " + fmt("%.4g", m98) + "; min " +
                           fmt("%.4g", r90.u.minCoeff()) + " -> " + fmt("%.4g", r98.u.minCoeff())};
}

}  // namespace

// Optional arguments select criteria by id, e.g. `acceptance 4 9`.
int main(int argc, char** argv) {
    const std::vector<std::string> only(argv + 1, argv + argc);
    struct Item {
        const char* id;
        const char* title;
        std::function<Outcome()> run;
    };
    KlRun kl;
    bool kl_ready = false;
    auto kl_cached = [&]() -> const KlRun& {
        if (!kl_ready) kl = kl_run();
        kl_ready = true;
        return kl;
    };
    const std::vector<Item> items = {
        {"1", "probability regression", probability_regression},
        {"2", "convergence slopes", convergence_slopes},
        {"3", "variance reduction", variance_reduction},
        {"4", "analytic oracles", analytic_oracles},
        {"5", "gradient suites", gradient_suites},
        {"6", "KL truncation floors", [&] { return kl_floors(kl_cached()); }},
        {"7", "KL decay comparison", [&] { return kl_decay(kl_cached()); }},
        {"8", "bilinear optimization", bilinear_optimization},
        {"9", "determinism and thread independence", determinism},
        {"10", "quasi-concavity probe", quasi_concavity},
        {"extra", "linear p=0.98 control maximum below p=0.9", linear_control_maximum},
    };
    // ctest hides the output of passing tests, so the lines also go to a file
    // in the working directory.
    std::ofstream report("acceptance_report.txt");
    auto emit = [&](const std::string& line) {
        std::cout << line << std::endl;
        report << line << std::endl;
    };
    int passed = 0, failed = 0;
    for (const Item& it : items) {
        if (!only.empty() && std::find(only.begin(), only.end(), it.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = it.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        (o.pass ? passed : failed)++;
        emit(std::string(o.pass ? "PASS" : "FAIL") + " [" + it.id + "] " + it.title + ": " + o.detail + " (" +
             fmt("%.0f", secs) + " s)");
    }
    emit("summary: " + std::to_string(passed) + " passed, " + std::to_string(failed) + " failed");
    return 0;
}
