#pragma once

#include "srdcc/core.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace srdcc::harness {

// Everything an experiment needs. Problem-dependent defaults (grid size and
// bounds) are filled in from the `problem` key when the file omits them.
struct ExperimentConfig {
    // [problem]
    std::string problem = "linear";
    int n = 128;
    int K = 20;
    double gamma = 4.0;
    double alpha_reg = 1e-5;
    double alpha_cov = 0.1;
    double lower = -0.3;
    double upper = 0.3;
    int constraint_stride = 1;
    bool lumped_mass = false;

    // [sampling]
    std::vector<std::string> samplers = {"srd-qmc"};
    Index samples = 100000;
    std::vector<Index> schedule = {100, 200, 500, 1000, 2000, 5000, 10000, 20000, 50000, 100000};
    std::uint64_t seed = 1;
    int repetitions = 50;
    Index reference_samples = 10000000;

    // [study]
    std::vector<int> kl_modes = {10, 15, 20};
    int kl_reference_modes = 30;
    std::vector<double> bound_levels = {0.5, 0.6, 0.7, 0.8, 0.9};
    std::string oracle = "none";
    double oracle_radius = 2.0;
    int oracle_dim = 20;
    double oracle_offset = 0.0;

    // [optimize]
    std::vector<double> targets = {0.9};
    int max_iterations = 200;
    double kkt_tol = 1e-6;
    int bfgs_memory = 0;
    Index validation_samples = 100000;
    int plot_samples = 11;
    double u_min = -kInf;
    double u_max = kInf;

    // [output]
    std::string output_dir = "out";

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
T parse_scalar(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        T v{};
        if constexpr (std::is_same_v<T, double>) v = std::stod(text, &used);
        else if constexpr (std::is_same_v<T, int>) v = std::stoi(text, &used);
        else if constexpr (std::is_same_v<T, Index>) v = std::stoll(text, &used);
        else if constexpr (std::is_same_v<T, std::uint64_t>) v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse '" + text + "' for key " + key);
    }
}

inline bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("cannot parse '" + text + "' as a boolean for key " + key);
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        if constexpr (std::is_same_v<T, double>) out += format_double(v[i]);
        else if constexpr (std::is_same_v<T, std::string>) out += v[i];
        else out += std::to_string(v[i]);
    }
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    for (const std::string& item : split_list(text)) {
        if constexpr (std::is_same_v<T, std::string>) out.push_back(item);
        else out.push_back(parse_scalar<T>(key, item));
    }
    return out;
}

}  // namespace detail

inline const std::vector<std::string>& known_samplers() {
    static const std::vector<std::string> s = {"mc", "srd-mc", "srd-qmc"};
    return s;
}

inline void validate(const ExperimentConfig& c) {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    need(c.problem == "linear" || c.problem == "bilinear", "problem must be linear or bilinear");
    need(c.n >= 2, "grid size n must be at least 2");
    need(c.K >= 1, "K must be positive");
    if (c.problem == "linear") need(c.K <= c.n, "K cannot exceed the n available state modes");
    need(c.gamma > 0.0, "gamma must be positive");
    need(c.alpha_reg > 0.0, "alpha_reg must be positive");
    need(c.alpha_cov > 0.0, "alpha_cov must be positive");
    need(!std::isnan(c.lower) && !std::isnan(c.upper) && c.lower < c.upper, "lower bound must be below upper bound");
    need(c.constraint_stride >= 1, "constraint_stride must be positive");
    need(!c.samplers.empty(), "at least one sampler is required");
    for (const std::string& s : c.samplers)
        need(std::find(known_samplers().begin(), known_samplers().end(), s) != known_samplers().end(),
             "unknown sampler '" + s + "'");
    need(c.samples >= 1, "samples must be positive");
    need(!c.schedule.empty(), "schedule must not be empty");
    need(c.schedule.front() >= 1 && std::is_sorted(c.schedule.begin(), c.schedule.end()) &&
             std::adjacent_find(c.schedule.begin(), c.schedule.end()) == c.schedule.end(),
         "schedule must be strictly increasing positive sample counts");
    need(c.repetitions >= 2, "repetitions must be at least 2");
    need(c.reference_samples >= 1, "reference_samples must be positive");
    need(!c.kl_modes.empty(), "kl_modes must not be empty");
    for (int k : c.kl_modes) need(k >= 1 && k <= c.kl_reference_modes, "kl_modes must lie in [1, kl_reference_modes]");
    if (c.problem == "linear") need(c.kl_reference_modes <= c.n, "kl_reference_modes cannot exceed n");
    need(!c.bound_levels.empty(), "bound_levels must not be empty");
    for (double b : c.bound_levels) need(b > 0.0, "bound_levels must be positive");
    need(c.oracle == "none" || c.oracle == "ball" || c.oracle == "halfspace", "oracle must be none, ball or halfspace");
    need(c.oracle_radius > 0.0, "oracle_radius must be positive");
    need(c.oracle_dim >= 1, "oracle_dim must be positive");
    need(std::isfinite(c.oracle_offset) && c.oracle_offset >= 0.0, "oracle_offset must be finite and non-negative");
    need(!c.targets.empty(), "targets must not be empty");
    for (double p : c.targets) need(p > 0.0 && p < 1.0, "targets must lie in (0, 1)");
    need(c.max_iterations >= 1, "max_iterations must be positive");
    need(c.kkt_tol > 0.0, "kkt_tol must be positive");
    need(c.bfgs_memory >= 0, "bfgs_memory must be non-negative");
    need(c.validation_samples >= 1, "validation_samples must be positive");
    need(c.plot_samples >= 0, "plot_samples must be non-negative");
    need(c.u_min < c.u_max, "u_min must be below u_max");
    need(!c.output_dir.empty(), "output dir must not be empty");
}

inline ExperimentConfig defaults_for(const std::string& problem) {
    ExperimentConfig c;
    c.problem = problem;
    if (problem == "bilinear") {
        c.n = 31;
        c.lower = -kInf;
        c.upper = 1.10;
        c.samplers = {"srd-mc"};
        c.samples = 1000;
        c.targets = {0.82, 0.84, 0.86, 0.88, 0.90};
        c.validation_samples = 10000;
    }
    return c;
}

// Canonical text form: every key, fixed order, doubles in shortest exact form.
inline std::string to_text(const ExperimentConfig& c) {
    using detail::format_double;
    using detail::join;
    std::ostringstream os;
    os << "[problem]\n"
       << "kind = " << c.problem << "\n"
       << "n = " << c.n << "\n"
       << "K = " << c.K << "\n"
       << "gamma = " << format_double(c.gamma) << "\n"
       << "alpha_reg = " << format_double(c.alpha_reg) << "\n"
       << "alpha_cov = " << format_double(c.alpha_cov) << "\n"
       << "lower = " << format_double(c.lower) << "\n"
       << "upper = " << format_double(c.upper) << "\n"
       << "constraint_stride = " << c.constraint_stride << "\n"
       << "lumped_mass = " << (c.lumped_mass ? "true" : "false") << "\n\n"
       << "[sampling]\n"
       << "samplers = " << join(c.samplers) << "\n"
       << "samples = " << c.samples << "\n"
       << "schedule = " << join(c.schedule) << "\n"
       << "seed = " << c.seed << "\n"
       << "repetitions = " << c.repetitions << "\n"
       << "reference_samples = " << c.reference_samples << "\n\n"
       << "[study]\n"
       << "kl_modes = " << join(c.kl_modes) << "\n"
       << "kl_reference_modes = " << c.kl_reference_modes << "\n"
       << "bound_levels = " << join(c.bound_levels) << "\n"
       << "oracle = " << c.oracle << "\n"
       << "oracle_radius = " << format_double(c.oracle_radius) << "\n"
       << "oracle_dim = " << c.oracle_dim << "\n"
       << "oracle_offset = " << format_double(c.oracle_offset) << "\n\n"
       << "[optimize]\n"
       << "targets = " << join(c.targets) << "\n"
       << "max_iterations = " << c.max_iterations << "\n"
       << "kkt_tol = " << format_double(c.kkt_tol) << "\n"
       << "bfgs_memory = " << c.bfgs_memory << "\n"
       << "validation_samples = " << c.validation_samples << "\n"
       << "plot_samples = " << c.plot_samples << "\n"
       << "u_min = " << format_double(c.u_min) << "\n"
       << "u_max = " << format_double(c.u_max) << "\n\n"
       << "[output]\n"
       << "dir = " << c.output_dir << "\n";
    return os.str();
}

inline ExperimentConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    const std::string problem = tree.get<std::string>("problem.kind", "linear");
    if (problem != "linear" && problem != "bilinear") throw ConfigError("problem must be linear or bilinear");
    ExperimentConfig c = defaults_for(problem);

    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside of a section");
        for (const auto& [key, node] : body) {
            const std::string full = section + "." + key;
            const std::string v = node.data();
            using namespace detail;
            if (full == "problem.kind") c.problem = v;
            else if (full == "problem.n") c.n = parse_scalar<int>(full, v);
            else if (full == "problem.K") c.K = parse_scalar<int>(full, v);
            else if (full == "problem.gamma") c.gamma = parse_scalar<double>(full, v);
            else if (full == "problem.alpha_reg") c.alpha_reg = parse_scalar<double>(full, v);
            else if (full == "problem.alpha_cov") c.alpha_cov = parse_scalar<double>(full, v);
            else if (full == "problem.lower") c.lower = parse_scalar<double>(full, v);
            else if (full == "problem.upper") c.upper = parse_scalar<double>(full, v);
            else if (full == "problem.constraint_stride") c.constraint_stride = parse_scalar<int>(full, v);
            else if (full == "problem.lumped_mass") c.lumped_mass = parse_bool(full, v);
            else if (full == "sampling.samplers") c.samplers = parse_list<std::string>(full, v);
            else if (full == "sampling.samples") c.samples = parse_scalar<Index>(full, v);
            else if (full == "sampling.schedule") c.schedule = parse_list<Index>(full, v);
            else if (full == "sampling.seed") c.seed = parse_scalar<std::uint64_t>(full, v);
            else if (full == "sampling.repetitions") c.repetitions = parse_scalar<int>(full, v);
            else if (full == "sampling.reference_samples") c.reference_samples = parse_scalar<Index>(full, v);
            else if (full == "study.kl_modes") c.kl_modes = parse_list<int>(full, v);
            else if (full == "study.kl_reference_modes") c.kl_reference_modes = parse_scalar<int>(full, v);
            else if (full == "study.bound_levels") c.bound_levels = parse_list<double>(full, v);
            else if (full == "study.oracle") c.oracle = v;
            else if (full == "study.oracle_radius") c.oracle_radius = parse_scalar<double>(full, v);
            else if (full == "study.oracle_dim") c.oracle_dim = parse_scalar<int>(full, v);
            else if (full == "study.oracle_offset") c.oracle_offset = parse_scalar<double>(full, v);
            else if (full == "optimize.targets") c.targets = parse_list<double>(full, v);
            else if (full == "optimize.max_iterations") c.max_iterations = parse_scalar<int>(full, v);
            else if (full == "optimize.kkt_tol") c.kkt_tol = parse_scalar<double>(full, v);
            else if (full == "optimize.bfgs_memory") c.bfgs_memory = parse_scalar<int>(full, v);
            else if (full == "optimize.validation_samples") c.validation_samples = parse_scalar<Index>(full, v);
            else if (full == "optimize.plot_samples") c.plot_samples = parse_scalar<int>(full, v);
            else if (full == "optimize.u_min") c.u_min = parse_scalar<double>(full, v);
            else if (full == "optimize.u_max") c.u_max = parse_scalar<double>(full, v);
            else if (full == "output.dir") c.output_dir = v;
            else throw ConfigError("unknown config key '" + full + "'");
        }
    }
    validate(c);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

// 64-bit FNV-1a of the canonical text.
// The output directory is left out so relocating a run keeps its hash.
inline std::string config_hash(ExperimentConfig c) {
    c.output_dir.clear();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : to_text(c)) h = (h ^ ch) * 1099511628211ULL;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

// Desk-scale profile: coarser grid, sample counts capped at 1e4, fewer
// repetitions.
inline ExperimentConfig apply_fast(ExperimentConfig c) {
    constexpr Index cap = 10000;
    c.n = std::min(c.n, 64);
    c.K = std::min(c.K, c.n);
    c.kl_reference_modes = std::min(c.kl_reference_modes, c.n);
    std::vector<int> modes;
    for (int k : c.kl_modes)
        if (k <= c.kl_reference_modes) modes.push_back(k);
    if (modes.empty()) modes.push_back(c.kl_reference_modes);
    c.kl_modes = modes;
    c.samples = std::min(c.samples, cap);
    std::vector<Index> sched;
    for (Index s : c.schedule)
        if (s <= cap) sched.push_back(s);
    if (sched.empty()) sched.push_back(std::min(c.schedule.front(), cap));
    c.schedule = sched;
    c.repetitions = std::min(c.repetitions, 20);
    c.reference_samples = std::min<Index>(c.reference_samples, 1000000);
    c.validation_samples = std::min(c.validation_samples, cap);
    validate(c);
    return c;
}

}  // namespace srdcc::harness
