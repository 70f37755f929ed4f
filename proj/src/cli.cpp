#include "qdyn/cli.hpp"

#include "qdyn/fixed_points.hpp"
#include "qdyn/sampling.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <string_view>

namespace qdyn::cli {

namespace {

using nlohmann::json;

/// Usage or precondition problem detected by the CLI layer itself.
struct UsageProblem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::shared_ptr<spdlog::logger> make_logger() {
    auto logger = std::make_shared<spdlog::logger>("qdyn", std::make_shared<spdlog::sinks::stderr_sink_st>());
    logger->set_level(spdlog::level::off);
    if (const char* level = std::getenv("QDYN_LOG")) {
        logger->set_level(spdlog::level::from_str(level));
    }
    return logger;
}

struct Inputs {
    RunConfig config;
    bool format_given = false;
    std::vector<double> x0;
    std::size_t steps = 100;
    std::string x1_range;
    std::size_t n = 0;
    std::size_t trials = 100;
    std::vector<int> support;
    std::string config_file;
};

OutputFormat parse_format(const std::string& s) {
    if (s == "json") return OutputFormat::Json;
    if (s == "csv") return OutputFormat::Csv;
    throw UsageProblem("format must be json or csv, got '" + s + "'");
}

// Values in the config file override command-line flags.
void apply_config_file(Inputs& in) {
    std::ifstream file(in.config_file);
    if (!file) throw UsageProblem("cannot open config file '" + in.config_file + "'");
    json j;
    try {
        j = json::parse(file);
    } catch (const json::exception& e) {
        throw UsageProblem(std::string("config file is not valid JSON: ") + e.what());
    }
    try {
        auto& c = in.config;
        if (j.contains("theta")) c.theta = j.at("theta").get<std::vector<double>>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("budget")) c.budget = j.at("budget").get<std::size_t>();
        if (j.contains("format")) {
            c.output_format = parse_format(j.at("format").get<std::string>());
            in.format_given = true;
        }
        if (j.contains("tolerances")) {
            const auto& t = j.at("tolerances");
            if (t.contains("tau_unit")) c.tolerances.tau_unit = t.at("tau_unit").get<double>();
            if (t.contains("eps_conv")) c.tolerances.eps_conv = t.at("eps_conv").get<double>();
            if (t.contains("r_escape")) c.tolerances.r_escape = t.at("r_escape").get<double>();
            if (t.contains("bisect_tol")) c.tolerances.bisect_tol = t.at("bisect_tol").get<double>();
        }
        if (j.contains("x0")) in.x0 = j.at("x0").get<std::vector<double>>();
        if (j.contains("steps")) in.steps = j.at("steps").get<std::size_t>();
        if (j.contains("x1_range")) in.x1_range = j.at("x1_range").get<std::string>();
        if (j.contains("n")) in.n = j.at("n").get<std::size_t>();
        if (j.contains("trials")) in.trials = j.at("trials").get<std::size_t>();
        if (j.contains("support")) in.support = j.at("support").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw UsageProblem(std::string("bad config value: ") + e.what());
    }
}

void validate_tolerances(const Tolerances& t) {
    for (double v : {t.tau_unit, t.eps_conv, t.r_escape, t.bisect_tol}) {
        if (!(v > 0.0) || !std::isfinite(v)) throw UsageProblem("tolerances must be finite and > 0");
    }
}

FateOptions fate_options(const RunConfig& c) {
    FateOptions o;
    o.eps_conv = c.tolerances.eps_conv;
    o.r_escape = c.tolerances.r_escape;
    return o;
}

std::string support_string(const SupportMask& m) {
    std::string s;
    for (std::size_t k = 0; k < m.dimension(); ++k) s += m.contains(k) ? '1' : '0';
    return s;
}

struct PointRecord {
    std::size_t index;
    FixedPoint point;
    Spectrum spectrum;
    StabilityClass stability;
    std::optional<bool> certificate;
};

PointRecord describe(const ThetaParams& params, const FixedPoint& fp, double tau_unit) {
    PointRecord r{static_cast<std::size_t>(fp.support.bits()), fp, spectrum_at(params, fp), {}, std::nullopt};
    r.stability = classify(r.spectrum, tau_unit);
    if (!fp.support.empty()) r.certificate = nonhyperbolic_condition(params, fp.support);
    return r;
}

json record_json(const PointRecord& r) {
    json support = json::array();
    for (std::size_t k = 0; k < r.point.support.dimension(); ++k) support.push_back(r.point.support.contains(k) ? 1 : 0);
    json eig = json::array();
    for (const auto& l : r.spectrum.eigenvalues) eig.push_back({l.real(), l.imag()});
    return {
        {"index", r.index},
        {"support", support},
        {"coords", r.point.coords},
        {"feasible", r.point.feasible},
        {"residual", r.point.residual},
        {"eigenvalues", eig},
        {"class", std::string(to_string(r.stability.tag))},
        {"nonhyperbolic_certificate", r.certificate ? json(*r.certificate) : json(nullptr)},
    };
}

void write_records(const ThetaParams& params, const std::vector<PointRecord>& records, OutputFormat format,
                   std::ostream& out) {
    if (format == OutputFormat::Json) {
        json arr = json::array();
        for (const auto& r : records) arr.push_back(record_json(r));
        json doc{{"theta", std::vector<double>(params.values().begin(), params.values().end())},
                 {"fixed_points", arr}};
        out << doc.dump(2) << '\n';
        return;
    }
    const std::size_t n = params.size();
    out << "index,support,feasible,residual,class,nonhyperbolic_certificate";
    for (std::size_t k = 1; k <= n; ++k) out << ",x" << k;
    for (std::size_t k = 1; k <= n; ++k) out << ",re" << k << ",im" << k;
    out << '\n';
    for (const auto& r : records) {
        out << fmt::format("{},{},{},{},{},{}", r.index, support_string(r.point.support),
                           r.point.feasible ? "true" : "false", r.point.residual,
                           to_string(r.stability.tag),
                           r.certificate ? (*r.certificate ? "true" : "false") : "");
        for (double v : r.point.coords) out << fmt::format(",{}", v);
        for (const auto& l : r.spectrum.eigenvalues) out << fmt::format(",{},{}", l.real(), l.imag());
        out << '\n';
    }
}

int cmd_fixed_points(const Inputs& in, std::ostream& out, spdlog::logger& log) {
    const ThetaParams params(in.config.theta);
    const auto points = enumerate_fixed_points(params);
    log.debug("enumerated {} fixed points", points.size());
    std::vector<PointRecord> records;
    records.reserve(points.size());
    for (const auto& fp : points) records.push_back(describe(params, fp, in.config.tolerances.tau_unit));
    write_records(params, records, in.format_given ? in.config.output_format : OutputFormat::Json, out);
    return Success;
}

int cmd_classify(const Inputs& in, std::ostream& out, spdlog::logger&) {
    const ThetaParams params(in.config.theta);
    if (in.support.size() != params.size()) {
        throw UsageProblem("--support needs one 0/1 entry per coordinate");
    }
    std::uint64_t bits = 0;
    for (std::size_t k = 0; k < in.support.size(); ++k) {
        if (in.support[k] != 0 && in.support[k] != 1) throw UsageProblem("--support entries must be 0 or 1");
        if (in.support[k] == 1) bits |= std::uint64_t{1} << k;
    }
    const auto fp = fixed_point_for_support(params, SupportMask(params.size(), bits));
    write_records(params, {describe(params, fp, in.config.tolerances.tau_unit)},
                  in.format_given ? in.config.output_format : OutputFormat::Json, out);
    return Success;
}

json fate_json(const FateReport& f) {
    return {
        {"outcome", std::string(to_string(f.outcome))},
        {"fixed_point_index", f.fixed_point_index ? json(*f.fixed_point_index) : json(nullptr)},
        {"steps_used", f.steps_used},
        {"evidence", std::string(to_string(f.evidence))},
        {"final_state", std::vector<double>(f.final_state.values().begin(), f.final_state.values().end())},
    };
}

std::string_view to_string(TrajectoryStop s) {
    switch (s) {
    case TrajectoryStop::StepLimit: return "step_limit";
    case TrajectoryStop::Converged: return "converged";
    case TrajectoryStop::Escaped: return "escaped";
    case TrajectoryStop::Overflow: return "overflow";
    }
    return "unknown";
}

int cmd_simulate(const Inputs& in, std::ostream& out, spdlog::logger& log) {
    const ThetaParams params(in.config.theta);
    if (in.x0.size() != params.size()) {
        throw UsageProblem(fmt::format("--x0 has {} coordinates but theta has {}", in.x0.size(), params.size()));
    }
    const State x0(in.x0);
    const auto options = fate_options(in.config);
    const auto traj = iterate(params, x0, in.steps, options);
    const auto fate = classify_fate(params, x0, in.config.budget, options);
    log.debug("trajectory of {} states, fate {}", traj.states.size(), to_string(fate.outcome));

    const auto format = in.format_given ? in.config.output_format : OutputFormat::Csv;
    if (format == OutputFormat::Json) {
        json rows = json::array();
        for (const auto& s : traj.states) rows.push_back(std::vector<double>(s.values().begin(), s.values().end()));
        json doc{{"trajectory", rows}, {"stop", std::string(to_string(traj.stop))}, {"fate", fate_json(fate)}};
        out << doc.dump(2) << '\n';
        return Success;
    }
    out << "step";
    for (std::size_t k = 1; k <= params.size(); ++k) out << ",x" << k;
    out << '\n';
    for (std::size_t step = 0; step < traj.states.size(); ++step) {
        out << step;
        for (double v : traj.states[step].values()) out << fmt::format(",{}", v);
        out << '\n';
    }
    out << fmt::format("# fate outcome={} fixed_point_index={} steps_used={} evidence={} stop={}\n",
                       to_string(fate.outcome),
                       fate.fixed_point_index ? std::to_string(*fate.fixed_point_index) : std::string("none"),
                       fate.steps_used, to_string(fate.evidence), to_string(traj.stop));
    return Success;
}

std::vector<double> parse_range(const std::string& spec) {
    const auto a = spec.find(':');
    const auto b = spec.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) {
        throw UsageProblem("--x1-range must look like lo:hi:count");
    }
    double lo = 0.0;
    double hi = 0.0;
    long long count = 0;
    try {
        std::size_t used = 0;
        lo = std::stod(spec.substr(0, a), &used);
        if (used != a) throw std::invalid_argument("lo");
        const std::string hs = spec.substr(a + 1, b - a - 1);
        hi = std::stod(hs, &used);
        if (used != hs.size()) throw std::invalid_argument("hi");
        const std::string cs = spec.substr(b + 1);
        count = std::stoll(cs, &used);
        if (used != cs.size()) throw std::invalid_argument("count");
    } catch (const std::exception&) {
        throw UsageProblem("--x1-range must look like lo:hi:count");
    }
    if (count < 1) throw UsageProblem("--x1-range count must be ≥ 1");
    if (hi < lo) throw UsageProblem("--x1-range needs lo ≤ hi");
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        grid[static_cast<std::size_t>(i)] =
            count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return grid;
}

int cmd_basin(const Inputs& in, std::ostream& out, spdlog::logger& log) {
    const ThetaParams params(in.config.theta);
    if (params.size() != 2) throw UsageProblem("basin requires n = 2");
    if (in.x1_range.empty()) throw UsageProblem("basin requires --x1-range lo:hi:count");
    const auto grid = parse_range(in.x1_range);
    const auto samples =
        basin_boundary(params, grid, in.config.tolerances.bisect_tol, in.config.budget, fate_options(in.config));
    log.debug("bisected {} vertical lines", samples.size());

    const auto format = in.format_given ? in.config.output_format : OutputFormat::Csv;
    if (format == OutputFormat::Json) {
        json rows = json::array();
        for (const auto& s : samples) {
            rows.push_back({{"x1", s.x1},
                            {"x2_low", s.x2_low},
                            {"x2_high", s.x2_high},
                            {"width", s.width},
                            {"flagged", s.flagged()},
                            {"flag", std::string(to_string(s.flag))}});
        }
        out << json{{"samples", rows}}.dump(2) << '\n';
        return Success;
    }
    out << "x1,x2_low,x2_high,width,flagged,flag\n";
    for (const auto& s : samples) {
        out << fmt::format("{},{},{},{},{},{}\n", s.x1, s.x2_low, s.x2_high, s.width,
                           s.flagged() ? "true" : "false", to_string(s.flag));
    }
    return Success;
}

struct CheckTally {
    std::string name;
    std::size_t passed = 0;
    std::size_t failed = 0;
    double worst = 0.0;
};

int cmd_verify(const Inputs& in, std::ostream& out, std::ostream& err, spdlog::logger& log) {
    if (in.n < 2 || in.n > 12) throw UsageProblem("verify requires 2 ≤ n ≤ 12");
    if (in.trials < 1) throw UsageProblem("verify requires --trials ≥ 1");

    CheckTally residual2{"eigenvalue-2 residual max ≤ 1e-8"};
    CheckTally distance2{"eigenvalue-2 distance max ≤ 1e-6"};
    CheckTally fp_residual{"fixed-point residual max ≤ 1e-9 (relative)"};
    CheckTally attracting{"attracting only at origin"};
    CheckTally invariance{"region invariance (Mbar1, Mbar2)"};
    std::vector<std::vector<double>> offending;

    SplitMix64 root(in.config.seed);
    for (std::size_t trial = 0; trial < in.trials; ++trial) {
        SplitMix64 rng = root.split();
        const ThetaParams params = sample_theta(rng, in.n);
        bool trial_ok = true;
        auto record = [&](CheckTally& t, bool ok) {
            (ok ? t.passed : t.failed) += 1;
            trial_ok = trial_ok && ok;
        };

        const auto points = enumerate_fixed_points(params);
        bool count_ok = points.size() == (std::size_t{1} << in.n);
        for (const auto& fp : points) {
            const double rel = fp.residual / std::max(1.0, max_norm(fp.coords));
            fp_residual.worst = std::max(fp_residual.worst, rel);
            record(fp_residual, count_ok && rel <= 1e-9);

            const auto spec = spectrum_at(params, fp);
            const bool is_attracting = classify(spec, in.config.tolerances.tau_unit).tag == StabilityTag::Attracting;
            record(attracting, is_attracting == fp.support.empty());
            if (fp.support.empty()) continue;

            const double r2 = eigenvalue_two_residual(params, fp);
            residual2.worst = std::max(residual2.worst, r2);
            record(residual2, r2 <= 1e-8);
            double d2 = std::numeric_limits<double>::infinity();
            for (const auto& l : spec.eigenvalues) d2 = std::min(d2, std::abs(l - 2.0));
            distance2.worst = std::max(distance2.worst, d2);
            record(distance2, d2 <= 1e-6);
        }

        const State low = sample_in_mbar1(rng, params, rng.uniform_left_open(0.05, 0.95));
        const State high = sample_in_mbar2(rng, params, rng.uniform_left_open(1.05, 3.0));
        const State low_next = qdyn::apply(params, low);
        const State high_next = qdyn::apply(params, high);
        bool low_ok = region_membership(params, low_next, Region::Mbar1);
        bool high_ok = region_membership(params, high_next, Region::Mbar2);
        for (std::size_t k = 0; k < in.n; ++k) {
            low_ok = low_ok && low_next[k] <= low[k];
            high_ok = high_ok && high_next[k] >= high[k];
        }
        record(invariance, low_ok);
        record(invariance, high_ok);

        if (!trial_ok) {
            offending.emplace_back(params.values().begin(), params.values().end());
            log.warn("trial {} failed", trial);
        }
    }

    const std::vector<const CheckTally*> checks{&residual2, &distance2, &fp_residual, &attracting, &invariance};
    std::size_t failed = 0;
    for (const auto* c : checks) failed += c->failed;

    const auto format = in.format_given ? in.config.output_format : OutputFormat::Json;
    if (format == OutputFormat::Json) {
        json arr = json::array();
        for (const auto* c : checks) {
            arr.push_back({{"check", c->name},
                           {"passed", c->passed},
                           {"failed", c->failed},
                           {"worst", c->worst},
                           {"status", c->failed == 0 ? "pass" : "fail"}});
        }
        json doc{{"n", in.n}, {"trials", in.trials}, {"seed", in.config.seed}, {"checks", arr},
                 {"result", failed == 0 ? "pass" : "fail"}};
        out << doc.dump(2) << '\n';
    } else {
        out << "check,passed,failed,worst,status\n";
        for (const auto* c : checks) {
            out << fmt::format("{},{},{},{},{}\n", c->name, c->passed, c->failed, c->worst,
                               c->failed == 0 ? "pass" : "fail");
        }
    }
    for (const auto& theta : offending) {
        err << "offending theta:";
        for (double t : theta) err << fmt::format(" {:.17g}", t);
        err << '\n';
    }
    return failed == 0 ? Success : VerificationFailure;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    auto log = make_logger();

    CLI::App app{"Fixed points, stability and basin analysis for the quadratic operator H", "qdyn"};
    app.require_subcommand(1);

    Inputs in;
    std::string format_text;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--theta", in.config.theta, "comma-separated positive rates")->delimiter(',');
        sub->add_option("--format", format_text, "json or csv");
        sub->add_option("--budget", in.config.budget, "iteration cap for fate classification");
        sub->add_option("--config", in.config_file, "JSON config file (overrides flags)");
    };

    auto* fixed = app.add_subcommand("fixed-points", "enumerate all 2^n fixed points with their stability");
    common(fixed);
    auto* classify_cmd = app.add_subcommand("classify", "one fixed point selected by a 0/1 support list");
    common(classify_cmd);
    classify_cmd->add_option("--support", in.support, "0/1 per coordinate, e.g. 1,0,1")->delimiter(',');
    auto* simulate = app.add_subcommand("simulate", "iterate from x0 and report the fate");
    common(simulate);
    simulate->add_option("--x0", in.x0, "comma-separated initial point")->delimiter(',');
    simulate->add_option("--steps", in.steps, "number of iterations to print");
    auto* basin = app.add_subcommand("basin", "bisect the basin boundary (n = 2)");
    common(basin);
    basin->add_option("--x1-range", in.x1_range, "lo:hi:count");
    basin->add_option("--tol", in.config.tolerances.bisect_tol, "bisection bracket width");
    auto* verify = app.add_subcommand("verify", "randomized check of the structural theorems");
    common(verify);
    verify->add_option("--n", in.n, "dimension")->required();
    verify->add_option("--trials", in.trials, "number of random theta vectors");
    verify->add_option("--seed", in.config.seed, "seed for the SplitMix64 generator");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return Success;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return UsageError;
    }

    try {
        if (!format_text.empty()) {
            in.config.output_format = parse_format(format_text);
            in.format_given = true;
        }
        if (!in.config_file.empty()) apply_config_file(in);
        validate_tolerances(in.config.tolerances);
        if (in.config.budget < 1) throw UsageProblem("--budget must be ≥ 1");

        if (*fixed) return cmd_fixed_points(in, out, *log);
        if (*classify_cmd) return cmd_classify(in, out, *log);
        if (*simulate) return cmd_simulate(in, out, *log);
        if (*basin) return cmd_basin(in, out, *log);
        if (*verify) return cmd_verify(in, out, err, *log);
    } catch (const UsageProblem& e) {
        err << "error: " << e.what() << '\n';
        return UsageError;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << '\n';
        return UsageError;
    } catch (const NotApplicableError& e) {
        err << "error: " << e.what() << '\n';
        return UsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return VerificationFailure;
    }
    return UsageError;
}

} // namespace qdyn::cli
