// fpt: first-passage-time analysis of continuous-time Markov chains.
//
// Subcommands cover exponentiality certification, quasi-stationary
// distributions, lumping, envelope bounds, Monte Carlo samplers with
// statistical tests, and the birth-death / two-type branching closed forms.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpt/branching.hpp"
#include "fpt/chain.hpp"
#include "fpt/defaults.hpp"
#include "fpt/errors.hpp"
#include "fpt/exponentiality.hpp"
#include "fpt/lumping.hpp"
#include "fpt/model_io.hpp"
#include "fpt/simulate.hpp"

namespace {

using nlohmann::json;

constexpr int exit_ok = 0;
constexpr int exit_io = 1;
constexpr int exit_validation = 2;
constexpr int exit_convergence = 3;
constexpr int exit_rejected = 4;

struct Output {
    std::string path;  // empty = stdout

    void write_text(const std::string& text) const {
        if (path.empty()) {
            std::cout << text;
            return;
        }
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
        out << text;
        if (!out) throw std::ios_base::failure("write failed for '" + path + "'");
    }

    void write_report(const fpt::RunReport& report) const {
        std::ostringstream os;
        fpt::emit_report(report, os);
        write_text(os.str());
    }
};

std::string version_banner() {
    std::ostringstream os;
    os << "fpt " << fpt::defaults::version << "\n"
       << "defaults: structural tol " << fpt::defaults::structural_tol
       << ", numeric tol " << fpt::defaults::numeric_tol
       << ", distribution tol " << fpt::defaults::distribution_tol
       << ", poisson tail " << fpt::defaults::poisson_tail
       << ", rayleigh tol " << fpt::defaults::rayleigh_tol
       << ", event cap " << fpt::defaults::max_events_per_trajectory << "\n";
    return os.str();
}

fpt::Scheme parse_scheme(const std::string& s) {
    if (s == "direct") return fpt::Scheme::direct;
    if (s == "two-clock" || s == "two_clock") return fpt::Scheme::two_clock;
    throw fpt::ValidationError("unknown scheme '" + s + "' (want direct or two-clock)");
}

fpt::TimeGrid pick_grid(const std::string& spec, double alpha) {
    if (spec.empty()) return fpt::default_grid(alpha);
    return fpt::parse_grid_spec(spec);
}

// "auto" -> nullopt, otherwise a parsed rate.
std::optional<double> parse_alpha_flag(const std::string& flag) {
    if (flag == "auto" || flag == "fit") return std::nullopt;
    try {
        return std::stod(flag);
    } catch (const std::exception&) {
        throw fpt::ValidationError("--alpha must be a rate or 'auto'");
    }
}

struct CommonFlags {
    std::string model;
    std::string mu = "uniform";
    std::string grid;
    std::string out;
    double tol = 1e-9;
    std::uint64_t seed = 1;
    std::size_t n = 10000;
    std::string scheme = "direct";
    unsigned workers = 1;
};

int run(CLI::App& app, int argc, char** argv) {
    CommonFlags f;
    std::string partition_path;
    std::string alpha_flag = "auto";
    double q21 = 0, q31 = 0, q23 = 0, q32 = 0;
    double bd_lambda = 0, bd_nu = 0, bd_alpha = 0;
    std::size_t kmax = 50;
    std::size_t ladder_n = 10;
    double horizon = 0.0;  // 0 = auto (5/alpha)

    const auto add_model = [&](CLI::App* cmd) {
        cmd->add_option("--model", f.model, "model JSON file")->required();
    };
    const auto add_mu = [&](CLI::App* cmd) {
        cmd->add_option("--mu", f.mu, "initial law: uniform, point:LABEL, or a JSON file");
    };
    const auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", f.out, "output path (default: standard output)");
    };

    auto* check = app.add_subcommand("check-exp", "certify exponentiality of T under mu");
    add_model(check);
    add_mu(check);
    add_out(check);
    check->add_option("--grid", f.grid, "time grid a:b:n(geom|lin); default spans alpha*t in [0.05,5]");
    check->add_option("--tol", f.tol, "sup-deviation tolerance")->capture_default_str();
    check->add_option("--alpha", alpha_flag,
                      "rate to certify against; auto = the eta-weighted mass of mu")
        ->capture_default_str();

    auto* qsd = app.add_subcommand("qsd", "quasi-stationary distribution and decay rate");
    add_model(qsd);
    add_out(qsd);
    qsd->add_option("--tol", f.tol, "residual tolerance")->capture_default_str();

    auto* ladder = app.add_subcommand("ladder", "iterated-law ladder from mu");
    add_model(ladder);
    add_mu(ladder);
    add_out(ladder);
    ladder->add_option("--n", ladder_n, "levels requested")->capture_default_str();

    auto* yaglom = app.add_subcommand("yaglom", "quasi-limit by the correction integral");
    add_model(yaglom);
    add_mu(yaglom);
    add_out(yaglom);
    yaglom->add_option("--horizon", horizon, "initial integration horizon (default 5/alpha)");
    yaglom->add_option("--tol", f.tol, "tolerance")->default_val(1e-8);

    auto* lump = app.add_subcommand("lump", "validate a partition and solve the lumped QSD");
    add_model(lump);
    add_out(lump);
    lump->add_option("--partition", partition_path,
                     "partition JSON (defaults to the model's partition field)");

    auto* emergence = app.add_subcommand("emergence", "two-block closed form");
    emergence->add_option("--q21", q21, "killing rate of block 2")->required();
    emergence->add_option("--q31", q31, "killing rate of block 3")->required();
    emergence->add_option("--q23", q23, "switch rate 2 -> 3")->required();
    emergence->add_option("--q32", q32, "switch rate 3 -> 2")->required();
    add_out(emergence);

    auto* bounds = app.add_subcommand("bounds", "exponential envelope of the tail");
    add_model(bounds);
    add_out(bounds);

    auto* simulate = app.add_subcommand("simulate", "sample first-passage times (CSV)");
    add_model(simulate);
    add_mu(simulate);
    add_out(simulate);
    simulate->add_option("--n", f.n, "trajectories")->capture_default_str();
    simulate->add_option("--seed", f.seed, "master seed")->capture_default_str();
    simulate->add_option("--scheme", f.scheme, "direct or two-clock")->capture_default_str();
    simulate->add_option("--workers", f.workers, "worker threads")->capture_default_str();

    auto* testexp = app.add_subcommand("test-exp", "KS test of simulated passage times");
    add_model(testexp);
    add_mu(testexp);
    add_out(testexp);
    testexp->add_option("--n", f.n, "trajectories")->capture_default_str();
    testexp->add_option("--seed", f.seed, "master seed")->capture_default_str();
    testexp->add_option("--scheme", f.scheme, "direct or two-clock")->capture_default_str();
    testexp->add_option("--workers", f.workers, "worker threads")->capture_default_str();
    testexp->add_option("--alpha", alpha_flag, "rate to test against, or auto to fit 1/mean")
        ->capture_default_str();

    auto* bd = app.add_subcommand("bd", "birth-death extinction law coefficients");
    auto* bd_lambda_opt = bd->add_option("--lambda", bd_lambda, "per-capita birth rate");
    auto* bd_nu_opt = bd->add_option("--nu", bd_nu, "per-capita death rate");
    bd->add_option("--model", f.model, "spec JSON {\"lambda\": ..., \"nu\": ...}");
    bd->add_option("--alpha", bd_alpha, "exponential rate")->required();
    bd->add_option("--kmax", kmax, "coefficients to extract")->capture_default_str();
    add_out(bd);

    auto* multitype = app.add_subcommand("multitype", "two-type emergence generating function (CSV)");
    multitype->add_option("--model", f.model, "two-type spec JSON file")->required();
    multitype->add_option("--alpha", bd_alpha, "exponential rate")->required();
    multitype->add_option("--grid", f.grid, "time grid a:b:n(geom|lin)")->required();
    multitype->add_option("--n", f.n, "trajectories")->capture_default_str();
    multitype->add_option("--seed", f.seed, "master seed")->capture_default_str();
    multitype->add_option("--workers", f.workers, "worker threads")->capture_default_str();
    add_out(multitype);

    app.require_subcommand(1);
    app.parse(argc, argv);

    const Output out{f.out};
    fpt::RunReport report;

    if (check->parsed()) {
        report.command = "check-exp";
        report.inputs_digest = fpt::digest_files({f.model});
        const fpt::ModelDocument doc = fpt::parse_model(f.model);
        const fpt::Generator gen = doc.to_generator();
        const fpt::KilledGenerator kg = fpt::build_killed(gen);
        const fpt::Distribution mu = fpt::parse_mu_spec(f.mu, gen);
        const std::optional<double> fixed_alpha = parse_alpha_flag(alpha_flag);
        const double alpha = fixed_alpha ? *fixed_alpha : fpt::alpha_of(kg, mu);
        const fpt::TimeGrid grid = pick_grid(f.grid, alpha);
        const fpt::ExponentialityReport rep =
            fixed_alpha ? fpt::check_exponentiality_at(kg, mu, grid, f.tol, *fixed_alpha)
                        : fpt::check_exponentiality(kg, mu, grid, f.tol);
        if (!rep.reason.empty()) report.warnings.push_back(rep.reason);
        if (!rep.high_confidence && rep.reason.empty())
            report.warnings.push_back("grid has no point with alpha*t in [0.5,3]; "
                                      "verdict is low-confidence");
        report.result = fpt::to_json(rep);
        report.result["diff_condition_value"] =
            fpt::check_diff_condition(kg, mu).weighted_exit_rate;
        out.write_report(report);
        return exit_ok;
    }

    if (qsd->parsed()) {
        report.command = "qsd";
        report.inputs_digest = fpt::digest_files({f.model});
        const fpt::Generator gen = fpt::parse_model(f.model).to_generator();
        const fpt::KilledGenerator kg = fpt::build_killed(gen);
        const fpt::PerronQsd solved = fpt::perron_qsd(kg);
        const fpt::QsdCheck chk = fpt::is_qsd(kg, solved.mu, f.tol > 0 ? f.tol : 1e-9);
        json result;
        result["alpha"] = solved.alpha;
        result["mu"] = std::vector<double>(solved.mu.e_mass().begin(), solved.mu.e_mass().end());
        json labels = json::array();
        for (std::size_t i = 0; i < kg.e_size(); ++i) labels.push_back(kg.e_label(i));
        result["states"] = std::move(labels);
        result["residual"] = chk.residual;
        report.result = std::move(result);
        out.write_report(report);
        return exit_ok;
    }

    if (ladder->parsed()) {
        report.command = "ladder";
        report.inputs_digest = fpt::digest_files({f.model});
        const fpt::Generator gen = fpt::parse_model(f.model).to_generator();
        const fpt::KilledGenerator kg = fpt::build_killed(gen);
        const fpt::Distribution mu = fpt::parse_mu_spec(f.mu, gen);
        report.result = fpt::to_json(fpt::mu_ladder(kg, mu, ladder_n));
        out.write_report(report);
        return exit_ok;
    }

    if (yaglom->parsed()) {
        report.command = "yaglom";
        report.inputs_digest = fpt::digest_files({f.model});
        const fpt::Generator gen = fpt::parse_model(f.model).to_generator();
        const fpt::KilledGenerator kg = fpt::build_killed(gen);
        const fpt::Distribution mu = fpt::parse_mu_spec(f.mu, gen);
        const double alpha = fpt::alpha_of(kg, mu);
        const double h = horizon > 0.0 ? horizon : (alpha > 0.0 ? 5.0 / alpha : 1.0);
        const fpt::Distribution pi = fpt::yaglom_correction(kg, mu, h, f.tol);
        const fpt::QsdCheck chk = fpt::is_qsd(kg, pi, 1e-6);
        json result;
        result["alpha"] = chk.alpha;
        result["pi"] = std::vector<double>(pi.e_mass().begin(), pi.e_mass().end());
        json labels = json::array();
        for (std::size_t i = 0; i < kg.e_size(); ++i) labels.push_back(kg.e_label(i));
        result["states"] = std::move(labels);
        result["residual"] = chk.residual;
        report.result = std::move(result);
        out.write_report(report);
        return exit_ok;
    }

    if (lump->parsed()) {
        report.command = "lump";
        std::vector<std::filesystem::path> inputs{f.model};
        if (!partition_path.empty()) inputs.push_back(partition_path);
        report.inputs_digest = fpt::digest_files(inputs);
        const fpt::ModelDocument doc = fpt::parse_model(f.model);
        const fpt::Generator gen = doc.to_generator();
        fpt::Partition part = [&] {
            if (!partition_path.empty()) return fpt::parse_partition(partition_path, gen);
            if (!doc.partition)
                throw fpt::ValidationError("no --partition given and the model has none");
            return fpt::Partition::create(gen, *doc.partition);
        }();
        const fpt::LumpedGenerator lg = fpt::validate_partition(gen, part);
        const fpt::LumpedQsd solved = fpt::solve_lumped_qsd(lg);
        report.result = fpt::to_json(solved, lg);
        out.write_report(report);
        return exit_ok;
    }

    if (emergence->parsed()) {
        report.command = "emergence";
        report.inputs_digest = fpt::digest_files({});
        const fpt::EmergenceLaw law = fpt::emergence_closed_form(q21, q31, q23, q32);
        json result;
        result["mu2"] = law.mu2;
        result["mu3"] = 1.0 - law.mu2;
        result["alpha"] = law.alpha;
        report.result = std::move(result);
        out.write_report(report);
        return exit_ok;
    }

    if (bounds->parsed()) {
        report.command = "bounds";
        report.inputs_digest = fpt::digest_files({f.model});
        const fpt::Generator gen = fpt::parse_model(f.model).to_generator();
        report.result = fpt::to_json(fpt::envelope(fpt::build_killed(gen)));
        out.write_report(report);
        return exit_ok;
    }

    if (simulate->parsed() || testexp->parsed()) {
        const fpt::Generator gen = fpt::parse_model(f.model).to_generator();
        const fpt::KilledGenerator kg = fpt::build_killed(gen);
        const fpt::Distribution mu = fpt::parse_mu_spec(f.mu, gen);
        fpt::SimOptions opt;
        opt.workers = f.workers;
        const fpt::Scheme scheme = parse_scheme(f.scheme);
        const fpt::SampleSet sample = scheme == fpt::Scheme::direct
                                          ? fpt::simulate_direct(gen, mu, f.n, f.seed, opt)
                                          : fpt::simulate_two_clock(kg, mu, f.n, f.seed, opt);
        if (simulate->parsed()) {
            std::ostringstream csv;
            fpt::write_samples_csv(sample, csv);
            out.write_text(csv.str());
            if (!f.out.empty()) {
                report.command = "simulate";
                report.inputs_digest = fpt::digest_files({f.model});
                json result;
                result["scheme"] = fpt::to_string(sample.scheme);
                result["n"] = sample.values.size();
                result["seed"] = sample.seed;
                result["csv"] = f.out;
                report.result = std::move(result);
                fpt::emit_report(report, std::cout);
            }
            return exit_ok;
        }
        report.command = "test-exp";
        report.inputs_digest = fpt::digest_files({f.model});
        const fpt::ExpTest test = fpt::test_exponential(sample, parse_alpha_flag(alpha_flag));
        report.result = fpt::to_json(test, sample);
        out.write_report(report);
        return test.exponential ? exit_ok : exit_rejected;
    }

    if (bd->parsed()) {
        report.command = "bd";
        const bool from_file = !f.model.empty();
        if (!from_file && (bd_lambda_opt->count() == 0 || bd_nu_opt->count() == 0))
            throw fpt::ValidationError("bd needs either --model or both --lambda and --nu");
        report.inputs_digest =
            from_file ? fpt::digest_files({f.model}) : fpt::digest_files({});
        const fpt::BirthDeathSpec spec = from_file
                                             ? fpt::parse_birth_death(f.model)
                                             : fpt::BirthDeathSpec::create(bd_lambda, bd_nu);
        const fpt::BdCoeffs coeffs = fpt::bd_mu_alpha_coeffs(spec, bd_alpha, kmax);
        json result;
        result["lambda"] = spec.lambda;
        result["nu"] = spec.nu;
        result["alpha"] = bd_alpha;
        result["rho"] = spec.rho();
        result["classification"] = fpt::to_string(coeffs.classification);
        result["coeffs"] = coeffs.coeffs;
        report.result = std::move(result);
        out.write_report(report);
        return exit_ok;
    }

    if (multitype->parsed()) {
        const fpt::TwoTypeSpec spec = fpt::parse_two_type(f.model);
        const fpt::TimeGrid grid = fpt::parse_grid_spec(f.grid);
        fpt::SimOptions opt;
        opt.workers = f.workers;
        const fpt::MultitypeGf gf =
            fpt::multitype_mu_alpha_gf(spec, bd_alpha, grid, f.n, f.seed, opt);
        std::ostringstream csv;
        csv << "u,G\n";
        for (const auto& [u, g] : gf.table) {
            csv << json(u).dump() << ',' << json(g).dump() << '\n';
        }
        out.write_text(csv.str());
        return exit_ok;
    }

    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"first-passage-time analysis of continuous-time Markov chains"};
    app.set_version_flag("--version", version_banner());

    try {
        return run(app, argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    } catch (const fpt::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (const fpt::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_convergence;
    } catch (const fpt::CensoringError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_convergence;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return exit_io;
    }
}
