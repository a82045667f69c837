#pragma once
// Command line front end: subcommands for building expansion profiles,
// running the two-fluid solver, sweeping expansion remainders, running
// convergence studies, and checking the fast dispersion branch.  Everything
// is callable in-process through eplim_main for testing.
//
// Exit codes: 0 pass, 1 a checked criterion failed, 2 configuration error,
// 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eplim/config.hpp"
#include "eplim/dispersion.hpp"
#include "eplim/profiles_io.hpp"
#include "eplim/study.hpp"

namespace eplim {
namespace cli {

using nlohmann::ordered_json;

constexpr int kExitPass = 0;
constexpr int kExitCriterionFail = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

inline Regime parse_regime(const std::string& name) {
    std::string key = name;
    for (char& c : key)
        if (c == '-') c = '_';
    if (key == "zero_electron") return Regime::ZeroElectronMass;
    if (key == "infinity_ion") return Regime::InfinityIonMass;
    if (key == "raw") return Regime::RawMasses;
    throw ConfigError("unknown regime: " + name +
                      " (expected zero_electron, infinity_ion, or raw)");
}

inline std::string regime_name(Regime r) {
    if (r == Regime::ZeroElectronMass) return "zero_electron";
    if (r == Regime::InfinityIonMass) return "infinity_ion";
    return "raw";
}

/// Options shared by the subcommands; zero-like values mean "not given".
struct SharedArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::string profiles_dir;   // reuse a saved profile set
    std::string eps_csv;
    std::string regime;
    int threads = 0;
    int grid_n = 0;
    int order = -1;
    double t_end = 0.0;
    double scale = 0.0;
};

inline std::vector<double> parse_eps_csv(const std::string& csv) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(csv);
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("bad eps list element: " + item);
        }
    }
    if (out.empty()) throw ConfigError("empty eps list");
    return out;
}

inline GasLawPair laws_from(const Config& file) {
    GasLawPair laws;
    laws.electron = GasLaw(file.number("gas.electron.a", 1.0),
                           file.number("gas.electron.gamma", 1.0));
    laws.ion = GasLaw(file.number("gas.ion.a", 1.0), file.number("gas.ion.gamma", 1.0));
    return laws;
}

inline StudyConfig study_config_from(const Config& file, const SharedArgs& sh) {
    StudyConfig cfg;
    cfg.regime = parse_regime(file.str("study.regime", "zero_electron"));
    cfg.order_m = static_cast<int>(file.integer("study.order", 1));
    cfg.sobolev_s = static_cast<int>(file.integer("study.sobolev_s", 0));
    cfg.eps_list = file.numbers("study.eps", cfg.eps_list);
    cfg.scale = file.number("study.scale", 1.0);
    cfg.grid_n = static_cast<int>(file.integer("study.grid_n", 256));
    cfg.length = file.number("study.length", 1.0);
    cfg.lambda = file.number("study.lambda", 1.0);
    cfg.t_end = file.number("study.t_end", 0.1);
    cfg.samples = static_cast<int>(file.integer("study.samples", 11));
    cfg.cfl = file.number("study.cfl", 0.4);
    cfg.taylor_order = static_cast<int>(file.integer("study.taylor_order", 5));
    cfg.amp0 = file.number("study.amp0", 0.1);
    cfg.amp1 = file.number("study.amp1", 0.1);
    cfg.electron_mean_velocity = file.number("study.electron_mean_velocity", 0.0);
    cfg.electron_mean_velocity1 = file.number("study.electron_mean_velocity1", 0.0);
    cfg.laws = laws_from(file);
    cfg.threads = sh.threads;
    if (!sh.regime.empty()) cfg.regime = parse_regime(sh.regime);
    if (sh.order >= 0) cfg.order_m = sh.order;
    if (sh.grid_n > 0) cfg.grid_n = sh.grid_n;
    if (sh.t_end > 0.0) cfg.t_end = sh.t_end;
    if (sh.scale > 0.0) cfg.scale = sh.scale;
    if (!sh.eps_csv.empty()) cfg.eps_list = parse_eps_csv(sh.eps_csv);
    return cfg;
}

inline ordered_json gas_json(const GasLawPair& laws) {
    return ordered_json{{"electron", {{"a", laws.electron.a()}, {"gamma", laws.electron.gamma()}}},
                        {"ion", {{"a", laws.ion.a()}, {"gamma", laws.ion.gamma()}}}};
}

inline ordered_json study_config_json(const StudyConfig& cfg) {
    return ordered_json{{"regime", regime_name(cfg.regime)},
                        {"order", cfg.order_m},
                        {"sobolev_s", cfg.sobolev_s},
                        {"eps", cfg.eps_list},
                        {"scale", cfg.scale},
                        {"grid_n", cfg.grid_n},
                        {"length", cfg.length},
                        {"lambda", cfg.lambda},
                        {"t_end", cfg.t_end},
                        {"samples", cfg.samples},
                        {"cfl", cfg.cfl},
                        {"taylor_order", cfg.taylor_order},
                        {"gas", gas_json(cfg.laws)}};
}

inline ordered_json fit_json(const RateFit& f) {
    return ordered_json{{"slope", f.slope},
                        {"intercept", f.intercept},
                        {"stderr", f.stderr_slope},
                        {"points", f.points}};
}

inline ordered_json make_report(const std::string& command) {
    return ordered_json{{"schema", 1}, {"command", command}};
}

inline void write_report(const ordered_json& j, const std::filesystem::path& out_dir) {
    std::ofstream out(out_dir / "report.json", std::ios::binary);
    if (!out) throw ConfigError("cannot write report under " + out_dir.string());
    out << j.dump(2) << '\n';
}

/// Adopt a loaded profile set's build metadata so the study/evaluation
/// parameters cannot silently disagree with the data on disk.
inline void adopt_profile_metadata(StudyConfig& cfg, const ProfileSet& set) {
    cfg.regime = set.regime;
    cfg.order_m = set.order_m;
    cfg.grid_n = set.grid.n;
    cfg.length = set.grid.length;
    cfg.lambda = set.lambda;
    cfg.t_end = set.t_end;
    cfg.samples = static_cast<int>(set.samples());
    cfg.laws = set.laws;
}

inline ProfileSet obtain_profiles(const StudyConfig& cfg, const SharedArgs& sh,
                                  StudyConfig* adopted) {
    if (!sh.profiles_dir.empty()) {
        ProfileSet set = load_profile_set(sh.profiles_dir);
        if (adopted) adopt_profile_metadata(*adopted, set);
        return set;
    }
    return build_study_profiles(cfg);
}

inline int cmd_profiles(const Config& file, const SharedArgs& sh) {
    const StudyConfig cfg = study_config_from(file, sh);
    const ProfileSet set = build_study_profiles(cfg);
    const std::filesystem::path out_dir(sh.out_dir);
    const std::filesystem::path set_dir = out_dir / "profiles";
    std::filesystem::create_directories(set_dir);
    save_profile_set(set, set_dir.string());

    ordered_json j = make_report("profiles");
    j["config"] = study_config_json(cfg);
    j["results"] = ordered_json{{"path", set_dir.string()},
                                {"samples", set.samples()},
                                {"times", set.times},
                                {"orders", set.order_m + 1}};
    j["pass"] = true;
    write_report(j, out_dir);
    std::printf("profiles: wrote %s (%d samples, %d order(s))\n", set_dir.string().c_str(),
                static_cast<int>(set.samples()), set.order_m + 1);
    return kExitPass;
}

inline int cmd_run(const Config& file, const SharedArgs& sh) {
    const int grid_n =
        sh.grid_n > 0 ? sh.grid_n : static_cast<int>(file.integer("run.grid_n", 256));
    const double length = file.number("run.length", 1.0);
    const double lambda = file.number("run.lambda", 1.0);
    const double t_end = sh.t_end > 0.0 ? sh.t_end : file.number("run.t_end", 0.1);
    const double cfl = file.number("run.cfl", 0.4);
    const int samples = static_cast<int>(file.integer("run.samples", 11));
    const double n_amp = file.number("run.n_amp", 0.1);
    const double u_amp = file.number("run.u_amp", 0.05);
    const GasLawPair laws = laws_from(file);

    const std::string regime_str =
        !sh.regime.empty() ? sh.regime : file.str("run.regime", "raw");
    const Regime regime = parse_regime(regime_str);
    ScalingParams p = [&] {
        if (regime == Regime::RawMasses)
            return ScalingParams::raw(file.number("run.m_e", 1.0), file.number("run.m_i", 1.0),
                                      lambda);
        return study_scaling(regime, file.number("run.eps", 0.1), lambda);
    }();

    const Grid g(grid_n, length);
    const double two_pi = 2.0 * std::numbers::pi;
    const Field n0 = Field::sample(g, [&](double x) {
        return 1.0 + n_amp * std::cos(two_pi * x / length);
    });
    const Field u_e = Field::sample(g, [&](double x) {
        return u_amp * std::sin(two_pi * x / length);
    });
    const Field u_i = Field::sample(g, [&](double x) {
        return u_amp * std::sin(two_pi * x / length + 0.3);
    });
    const BipolarState initial = make_bipolar_state(n0, u_e, n0, u_i, lambda);

    IntegrateOptions io;
    io.cfl = cfl;
    io.sample_times = detail::sample_times(t_end, samples);
    const Trajectory tr = integrate(initial, p, laws, t_end, io);

    const std::filesystem::path out_dir(sh.out_dir);
    std::filesystem::create_directories(out_dir);
    std::vector<double> times;
    for (std::size_t k = 0; k < tr.samples.size(); ++k) {
        const BipolarState& s = tr.samples[k];
        char name[32];
        std::snprintf(name, sizeof name, "state_%03zu.csv", k);
        eplim::detail::CsvFile csv((out_dir / name).string());
        csv.raw("x,n_e,u_e,n_i,u_i,phi\n");
        for (int j = 0; j < g.n; ++j) {
            csv.number(j * g.dx);
            csv.cell(s.electron.n[j]);
            csv.cell(s.electron.u[j]);
            csv.cell(s.ion.n[j]);
            csv.cell(s.ion.u[j]);
            csv.cell(s.phi[j]);
            csv.end_row();
        }
        times.push_back(s.time);
    }
    const BipolarState& last = tr.samples.back();
    last.electron.n.write_checkpoint((out_dir / "final_n_e.bin").string());
    last.electron.u.write_checkpoint((out_dir / "final_u_e.bin").string());
    last.ion.n.write_checkpoint((out_dir / "final_n_i.bin").string());
    last.ion.u.write_checkpoint((out_dir / "final_u_i.bin").string());
    last.phi.write_checkpoint((out_dir / "final_phi.bin").string());

    ordered_json j = make_report("run");
    j["config"] = ordered_json{{"regime", regime_str},
                               {"m_e", p.m_e},
                               {"m_i", p.m_i},
                               {"lambda", lambda},
                               {"grid_n", grid_n},
                               {"length", length},
                               {"t_end", t_end},
                               {"cfl", cfl},
                               {"samples", samples},
                               {"n_amp", n_amp},
                               {"u_amp", u_amp},
                               {"gas", gas_json(laws)}};
    j["results"] = ordered_json{
        {"steps", tr.steps},
        {"dt_min", tr.dt_min},
        {"times", times},
        {"mass_drift_e", std::abs(last.electron.n.mean() - initial.electron.n.mean())},
        {"mass_drift_i", std::abs(last.ion.n.mean() - initial.ion.n.mean())}};
    j["pass"] = true;
    write_report(j, out_dir);
    std::printf("run: %d steps to t = %.6g, %zu samples in %s\n", tr.steps, t_end,
                tr.samples.size(), out_dir.string().c_str());
    return kExitPass;
}

inline int cmd_residuals(const Config& file, const SharedArgs& sh) {
    StudyConfig cfg = study_config_from(file, sh);
    std::vector<double> eps = file.numbers("residuals.eps", cfg.eps_list);
    if (!sh.eps_csv.empty()) eps = parse_eps_csv(sh.eps_csv);
    const double band = file.number("residuals.band", 0.4);

    const ProfileSet set = obtain_profiles(cfg, sh, &cfg);
    const ResidualSweep sw = run_residual_sweep(set, eps, band);

    const std::filesystem::path out_dir(sh.out_dir);
    std::filesystem::create_directories(out_dir);
    write_residuals_csv(sw, (out_dir / "residuals.csv").string());

    ordered_json orders = ordered_json::array();
    for (std::size_t jx = 0; jx < sw.fits.size(); ++jx) {
        orders.push_back(ordered_json{{"order", jx},
                                      {"target", sw.targets[jx]},
                                      {"fit", fit_json(sw.fits[jx])},
                                      {"sup", sw.sup[jx]},
                                      {"sup_h1", sw.sup_h1[jx]},
                                      {"sup_h2", sw.sup_h2[jx]},
                                      {"pass", static_cast<bool>(sw.pass[jx])}});
        std::printf("residuals: order %zu slope %.3f target %.1f +- %.1f [%s]\n", jx,
                    sw.fits[jx].slope, sw.targets[jx], band, sw.pass[jx] ? "pass" : "FAIL");
    }
    ordered_json j = make_report("residuals");
    j["config"] = study_config_json(cfg);
    j["results"] = ordered_json{{"eps", sw.eps}, {"band", band}, {"orders", orders}};
    j["pass"] = sw.all_pass;
    write_report(j, out_dir);
    return sw.all_pass ? kExitPass : kExitCriterionFail;
}

inline int cmd_study(const Config& file, const SharedArgs& sh) {
    StudyConfig cfg = study_config_from(file, sh);
    const ProfileSet set = obtain_profiles(cfg, sh, &cfg);
    const StudyResult res = run_convergence_study(cfg, set);

    const std::filesystem::path out_dir(sh.out_dir);
    std::filesystem::create_directories(out_dir);
    write_rates_csv(res, (out_dir / "rates.csv").string());
    write_errors_by_time_csv(res, (out_dir / "errors_by_time.csv").string());
    write_breakdown_csv(res, (out_dir / "breakdown.csv").string());

    ordered_json points = ordered_json::array();
    for (const EpsOutcome& o : res.outcomes) {
        points.push_back(ordered_json{{"eps", o.eps},
                                      {"status", o.status},
                                      {"error", o.error},
                                      {"error_squared", o.error_squared},
                                      {"energy_cfit", o.energy_cfit},
                                      {"steps", o.steps},
                                      {"dt_min", o.dt_min}});
    }
    ordered_json j = make_report("study");
    j["config"] = study_config_json(res.config);
    j["results"] = ordered_json{{"complete", res.complete},
                                {"target", res.target},
                                {"band", res.band},
                                {"points", points},
                                {"fit_all", fit_json(res.fit_all)},
                                {"fit_used", fit_json(res.fit_used)},
                                {"eps_used", res.eps_used},
                                {"used_fallback", res.used_fallback},
                                {"pass_two_sided", res.pass_two_sided},
                                {"pass_lower", res.pass_lower},
                                {"energy_cfit_max", res.energy_cfit_max},
                                {"energy_ok", res.energy_ok}};
    j["pass"] = res.pass;
    write_report(j, out_dir);
    if (!res.complete) {
        std::printf("study: incomplete, %zu eps evaluated [FAIL]\n", res.eps_used.size());
        return kExitNumericalError;
    }
    std::printf("study: slope %.3f (used %zu of %zu eps) target %.1f band %.1f energy_cfit %.2f [%s]\n",
                res.fit_used.slope, res.eps_used.size(), res.outcomes.size(), res.target,
                res.band, res.energy_cfit_max, res.pass ? "pass" : "FAIL");
    return res.pass ? kExitPass : kExitCriterionFail;
}

inline int cmd_dispersion(const Config& file, const SharedArgs& sh) {
    const int grid_n =
        sh.grid_n > 0 ? sh.grid_n : static_cast<int>(file.integer("dispersion.grid_n", 64));
    const double length = file.number("dispersion.length", 1.0);
    const double lambda = file.number("dispersion.lambda", 1.0);
    const int mode = static_cast<int>(file.integer("dispersion.mode", 1));
    const double period = file.number("dispersion.t_end", 1.0);
    const int samples = static_cast<int>(file.integer("dispersion.samples", 201));
    const double amplitude = file.number("dispersion.amplitude", 1e-6);
    const double tol = file.number("dispersion.tol", 0.01);
    const GasLawPair laws = laws_from(file);

    const std::string regime_str =
        !sh.regime.empty() ? sh.regime : file.str("dispersion.regime", "raw");
    const Regime regime = parse_regime(regime_str);
    ScalingParams p = [&] {
        if (regime == Regime::RawMasses)
            return ScalingParams::raw(file.number("dispersion.m_e", 1.0),
                                      file.number("dispersion.m_i", 1.0), lambda);
        return study_scaling(regime, file.number("dispersion.eps", 0.1), lambda);
    }();

    const Grid g(grid_n, length);
    const DispersionResult r = measure_fast_branch(laws, p, g, mode, period, samples, amplitude);
    const bool pass = r.rel_error <= tol;

    const std::filesystem::path out_dir(sh.out_dir);
    std::filesystem::create_directories(out_dir);
    ordered_json j = make_report("dispersion");
    j["config"] = ordered_json{{"regime", regime_str}, {"m_e", p.m_e},       {"m_i", p.m_i},
                               {"lambda", lambda},     {"grid_n", grid_n},   {"length", length},
                               {"mode", mode},         {"t_end", period},    {"samples", samples},
                               {"amplitude", amplitude}, {"tol", tol},       {"gas", gas_json(laws)}};
    j["results"] = ordered_json{{"wavenumber", r.wavenumber},
                                {"measured", r.measured},
                                {"predicted", r.predicted},
                                {"exact_linear", r.exact_linear},
                                {"rel_error", r.rel_error}};
    j["pass"] = pass;
    write_report(j, out_dir);
    std::printf("dispersion: mode %d measured %.6g predicted %.6g rel_error %.3g [%s]\n", mode,
                r.measured, r.predicted, r.rel_error, pass ? "pass" : "FAIL");
    return pass ? kExitPass : kExitCriterionFail;
}

/// argv without the program name.
inline int eplim_main(const std::vector<std::string>& args) {
    CLI::App app{"asymptotic expansions and convergence studies for one-dimensional "
                 "two-fluid plasma"};
    app.require_subcommand(1);
    SharedArgs sh;

    const auto add_shared = [&](CLI::App* sub, bool with_profiles) {
        sub->add_option("-c,--config", sh.config_path, "TOML config file");
        sub->add_option("-o,--out", sh.out_dir, "output directory (default: out)");
        sub->add_option("--threads", sh.threads,
                        "worker threads (default: EPLIM_THREADS, then hardware)");
        sub->add_option("--grid-n", sh.grid_n, "override grid size");
        sub->add_option("--t-end", sh.t_end, "override final time");
        sub->add_option("--order", sh.order, "override expansion order");
        sub->add_option("--regime", sh.regime, "override regime");
        sub->add_option("--eps", sh.eps_csv, "override eps list, comma separated");
        sub->add_option("--scale", sh.scale, "override planted deviation scale");
        if (with_profiles)
            sub->add_option("--profiles", sh.profiles_dir, "reuse a saved profile set directory");
    };

    CLI::App* profiles = app.add_subcommand("profiles", "build and save an expansion profile set");
    add_shared(profiles, false);
    CLI::App* run = app.add_subcommand("run", "integrate the two-fluid system and save samples");
    add_shared(run, false);
    CLI::App* residuals =
        app.add_subcommand("residuals", "fit expansion remainder decay rates in eps");
    add_shared(residuals, true);
    CLI::App* study =
        app.add_subcommand("study", "run a convergence study against the expansion");
    add_shared(study, true);
    CLI::App* dispersion =
        app.add_subcommand("dispersion", "measure the fast oscillation frequency");
    add_shared(dispersion, false);

    std::vector<std::string> argv_like = args;
    argv_like.insert(argv_like.begin(), "eplim");
    std::vector<const char*> argv;
    argv.reserve(argv_like.size());
    for (const std::string& a : argv_like) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitConfigError;
    }

    try {
        const Config file = sh.config_path.empty() ? Config::parse("", "<defaults>")
                                                   : Config::parse_file(sh.config_path);
        if (profiles->parsed()) return cmd_profiles(file, sh);
        if (run->parsed()) return cmd_run(file, sh);
        if (residuals->parsed()) return cmd_residuals(file, sh);
        if (study->parsed()) return cmd_study(file, sh);
        if (dispersion->parsed()) return cmd_dispersion(file, sh);
        std::fprintf(stderr, "no subcommand selected\n");
        return kExitConfigError;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "invalid parameter: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "failure: %s\n", e.what());
        return kExitNumericalError;
    }
}

}  // namespace cli
}  // namespace eplim
