#include "nustab/runner.hpp"

#include <algorithm>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nustab/conditions.hpp"
#include "nustab/csv.hpp"
#include "nustab/diophantine.hpp"
#include "nustab/errors.hpp"
#include "nustab/grids.hpp"
#include "nustab/recipes.hpp"
#include "nustab/resolvent.hpp"
#include "nustab/rng.hpp"
#include "nustab/semigroup.hpp"

namespace nustab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& base) {
    fs::create_directories(cfg.out_dir);
    return (fs::path(cfg.out_dir) / base).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << text << '\n';
}

// Debug dump of the assembled damped generator, if requested.
void maybe_dump(const ExperimentConfig& cfg, const DampedGenerator& dg) {
    if (!cfg.dump_generator) return;
    const char* ext = cfg.dump_binary ? "generator.bin" : "generator.txt";
    dump_matrix(dg.matrix, out_path(cfg, ext), cfg.dump_binary);
}

std::vector<double> make_s_grid(const ExperimentConfig& cfg,
                                const ModalSystem& ms) {
    if (cfg.s_grid && cfg.s_grid->mode == SGridSpec::Mode::linear)
        return linear_grid(cfg.s_grid->start, cfg.s_grid->stop,
                           cfg.s_grid->points);
    return default_scan_grid(ms);
}

std::vector<double> make_t_grid(const ExperimentConfig& cfg) {
    const TGridSpec& g = *cfg.t_grid;
    return g.log_spacing ? log_grid(g.start, g.stop, g.points)
                         : linear_grid(g.start, g.stop, g.points);
}

RunOutcome run_modes(const ExperimentConfig& cfg) {
    ModalSystem ms = build_modal_system(*cfg.system);
    std::vector<CsvRow> rows;
    rows.reserve(ms.modes.size());
    for (const auto& m : ms.modes)
        rows.push_back({static_cast<long long>(m.index), m.frequency,
                        m.coupling});
    const std::string path = out_path(cfg, "modes.csv");
    write_csv(path, "n,lambda,coupling", rows);
    RunOutcome out;
    out.summary = fmt("modes: %d modes (%s, gap %.6g) -> %s", ms.size(),
                      to_string(ms.kind).c_str(), ms.spectral_gap,
                      path.c_str());
    return out;
}

RunOutcome run_scan(const ExperimentConfig& cfg) {
    ModalSystem ms = build_modal_system(*cfg.system);
    DampedGenerator dg = assemble_damped(ms);
    maybe_dump(cfg, dg);
    const std::vector<double> grid = make_s_grid(cfg, ms);
    const ResolventMethod method =
        cfg.scan_force_dense ? ResolventMethod::dense : fast_method_for(dg);
    ResolventScan sc = scan(dg, grid, method);

    std::vector<CsvRow> rows;
    rows.reserve(sc.size());
    const std::string mname = to_string(sc.method);
    for (std::size_t i = 0; i < sc.size(); ++i)
        rows.push_back({sc.s[i], sc.norm[i], mname});
    write_csv(out_path(cfg, "scan.csv"), "s,norm,method", rows);

    std::size_t imax = 0;
    for (std::size_t i = 1; i < sc.size(); ++i)
        if (sc.norm[i] > sc.norm[imax]) imax = i;

    RunOutcome out;
    std::string bounds_part = "bounds: skipped";
    if (cfg.scan_verify_bounds) {
        BoundCheckReport rep = verify_resolvent_bounds(dg, grid, method);
        bounds_part = fmt("bounds: %s (bstar %.3e at s=%.6g, bstarb %.3e)",
                          rep.pass ? "pass" : "FAIL", rep.worst_bstar_ratio,
                          rep.worst_bstar_s, rep.worst_bstarb);
        if (!rep.pass) out.exit_code = 3;
    }
    out.summary =
        fmt("scan: %zu points, method %s, max norm %.6g at s=%.6g; %s",
            sc.size(), mname.c_str(), sc.norm[imax], sc.s[imax],
            bounds_part.c_str());
    return out;
}

RunOutcome run_peaks(const ExperimentConfig& cfg) {
    ModalSystem ms = build_modal_system(*cfg.system);
    DampedGenerator dg = assemble_damped(ms);
    maybe_dump(cfg, dg);
    const ResolventMethod method =
        cfg.peaks_force_dense ? ResolventMethod::dense : fast_method_for(dg);
    PeakSeries ps = peak_series(dg, ms, cfg.peaks_n_lo, cfg.peaks_n_hi, method);

    std::vector<CsvRow> rows;
    rows.reserve(ps.peaks.size());
    for (const auto& p : ps.peaks)
        rows.push_back({static_cast<long long>(p.n), p.s, p.peak_norm});
    write_csv(out_path(cfg, "peaks.csv"), "n,s,peak_norm", rows);

    SlopeFit fit = fit_growth_exponent(ps, cfg.peaks_n_lo, cfg.peaks_n_hi);
    RunOutcome out;
    out.summary = fmt(
        "peaks: growth exponent %.4f over n in [%d,%d] (%d peaks, max log "
        "residual %.3g)",
        fit.exponent, cfg.peaks_n_lo, cfg.peaks_n_hi, fit.points,
        fit.max_residual);
    return out;
}

RunOutcome run_decay(const ExperimentConfig& cfg) {
    ModalSystem ms = build_modal_system(*cfg.system);
    DampedGenerator dg = assemble_damped(ms);
    maybe_dump(cfg, dg);
    DecayTrace tr = decay_trace(dg, make_t_grid(cfg), cfg.rate);

    std::vector<CsvRow> rows;
    rows.reserve(tr.t.size());
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        CsvRow row{tr.t[i], tr.opnorm[i]};
        if (tr.predicted.empty())
            row.push_back(CsvEmpty{});
        else
            row.push_back(tr.predicted[i]);
        rows.push_back(std::move(row));
    }
    write_csv(out_path(cfg, "trace.csv"), "t,opnorm,predicted", rows);

    RunOutcome out;
    std::string fit_part = "no fit window";
    if (cfg.fit) {
        SlopeFit fit = fit_decay_exponent(tr, cfg.fit->t_lo, cfg.fit->t_hi,
                                          cfg.fit->transient_cutoff);
        fit_part = fmt("decay exponent %.4f over t in [%g,%g] (%d points)",
                       fit.exponent, cfg.fit->t_lo, cfg.fit->t_hi, fit.points);
    }
    out.summary = fmt("decay: %zu times, horizon %.6g%s, floor %.3g; %s",
                      tr.t.size(), tr.horizon,
                      tr.horizon_warning ? " (grid exceeds horizon)" : "",
                      tr.floor_estimate, fit_part.c_str());
    return out;
}

RunOutcome run_conditions(const ExperimentConfig& cfg) {
    ModalSystem ms = build_modal_system(*cfg.system);
    TruncatedGenerator gen = assemble_generator(ms);
    DampingMatrix damping = assemble_damping(ms);
    DampedGenerator dg = assemble_damped(gen, damping);
    maybe_dump(cfg, dg);

    WavepacketParams wp = wavepacket_params(ms);

    ResolventScan sc = scan(dg, default_scan_grid(ms), fast_method_for(dg));
    auto [m_large, m_small] = hautus_pair_from_scan(sc);
    std::vector<double> s_sub;
    const std::size_t stride = std::max<std::size_t>(1, sc.size() / 48);
    for (std::size_t i = 0; i < sc.size(); i += stride) s_sub.push_back(sc.s[i]);
    HautusReport hr =
        hautus_check(gen, damping, m_large, m_small, s_sub,
                     hautus_sample_set(dg.dim(), cfg.seed, cfg.cond_n_random));

    ObservabilityReport obs = nonuniform_obs_check(
        ms, cfg.cond_beta, cfg.cond_tau,
        obs_sample_set(ms, cfg.seed, cfg.cond_n_random));

    CounterRng rng(cfg.seed, 0x5a5a5a5a);
    SandwichReport sw = damped_observability_sandwich(
        ms, dg, rng.unit_vector_complex(dg.dim()), cfg.cond_tau);

    json doc;
    doc["wavepackets"] = json::parse(to_json(wp));
    doc["hautus"] = json::parse(to_json(hr));
    doc["observability"] = json::parse(to_json(obs));
    doc["sandwich"] = json::parse(to_json(sw));
    const std::string path = out_path(cfg, "conditions.json");
    write_text(path, doc.dump(2));

    RunOutcome out;
    const bool all_pass = hr.pass && obs.pass && sw.damped_le_undamped;
    if (!all_pass) out.exit_code = 3;
    out.summary = fmt(
        "conditions: hautus worst ratio %.6g (%s); obs c_tau %.6g at beta=%g "
        "tau=%g (%s); sandwich rel err %.3e (%s); %zu wavepacket windows -> %s",
        hr.worst_ratio, hr.pass ? "pass" : "FAIL", obs.c_tau, cfg.cond_beta,
        cfg.cond_tau, obs.pass ? "pass" : "FAIL", sw.balance_rel_err,
        sw.damped_le_undamped ? "pass" : "FAIL", wp.s.size(), path.c_str());
    return out;
}

RunOutcome run_optimality(const ExperimentConfig& cfg) {
    ModalSystem ms = build_modal_system(*cfg.system);
    DampedGenerator dg = assemble_damped(ms);
    maybe_dump(cfg, dg);
    DecayTrace tr = decay_trace(dg, make_t_grid(cfg), cfg.rate);

    std::vector<double> t, v;
    const double lo = cfg.fit ? cfg.fit->t_lo : tr.t.front();
    const double hi = cfg.fit ? cfg.fit->t_hi : tr.t.back();
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        if (tr.t[i] < lo || tr.t[i] > hi) continue;
        t.push_back(tr.t[i]);
        v.push_back(tr.opnorm[i]);
    }
    OptimalityProxy proxy = optimality_limsup(t, v, *cfg.rate);

    std::vector<CsvRow> rows;
    rows.reserve(proxy.t.size());
    for (std::size_t i = 0; i < proxy.t.size(); ++i)
        rows.push_back({proxy.t[i], proxy.value[i]});
    write_csv(out_path(cfg, "optimality.csv"), "t,value", rows);

    RunOutcome out;
    out.summary = fmt(
        "optimality: proxy spread %.4f over t in [%.6g,%.6g] (max %.6g, min "
        "%.6g); horizon %.6g",
        proxy.spread, proxy.window_start, t.back(), proxy.max_value,
        proxy.min_value, tr.horizon);
    return out;
}

RunOutcome run_diophantine(const ExperimentConfig& cfg) {
    Xi0 xi = parse_xi0(cfg.dio_xi0);
    ConstantTypeReport rep =
        constant_type_check(xi, cfg.dio_n_max, cfg.dio_depth);
    ContinuedFraction cf = cf_prefix(xi, cfg.dio_depth);

    json doc;
    doc["xi0"] = cfg.dio_xi0;
    doc["continued_fraction"] = json::parse(to_json(cf));
    doc["report"] = json::parse(to_json(rep));
    doc["convergents"] = json::array();
    for (const auto& c : convergents(cf)) {
        json jc;
        jc["p"] = c.p.str();
        jc["q"] = c.q.str();
        doc["convergents"].push_back(jc);
    }
    if (rep.stats.c_est > 0.0) {
        RateFunction m = implied_pointwise_rate(rep.stats);
        doc["implied_rate"] = {{"form", "power"},
                               {"c", m.param_c()},
                               {"a", m.param_a()}};
        doc["sine_bounds"] = json::array();
        for (long long n : {1LL, 2LL, 5LL, 10LL, 100LL}) {
            if (n > rep.stats.n_max) continue;
            json jb;
            jb["n"] = n;
            jb["constant_type"] = sine_coupling_lower_bound(rep.stats, n);
            if (n >= 2) jb["log_branch"] = log_branch_bound(n);
            doc["sine_bounds"].push_back(jb);
        }
    }
    const std::string path = out_path(cfg, "diophantine.json");
    write_text(path, doc.dump(2));

    RunOutcome out;
    out.summary = fmt(
        "diophantine: xi0=%s, c_est %.6g (tail argmin n=%lld), full min %.6g "
        "at n=%lld, max quotient %lld to depth %d, %s -> %s",
        cfg.dio_xi0.c_str(), rep.stats.c_est, rep.stats.argmin,
        rep.stats.c_min_full, rep.stats.argmin_full, rep.max_quotient,
        rep.quotient_depth,
        rep.rational ? "rational"
                     : (rep.bounded_quotients ? "bounded quotients"
                                              : "unbounded quotients"),
        path.c_str());
    return out;
}

RunOutcome run_reproduce(const ExperimentConfig& cfg) {
    RunOutcome out;
    if (cfg.list_recipes) {
        std::string lines;
        for (const auto& r : recipe_catalogue()) {
            lines += r.name;
            lines += ": ";
            lines += r.summary;
            lines += '\n';
        }
        lines += fmt("%zu recipes", recipe_catalogue().size());
        out.summary = lines;
        return out;
    }
    RecipeResult rr = run_recipe(cfg.recipe, cfg.out_dir, cfg.seed);
    write_text(out_path(cfg, cfg.recipe + "-report.json"), to_json(rr));
    std::string checks;
    for (const auto& c : rr.checks)
        checks += fmt("; %s %.4f in [%g,%g] %s", c.name.c_str(), c.measured,
                      c.lo, c.hi, c.pass ? "ok" : "FAIL");
    out.summary = fmt("reproduce %s: %s%s", rr.recipe.c_str(),
                      rr.pass ? "pass" : "FAIL", checks.c_str());
    if (!rr.pass) out.exit_code = 3;
    return out;
}

} // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.task) {
    case Task::modes: return run_modes(cfg);
    case Task::resolvent_scan: return run_scan(cfg);
    case Task::peaks: return run_peaks(cfg);
    case Task::decay_sim: return run_decay(cfg);
    case Task::conditions: return run_conditions(cfg);
    case Task::optimality: return run_optimality(cfg);
    case Task::diophantine: return run_diophantine(cfg);
    case Task::reproduce: return run_reproduce(cfg);
    }
    throw ConfigError("run_experiment: unhandled task");
}

} // namespace nustab
