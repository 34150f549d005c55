// Command-line front end: MI evaluation, shaping optimization, SNR
// thresholds, rate sweeps, Maxwell-Boltzmann fitting, ambiguity checks, and
// reproduction of the bundled reference tables.

#include "macshape/errors.hpp"
#include "macshape/info.hpp"
#include "macshape/json_io.hpp"
#include "macshape/kernels.hpp"
#include "macshape/optimizer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace macshape;
namespace fs = std::filesystem;

// Shared flag values; each subcommand registers the subset it uses.
struct Options {
    std::string constellation;
    std::string dist, dist_b;
    double snr_db = 0.0;
    double rate = 0.0;
    std::string family = "uniform";
    std::string mode = "symmetric";
    int starts = 32;
    std::uint64_t seed = 1;
    double grid_spacing = 0.125;
    double grid_extent = 10.0;
    std::uint64_t mc_samples = 1000000;
    std::string method = "quad";
    int threads = 1;
    std::string out;
    std::string format = "json";
    std::string kernel = "auto";
    std::string save_dist;
    double snr_from_db = 0.0, snr_to_db = 20.0, snr_step_db = 1.0;
    std::string families = "cutset,uniform";
    int table = 1;
    std::string data_dir;
};

void apply_kernel_flag(const std::string& kernel) {
    if (kernel == "auto")
        force_backend(std::nullopt);
    else if (kernel == "scalar")
        force_backend(Backend::scalar);
    else if (kernel == "avx2")
        force_backend(Backend::avx2);
    else
        throw std::invalid_argument("unknown kernel: " + kernel);
}

GridParams grid_of(const Options& o) { return {o.grid_spacing, o.grid_extent}; }

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

void write_text(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out);
    if (!f) throw std::invalid_argument("cannot write to " + out);
    f << text;
}

void emit_json(const json& payload, const std::string& out) {
    write_text(payload.dump(2) + "\n", out);
}

// Resolves --constellation against --dist: a file fixes the constellation,
// the literal "uniform" needs the flag.
Constellation resolve_constellation(const Options& o) {
    if (!o.constellation.empty()) return make_constellation(o.constellation);
    if (!o.dist.empty() && o.dist != "uniform") {
        const InputDistribution d = load_distribution_file(o.dist, 1e-6);
        return make_constellation(d.constellation_id);
    }
    throw std::invalid_argument("--constellation is required here");
}

InputDistribution resolve_dist(const std::string& spec, const Constellation& c) {
    if (spec == "uniform") return uniform_distribution(c);
    InputDistribution d = load_distribution_file(spec, 1e-6);
    if (d.constellation_id != constellation_id(c))
        throw std::invalid_argument("distribution file is for " + d.constellation_id +
                                    ", expected " + constellation_id(c));
    return d;
}

RateFamily parse_family(const std::string& name) {
    if (name == "optimized") return RateFamily::optimized;
    if (name == "uniform") return RateFamily::uniform;
    if (name == "mb") return RateFamily::mb;
    if (name == "cutset") return RateFamily::cutset;
    if (name == "fixed") return RateFamily::fixed;
    throw std::invalid_argument("unknown family: " + name);
}

std::string locate_data_dir(const std::string& flag) {
    if (!flag.empty()) {
        if (fs::is_directory(flag)) return flag;
        throw std::invalid_argument("data directory not found: " + flag);
    }
    std::vector<fs::path> candidates = {"data"};
    std::error_code ec;
    const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
    if (!ec) {
        const fs::path dir = exe.parent_path();
        candidates.push_back(dir / "data");
        candidates.push_back(dir / ".." / "data");
        candidates.push_back(dir / ".." / ".." / "data");
    }
    for (const auto& cand : candidates)
        if (fs::is_directory(cand)) return cand.string();
    throw std::invalid_argument("cannot locate the bundled data directory; pass --data-dir");
}

std::map<std::string, std::string> manifest_flags(const CLI::App* cmd) {
    std::map<std::string, std::string> flags;
    for (const CLI::Option* opt : cmd->get_options()) {
        if (opt->get_name() == "--help") continue;
        std::string value = opt->results().empty() ? opt->get_default_str()
                                                   : opt->results().front();
        flags[opt->get_name()] = value;
    }
    return flags;
}

json wrap(const CLI::App* cmd, const std::string& name, json result) {
    return json{{"manifest", manifest_to_json(make_manifest(name, manifest_flags(cmd)))},
                {"result", std::move(result)}};
}

// The --starts default differs per subcommand while the bound Options field
// is shared by all of them, so the fallback is applied here, not in CLI11.
int starts_or(const CLI::App* cmd, const Options& o, int dflt) {
    return cmd->count("--starts") > 0 ? o.starts : dflt;
}

// ---- subcommand bodies ----

int cmd_eval(const CLI::App* cmd, const Options& o) {
    const Constellation c = resolve_constellation(o);
    const XorClassIndex x = build_xor_classes(c);
    const InputDistribution p = resolve_dist(o.dist, c);
    const InputDistribution q = o.dist_b.empty() ? p : resolve_dist(o.dist_b, c);

    MIResult r;
    if (o.method == "quad") {
        r = evaluate_at_snr(c, x, p.probs, q.probs, o.snr_db, grid_of(o));
    } else if (o.method == "mc") {
        const PairGeometry geo = pair_geometry(c, x, p.probs, q.probs, o.snr_db);
        r = mutual_information_mc(p.probs, q.probs, geo.index, geo.ch, o.mc_samples, o.seed);
        r.scale_a = geo.scale_a;
        r.scale_b = geo.scale_b;
    } else {
        throw std::invalid_argument("unknown method: " + o.method);
    }
    emit_json(wrap(cmd, "eval", mi_result_to_json(r)), o.out);
    return 0;
}

int cmd_optimize(const CLI::App* cmd, const Options& o) {
    ShapingProblem prob;
    prob.constellation_id = o.constellation.empty() ? "pam16" : o.constellation;
    prob.snr_db = o.snr_db;
    if (o.mode == "symmetric")
        prob.mode = ShapingMode::symmetric;
    else if (o.mode == "asymmetric")
        prob.mode = ShapingMode::asymmetric;
    else
        throw std::invalid_argument("unknown mode: " + o.mode);
    prob.starts = starts_or(cmd, o, 32);
    prob.seed = o.seed;
    prob.grid = grid_of(o);
    prob.threads = o.threads;
    const ShapingResult r = optimize(prob);
    emit_json(wrap(cmd, "optimize", shaping_result_to_json(r)), o.out);
    if (!o.save_dist.empty()) emit_json(dist_to_json(r.best_p), o.save_dist);
    return 0;
}

int cmd_threshold(const CLI::App* cmd, const Options& o) {
    const Constellation c = resolve_constellation(o);
    const XorClassIndex x = build_xor_classes(c);
    const RateFamily family = parse_family(o.family);
    FamilyOptions opts;
    opts.starts = starts_or(cmd, o, 8);
    opts.seed = o.seed;
    opts.grid = grid_of(o);
    opts.threads = o.threads;
    if (family == RateFamily::fixed) {
        opts.fixed_p = resolve_dist(o.dist, c).probs;
        if (!o.dist_b.empty()) opts.fixed_q = resolve_dist(o.dist_b, c).probs;
    }
    const double db = snr_threshold(c, x, family, o.rate, opts);
    emit_json(wrap(cmd, "threshold",
                   json{{"family", family_name(family)},
                        {"target_rate_bits", o.rate},
                        {"threshold_snr_db", db}}),
              o.out);
    return 0;
}

int cmd_sweep(const CLI::App* cmd, const Options& o) {
    const Constellation c = resolve_constellation(o);
    const XorClassIndex x = build_xor_classes(c);
    std::vector<RateFamily> fams;
    std::string token;
    for (char ch : o.families + ",") {
        if (ch == ',') {
            if (!token.empty()) fams.push_back(parse_family(token));
            token.clear();
        } else {
            token += ch;
        }
    }
    if (fams.empty()) throw std::invalid_argument("no families requested");
    FamilyOptions opts;
    opts.starts = starts_or(cmd, o, 8);
    opts.seed = o.seed;
    opts.grid = grid_of(o);
    opts.threads = o.threads;
    if (!o.dist.empty()) {
        opts.fixed_p = resolve_dist(o.dist, c).probs;
        if (!o.dist_b.empty()) opts.fixed_q = resolve_dist(o.dist_b, c).probs;
    }
    const auto rows = sweep(c, x, o.snr_from_db, o.snr_to_db, o.snr_step_db, fams, opts);

    if (o.format == "csv") {
        std::string text = "snr_db,family,rate_bits\r\n";
        for (const auto& row : rows)
            text += fmt(row.snr_db, 4) + "," + family_name(row.family) + "," +
                    fmt(row.rate_bits, 9) + "\r\n";
        write_text(text, o.out);
    } else if (o.format == "json") {
        json arr = json::array();
        for (const auto& row : rows)
            arr.push_back({{"snr_db", row.snr_db},
                           {"family", family_name(row.family)},
                           {"rate_bits", row.rate_bits}});
        emit_json(wrap(cmd, "sweep", std::move(arr)), o.out);
    } else {
        throw std::invalid_argument("unknown format: " + o.format);
    }
    return 0;
}

int cmd_mbfit(const CLI::App* cmd, const Options& o) {
    const Constellation c = resolve_constellation(o);
    const XorClassIndex x = build_xor_classes(c);
    const MBFit fit = mb_lambda_search(c, x, o.rate, grid_of(o));
    emit_json(wrap(cmd, "mbfit",
                   json{{"target_rate_bits", o.rate},
                        {"lambda", fit.lambda},
                        {"threshold_snr_db", fit.threshold_snr_db}}),
              o.out);
    return 0;
}

int cmd_ambiguity(const CLI::App* cmd, const Options& o) {
    const Constellation c = resolve_constellation(o);
    XorClassIndex x = build_xor_classes(c);
    const bool free = check_ambiguity_free(x);
    json result{{"constellation", constellation_id(c)}, {"ambiguity_free", free}};
    if (!free) {
        const auto w = find_ambiguity(x);
        result["witness"] = {{"x_ab", {w->x_ab.real(), w->x_ab.imag()}},
                             {"class_a", w->class_a},
                             {"class_b", w->class_b}};
    }
    emit_json(wrap(cmd, "ambiguity", std::move(result)), o.out);
    return 0;
}

int cmd_reproduce(const CLI::App* cmd, const Options& o) {
    const std::string dir = locate_data_dir(o.data_dir);
    const std::string path =
        dir + (o.table == 1 ? "/table1_pam16.json" : "/table2_qam16.json");
    if (!fs::exists(path)) throw std::invalid_argument("missing fixture: " + path);
    const TableFixture t = load_table_fixture(path);
    const Constellation c = make_constellation(t.constellation);
    const XorClassIndex x = build_xor_classes(c);
    const GridParams grid = grid_of(o);

    bool all_ok = true;
    std::string text = "reference table " + std::to_string(o.table) + " (" + t.constellation +
                       ")\n";
    json checks = json::array();
    const auto record = [&](double rate, const std::string& what, double got, double want,
                            double tol) {
        const bool ok = std::abs(got - want) <= tol;
        all_ok = all_ok && ok;
        text += "rate " + fmt(rate, 4) + "  " + what + " = " + fmt(got, 4) + "  (want " +
                fmt(want, 4) + " +-" + fmt(tol, 4) + ")  " + (ok ? "ok" : "FAIL") + "\n";
        checks.push_back({{"rate", rate},
                          {"check", what},
                          {"got", got},
                          {"want", want},
                          {"tol", tol},
                          {"ok", ok}});
    };

    for (const TableColumn& col : t.columns) {
        if (!col.probs.empty() && col.snr_opt_db)
            record(col.rate, "shaped eval @" + fmt(*col.snr_opt_db, 1) + "dB",
                   evaluate_at_snr(c, x, col.probs, col.probs, *col.snr_opt_db, grid).mi_bits,
                   col.rate, 0.03);
        if (col.snr_cs_db)
            record(col.rate, "cutset threshold dB", cutset_threshold_db(c, col.rate),
                   *col.snr_cs_db, 0.01);
        if (col.snr_uf_db) {
            const InputDistribution u = uniform_distribution(c);
            double got;
            try {
                got = fixed_dist_threshold_db(c, x, u.probs, u.probs, col.rate, grid);
            } catch (const unreachable_rate_error&) {
                got = std::numeric_limits<double>::infinity();
            }
            record(col.rate, "uniform threshold dB", got, *col.snr_uf_db, 0.2);
        }
        if (col.snr_mb_db) {
            double got;
            double lambda = 0.0;
            try {
                const MBFit fit = mb_lambda_search(c, x, col.rate, grid);
                got = fit.threshold_snr_db;
                lambda = fit.lambda;
            } catch (const unreachable_rate_error&) {
                got = std::numeric_limits<double>::infinity();
            }
            record(col.rate, "mb threshold dB", got, *col.snr_mb_db, o.table == 1 ? 0.15 : 0.2);
            if (col.mb_lambda)
                record(col.rate, "mb lambda", lambda, *col.mb_lambda, 0.2 * *col.mb_lambda);
        }
        if (o.table == 2 && col.snr_opt_db) {
            ShapingProblem prob;
            prob.constellation_id = t.constellation;
            prob.snr_db = *col.snr_opt_db;
            prob.starts = starts_or(cmd, o, 8);
            prob.seed = o.seed;
            prob.grid = grid;
            prob.threads = o.threads;
            const ShapingResult r = optimize(prob);
            // one-sided check: optimizer must reach the stated rate (overshoot is fine)
            const bool ok = r.mi_bits >= col.rate - 0.05;
            all_ok = all_ok && ok;
            text += "rate " + fmt(col.rate, 4) + "  optimize @" + fmt(*col.snr_opt_db, 1) +
                    "dB = " + fmt(r.mi_bits, 4) + "  (want >= " + fmt(col.rate - 0.05, 4) +
                    ")  " + (ok ? "ok" : "FAIL") + "\n";
            checks.push_back({{"rate", col.rate},
                              {"check", "optimize"},
                              {"got", r.mi_bits},
                              {"want_min", col.rate - 0.05},
                              {"ok", ok}});
        }
    }

    text += all_ok ? "all checks passed\n" : "SOME CHECKS FAILED\n";
    std::cout << text;
    if (!o.out.empty())
        emit_json(wrap(cmd, "reproduce", json{{"checks", checks}, {"all_ok", all_ok}}), o.out);
    return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"XOR-message mutual information and input shaping for the two-user Gaussian "
                 "multiple-access channel"};
    app.require_subcommand(1);
    Options o;

    const auto add_grid = [&](CLI::App* cmd) {
        cmd->add_option("--grid-spacing", o.grid_spacing,
                        "quadrature spacing in noise deviations")
            ->default_val(0.125);
        cmd->add_option("--grid-extent", o.grid_extent,
                        "quadrature reach around each point, in noise deviations")
            ->default_val(10.0);
        cmd->add_option("--kernel", o.kernel, "compute backend: auto|scalar|avx2")
            ->default_val("auto");
    };
    const auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", o.out, "write output to this file instead of stdout");
    };

    CLI::App* eval = app.add_subcommand("eval", "mutual information of given distribution(s)");
    eval->add_option("--constellation", o.constellation, "constellation id, e.g. pam16");
    eval->add_option("--dist", o.dist, "distribution JSON file, or 'uniform'")->required();
    eval->add_option("--dist-b", o.dist_b, "second user's distribution (defaults to --dist)");
    eval->add_option("--snr-db", o.snr_db, "operating SNR in dB")->required();
    eval->add_option("--method", o.method, "quad|mc")->default_val("quad");
    eval->add_option("--mc-samples", o.mc_samples, "Monte Carlo sample count")
        ->default_val(1000000);
    eval->add_option("--seed", o.seed, "Monte Carlo seed")->default_val(1);
    add_grid(eval);
    add_out(eval);

    CLI::App* opt = app.add_subcommand("optimize", "search a good input distribution");
    // default_str only documents the fallback; assigning it here would leak
    // into subcommands where an absent --constellation means "not given".
    opt->add_option("--constellation", o.constellation)->default_str("pam16");
    opt->add_option("--snr-db", o.snr_db)->required();
    opt->add_option("--mode", o.mode, "symmetric|asymmetric (asymmetric: pam pairs only)")
        ->default_val("symmetric");
    opt->add_option("--starts", o.starts, "number of random starts")->default_str("32");
    opt->add_option("--seed", o.seed)->default_val(1);
    opt->add_option("--threads", o.threads, "parallel starts")->default_val(1);
    opt->add_option("--save-dist", o.save_dist, "also save the best distribution alone");
    add_grid(opt);
    add_out(opt);

    CLI::App* thr = app.add_subcommand("threshold", "smallest SNR reaching a target rate");
    thr->add_option("--constellation", o.constellation);
    thr->add_option("--rate", o.rate, "target rate in bits")->required();
    thr->add_option("--family", o.family, "optimized|uniform|mb|cutset|fixed")->required();
    thr->add_option("--dist", o.dist, "distribution file for --family fixed");
    thr->add_option("--dist-b", o.dist_b);
    thr->add_option("--starts", o.starts)->default_str("8");
    thr->add_option("--seed", o.seed)->default_val(1);
    thr->add_option("--threads", o.threads)->default_val(1);
    add_grid(thr);
    add_out(thr);

    CLI::App* swp = app.add_subcommand("sweep", "rate vs SNR per family (CSV)");
    swp->add_option("--constellation", o.constellation);
    swp->add_option("--snr-from-db", o.snr_from_db)->required();
    swp->add_option("--snr-to-db", o.snr_to_db)->required();
    swp->add_option("--snr-step-db", o.snr_step_db)->default_val(1.0);
    swp->add_option("--families", o.families, "comma list of optimized,uniform,mb,cutset,fixed")
        ->default_val("cutset,uniform");
    swp->add_option("--dist", o.dist, "distribution file for the fixed family");
    swp->add_option("--dist-b", o.dist_b);
    swp->add_option("--starts", o.starts)->default_str("8");
    swp->add_option("--seed", o.seed)->default_val(1);
    swp->add_option("--threads", o.threads)->default_val(1);
    swp->add_option("--format", o.format, "csv|json")->default_val("csv");
    add_grid(swp);
    add_out(swp);

    CLI::App* mbf = app.add_subcommand("mbfit", "best Maxwell-Boltzmann parameter for a rate");
    mbf->add_option("--constellation", o.constellation)->required();
    mbf->add_option("--rate", o.rate)->required();
    add_grid(mbf);
    add_out(mbf);

    CLI::App* amb = app.add_subcommand("ambiguity", "is the constellation ambiguity-free?");
    amb->add_option("--constellation", o.constellation)->required();
    add_out(amb);

    CLI::App* rep = app.add_subcommand("reproduce", "check the bundled reference tables");
    rep->add_option("--table", o.table, "1 (pam16) or 2 (qam16)")
        ->check(CLI::IsMember({1, 2}))
        ->default_val(1);
    rep->add_option("--data-dir", o.data_dir, "directory with the bundled tables");
    rep->add_option("--starts", o.starts)->default_str("8");
    rep->add_option("--seed", o.seed)->default_val(1);
    rep->add_option("--threads", o.threads)->default_val(1);
    add_grid(rep);
    add_out(rep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        apply_kernel_flag(o.kernel);
        if (eval->parsed()) return cmd_eval(eval, o);
        if (opt->parsed()) return cmd_optimize(opt, o);
        if (thr->parsed()) return cmd_threshold(thr, o);
        if (swp->parsed()) return cmd_sweep(swp, o);
        if (mbf->parsed()) return cmd_mbfit(mbf, o);
        if (amb->parsed()) return cmd_ambiguity(amb, o);
        if (rep->parsed()) return cmd_reproduce(rep, o);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
