#include "macshape/json_io.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace macshape {

RunManifest make_manifest(const std::string& command,
                          const std::map<std::string, std::string>& flags) {
    RunManifest m;
    m.command = command;
    m.flags = flags;
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    m.wall_clock_utc = buf;
    return m;
}

json manifest_to_json(const RunManifest& m) {
    return json{{"command", m.command},
                {"flags", m.flags},
                {"tool_version", m.tool_version},
                {"wall_clock_utc", m.wall_clock_utc}};
}

json constellation_to_json(const Constellation& c) {
    json points = json::array();
    for (const auto& pt : c.points) points.push_back({pt.real(), pt.imag()});
    return json{{"family", c.family == Family::pam_orthogonal_pair ? "pam-orthogonal-pair" : "qam"},
                {"id", constellation_id(c)},
                {"m", c.m},
                {"signal_dimensions", c.signal_dimensions},
                {"points", std::move(points)},
                {"labels", c.labels}};
}

json dist_to_json(const InputDistribution& d) {
    return json{{"constellation", d.constellation_id}, {"probs", d.probs}};
}

InputDistribution dist_from_json(const json& j, double max_drift) {
    InputDistribution d;
    d.constellation_id = j.at("constellation").get<std::string>();
    d.probs = j.at("probs").get<std::vector<double>>();
    const Constellation c = make_constellation(d.constellation_id);
    if (d.probs.size() != c.size())
        throw std::invalid_argument("distribution has " + std::to_string(d.probs.size()) +
                                    " entries but " + d.constellation_id + " has " +
                                    std::to_string(c.size()));
    renormalize_probs(d.probs, max_drift);
    return d;
}

InputDistribution load_distribution_file(const std::string& path, double max_drift) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open distribution file: " + path);
    json j;
    in >> j;
    return dist_from_json(j, max_drift);
}

json mi_result_to_json(const MIResult& r) {
    json j{{"mi_bits", r.mi_bits},
           {"h_wc_bits", r.h_wc_bits},
           {"class_priors", r.class_priors},
           {"method", r.method == MIMethod::quadrature ? "quadrature" : "monte-carlo"},
           {"sigma2", r.sigma2}};
    if (r.scale_a != 1.0 || r.scale_b != 1.0) j["user_scales"] = {r.scale_a, r.scale_b};
    if (r.method == MIMethod::quadrature) {
        j["grid"] = {{"spacing_in_sigma", r.grid.spacing_in_sigma},
                     {"extent_in_sigma", r.grid.extent_in_sigma}};
    } else {
        j["mc"] = {{"samples", r.mc_samples}, {"seed", r.mc_seed}};
        if (r.mc_stderr) j["mc_stderr"] = *r.mc_stderr;
    }
    return j;
}

json shaping_result_to_json(const ShapingResult& r) {
    json starts = json::array();
    for (const auto& s : r.start_log) {
        json e{{"start_index", s.start_index},
               {"objective_bits", s.failed ? json() : json(s.objective)},
               {"iterations", s.iterations},
               {"converged", s.converged},
               {"failed", s.failed},
               {"init_p", s.init_p}};
        if (!s.init_q.empty()) e["init_q"] = s.init_q;
        starts.push_back(std::move(e));
    }
    return json{{"best_p", dist_to_json(r.best_p)},
                {"best_q", dist_to_json(r.best_q)},
                {"mi_bits", r.mi_bits},
                {"best_start", r.best_start},
                {"starts", std::move(starts)},
                {"provenance",
                 {{"constellation", r.constellation_id},
                  {"snr_db", r.snr_db},
                  {"mode", r.mode == ShapingMode::symmetric ? "symmetric" : "asymmetric"},
                  {"seed", r.seed},
                  {"grad_tol", r.tol.grad_tol},
                  {"obj_tol", r.tol.obj_tol},
                  {"max_iters", r.tol.max_iters},
                  {"grid",
                   {{"spacing_in_sigma", r.grid.spacing_in_sigma},
                    {"extent_in_sigma", r.grid.extent_in_sigma}}}}}};
}

namespace {

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open fixture file: " + path);
    json j;
    in >> j;
    return j;
}

std::optional<double> opt_field(const json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return j.at(key).get<double>();
}

} // namespace

TableFixture load_table_fixture(const std::string& path) {
    const json j = load_json_file(path);
    TableFixture t;
    t.constellation = j.at("constellation").get<std::string>();
    const Constellation c = make_constellation(t.constellation);
    for (const auto& col : j.at("columns")) {
        TableColumn tc;
        tc.rate = col.at("rate").get<double>();
        tc.snr_opt_db = opt_field(col, "snr_opt_db");
        tc.snr_cs_db = opt_field(col, "snr_cs_db");
        tc.snr_mb_db = opt_field(col, "snr_mb_db");
        tc.snr_uf_db = opt_field(col, "snr_uf_db");
        tc.mb_lambda = opt_field(col, "mb_lambda");
        if (col.contains("probs")) {
            tc.probs = col.at("probs").get<std::vector<double>>();
            if (tc.probs.size() != c.size())
                throw std::invalid_argument("fixture probability vector has wrong length");
            // Bundled tables are transcribed digits; small drift is repaired,
            // large drift means a transcription error.
            renormalize_probs(tc.probs, 1e-3);
        }
        t.columns.push_back(std::move(tc));
    }
    return t;
}

AsymPairFixture load_asym_pair_fixture(const std::string& path) {
    const json j = load_json_file(path);
    AsymPairFixture f;
    f.constellation = j.at("constellation").get<std::string>();
    f.snr_db = j.at("snr_db").get<double>();
    f.rate = j.at("rate").get<double>();
    f.p = j.at("p").get<std::vector<double>>();
    f.q = j.at("q").get<std::vector<double>>();
    const Constellation c = make_constellation(f.constellation);
    if (f.p.size() != c.size() || f.q.size() != c.size())
        throw std::invalid_argument("fixture pair has wrong length");
    renormalize_probs(f.p, 1e-3);
    renormalize_probs(f.q, 1e-3);
    return f;
}

} // namespace macshape
