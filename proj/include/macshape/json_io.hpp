#pragma once

#include "macshape/constellation.hpp"
#include "macshape/info.hpp"
#include "macshape/optimizer.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace macshape {

using nlohmann::json;

#ifndef MACSHAPE_VERSION
#define MACSHAPE_VERSION "dev"
#endif

// Everything needed to rerun a command: the payload of any JSON artifact is a
// pure function of this manifest (the timestamp is informational only).
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> flags; // resolved flag values as text
    std::string tool_version = MACSHAPE_VERSION;
    std::string wall_clock_utc;
};

RunManifest make_manifest(const std::string& command,
                          const std::map<std::string, std::string>& flags);

json manifest_to_json(const RunManifest& m);

json constellation_to_json(const Constellation& c);

json dist_to_json(const InputDistribution& d);
// max_drift: user-supplied files get 1e-6, bundled reference tables 1e-3.
InputDistribution dist_from_json(const json& j, double max_drift);
InputDistribution load_distribution_file(const std::string& path, double max_drift);

json mi_result_to_json(const MIResult& r);
json shaping_result_to_json(const ShapingResult& r);

// Reference threshold tables bundled under data/: per target rate, the SNR
// thresholds of each family and (for the PAM table) the published shaped
// probability vector achieving it.
struct TableColumn {
    double rate = 0.0;
    std::optional<double> snr_opt_db;
    std::optional<double> snr_cs_db;
    std::optional<double> snr_mb_db;
    std::optional<double> snr_uf_db;
    std::optional<double> mb_lambda;
    std::vector<double> probs; // empty when the table prints no vector
};

struct TableFixture {
    std::string constellation;
    std::vector<TableColumn> columns;
};

TableFixture load_table_fixture(const std::string& path);

// The two-user pair with distinct shaped distributions and its reported
// operating point.
struct AsymPairFixture {
    std::string constellation;
    double snr_db = 0.0;
    double rate = 0.0;
    std::vector<double> p, q;
};

AsymPairFixture load_asym_pair_fixture(const std::string& path);

} // namespace macshape
