#pragma once

#include <iosfwd>

#include "prymlab/baker_akhiezer.hpp"
#include "json.hpp"

namespace prymlab {

// Flat key-value run configuration with [sections]; see tools/configs for
// examples. Identical config + seed must reproduce byte-identical reports.
struct RunConfig {
    CurveSpec curve;
    double residual_tol = 1e-4;
    GridSpec grid;
    std::uint64_t seed = 1;
    int verify_seeds = 10;
    bool quick = false;
    bool negative_control = false;
    std::string out_dir = "out";
    std::vector<std::string> stages{"all"};
    int max_threads = 0;  // 0: unlimited; set from PRYMLAB_THREADS
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

using Json = nlohmann::ordered_json;

// Fixed-layout serialization: insertion-ordered keys, numbers with 17
// significant digits, one key per line. This is the byte-level contract for
// the determinism guarantee.
std::string dump_report(const Json& j);

// Minimal structural validator (subset of JSON Schema: type / required /
// properties / items / additionalProperties-as-schema).
bool validate_report(const Json& report, const Json& schema, std::string* err);

// The schema every stage report must satisfy; also checked in at
// schemas/report.schema.json.
const char* report_schema_text();

struct StageOutcome {
    Json report;
    int exit_code = 0;  // 0 pass, 1 verification failure, 3 numerical breakdown
    std::string csv;    // per-grid data (schrodinger stage only)
};

StageOutcome cmd_periods(const RunConfig& cfg);
StageOutcome cmd_verify(const RunConfig& cfg);
StageOutcome cmd_ba(const RunConfig& cfg);
StageOutcome cmd_schrodinger(const RunConfig& cfg);

// Full driver: parses flags, runs the selected stages, writes
// <out>/<stage>.json (+ schrodinger.csv), returns the process exit code
// (0 pass, 1 verification failure, 2 config error, 3 numerical breakdown).
int run_cli(int argc, char** argv);

}  // namespace prymlab
