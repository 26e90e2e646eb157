#pragma once
// Experiment configuration and result serialization.
//
// Configs are JSON. Parsing is fail-closed: unknown keys anywhere are
// rejected, and all missing required keys are reported in one message.
// emit_config(parse_config(text)) round-trips.
//
// Result rows go to a schema-versioned CSV with the fixed column set
// below; append_csv() only ever appends rows, writing the header when the
// file is new, and parse_csv() rejects mismatched schema numbers.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rclmc/kernels.hpp"
#include "rclmc/potentials.hpp"

namespace rclmc {

struct TargetSpec {
    std::string kind = "gaussian";  // gaussian | mixture | glm_gaussian | glm_cosine
    std::size_t d = 1;
    double center = 0.0;            // gaussian: broadcast center
    double offset = 2.0;            // mixture: mode location along (1,..,1)
    std::size_t count = 0;          // glm: number of data pairs
    std::uint64_t dataset_seed = 0; // glm: synthetic-data seed
    double x_true = 1.0;            // glm: broadcast ground truth
};

inline std::unique_ptr<Potential> make_potential(const TargetSpec& t) {
    if (t.d < 1) throw std::invalid_argument("target: d < 1");
    if (t.kind == "gaussian")
        return std::make_unique<IsotropicGaussian>(
            t.d, std::vector<double>(t.d, t.center));
    if (t.kind == "mixture") return std::make_unique<DoubleGaussian>(t.d, t.offset);
    if (t.kind == "glm_gaussian" || t.kind == "glm_cosine") {
        if (t.count < 1) throw std::invalid_argument("target: glm needs count >= 1");
        const NoiseModel nm = t.kind == "glm_gaussian" ? NoiseModel::kGaussian
                                                       : NoiseModel::kCosine;
        GlmDataset ds = synth_glm_data(t.d, t.count,
                                       std::vector<double>(t.d, t.x_true), nm,
                                       t.dataset_seed);
        return std::make_unique<GlmPosterior>(std::move(ds));
    }
    throw std::invalid_argument("target: unknown kind '" + t.kind + "'");
}

inline TestFn parse_test_fn(const std::string& s) {
    if (s == "x1_sq") return TestFn::kX1Sq;
    if (s == "first10_sq") return TestFn::kFirst10Sq;
    if (s == "mean_sq") return TestFn::kMeanSq;
    throw std::invalid_argument("unknown phi: " + s);
}

inline const char* test_fn_name(TestFn f) {
    switch (f) {
        case TestFn::kX1Sq: return "x1_sq";
        case TestFn::kFirst10Sq: return "first10_sq";
        case TestFn::kMeanSq: return "mean_sq";
    }
    throw std::logic_error("test_fn_name: bad enum");
}

struct ExperimentSpec {
    std::string preset = "custom";
    std::string scale = "desk";            // desk | paper
    TargetSpec target;
    std::vector<std::string> algorithms;   // at least one
    std::vector<double> h_list;            // strictly descending
    double gamma = 0.0;                    // 0: default 1/L downstream
    std::uint32_t tau = 0;                 // 0: default d downstream
    std::uint64_t M = 0;                   // 0: derive from horizon
    double horizon = 20.0;                 // target m*h when M == 0
    std::uint64_t N = 1000;
    std::uint64_t seed = 1;
    std::string phi = "x1_sq";
    InitSpec init;
    std::uint64_t record_stride = 0;       // 0: auto (about 50 records)
    double abort_above = 1e10;
    std::string out;                       // output CSV path; empty = default
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& j, const char* ctx,
                           std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) { ok = true; break; }
        if (!ok)
            throw std::runtime_error(std::string("config: unknown key '") +
                                     item.key() + "' in " + ctx);
    }
}

} // namespace detail

inline void validate_spec(const ExperimentSpec& s) {
    std::vector<std::string> missing;
    if (s.algorithms.empty()) missing.push_back("algorithm");
    if (s.h_list.empty()) missing.push_back("h (or h_list)");
    if (!missing.empty()) {
        std::string msg = "config: missing required keys:";
        for (const auto& k : missing) msg += " " + k;
        throw std::runtime_error(msg);
    }
    for (const auto& a : s.algorithms) parse_algorithm(a);
    parse_test_fn(s.phi);
    for (double h : s.h_list)
        if (!(h > 0.0)) throw std::runtime_error("config: nonpositive h");
    for (std::size_t i = 1; i < s.h_list.size(); ++i)
        if (!(s.h_list[i] < s.h_list[i - 1]))
            throw std::runtime_error("config: h_list must be strictly descending");
    if (s.M == 0 && !(s.horizon > 0.0))
        throw std::runtime_error("config: need M > 0 or horizon > 0");
    if (s.N < 1) throw std::runtime_error("config: N < 1");
    if (s.scale != "desk" && s.scale != "paper")
        throw std::runtime_error("config: scale must be desk or paper");
    if (!(s.abort_above > 0.0)) throw std::runtime_error("config: abort_above <= 0");
    make_potential(s.target);  // validates target fields
}

inline ExperimentSpec parse_config(const std::string& text) {
    detail::json j;
    try {
        j = detail::json::parse(text);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("config: malformed JSON: ") + e.what());
    }
    detail::reject_unknown(j, "top level",
                           {"preset", "scale", "algorithm", "algorithms", "target",
                            "h", "h_list", "gamma", "tau", "M", "horizon", "N",
                            "seed", "phi", "init", "record_stride", "abort_above",
                            "out"});
    ExperimentSpec s;
    try {
        if (j.contains("preset")) s.preset = j["preset"].get<std::string>();
        if (j.contains("scale")) s.scale = j["scale"].get<std::string>();
        if (j.contains("algorithm"))
            s.algorithms.push_back(j["algorithm"].get<std::string>());
        if (j.contains("algorithms"))
            for (const auto& a : j["algorithms"])
                s.algorithms.push_back(a.get<std::string>());
        if (j.contains("target")) {
            const auto& t = j["target"];
            detail::reject_unknown(t, "target",
                                   {"kind", "d", "center", "offset", "count",
                                    "dataset_seed", "x_true"});
            if (t.contains("kind")) s.target.kind = t["kind"].get<std::string>();
            if (t.contains("d")) s.target.d = t["d"].get<std::size_t>();
            if (t.contains("center")) s.target.center = t["center"].get<double>();
            if (t.contains("offset")) s.target.offset = t["offset"].get<double>();
            if (t.contains("count")) s.target.count = t["count"].get<std::size_t>();
            if (t.contains("dataset_seed"))
                s.target.dataset_seed = t["dataset_seed"].get<std::uint64_t>();
            if (t.contains("x_true")) s.target.x_true = t["x_true"].get<double>();
        }
        if (j.contains("h")) s.h_list.push_back(j["h"].get<double>());
        if (j.contains("h_list"))
            for (const auto& h : j["h_list"]) s.h_list.push_back(h.get<double>());
        if (j.contains("gamma")) s.gamma = j["gamma"].get<double>();
        if (j.contains("tau")) s.tau = j["tau"].get<std::uint32_t>();
        if (j.contains("M")) s.M = j["M"].get<std::uint64_t>();
        if (j.contains("horizon")) s.horizon = j["horizon"].get<double>();
        if (j.contains("N")) s.N = j["N"].get<std::uint64_t>();
        if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("phi")) s.phi = j["phi"].get<std::string>();
        if (j.contains("init")) {
            const auto& v = j["init"];
            detail::reject_unknown(v, "init", {"x_mean", "x_std", "v_mean", "v_std"});
            if (v.contains("x_mean")) s.init.x_mean = v["x_mean"].get<double>();
            if (v.contains("x_std")) s.init.x_std = v["x_std"].get<double>();
            if (v.contains("v_mean")) s.init.v_mean = v["v_mean"].get<double>();
            if (v.contains("v_std")) s.init.v_std = v["v_std"].get<double>();
        }
        if (j.contains("record_stride"))
            s.record_stride = j["record_stride"].get<std::uint64_t>();
        if (j.contains("abort_above")) s.abort_above = j["abort_above"].get<double>();
        if (j.contains("out")) s.out = j["out"].get<std::string>();
    } catch (const detail::json::exception& e) {
        throw std::runtime_error(std::string("config: bad value type: ") + e.what());
    }
    validate_spec(s);
    return s;
}

inline std::string emit_config(const ExperimentSpec& s) {
    detail::json j;
    j["preset"] = s.preset;
    j["scale"] = s.scale;
    if (s.algorithms.size() == 1)
        j["algorithm"] = s.algorithms[0];
    else
        j["algorithms"] = s.algorithms;
    detail::json t;
    t["kind"] = s.target.kind;
    t["d"] = s.target.d;
    if (s.target.kind == "gaussian") t["center"] = s.target.center;
    if (s.target.kind == "mixture") t["offset"] = s.target.offset;
    if (s.target.kind == "glm_gaussian" || s.target.kind == "glm_cosine") {
        t["count"] = s.target.count;
        t["dataset_seed"] = s.target.dataset_seed;
        t["x_true"] = s.target.x_true;
    }
    j["target"] = t;
    if (s.h_list.size() == 1)
        j["h"] = s.h_list[0];
    else
        j["h_list"] = s.h_list;
    if (s.gamma > 0.0) j["gamma"] = s.gamma;
    if (s.tau != 0) j["tau"] = s.tau;
    if (s.M != 0) j["M"] = s.M;
    j["horizon"] = s.horizon;
    j["N"] = s.N;
    j["seed"] = s.seed;
    j["phi"] = s.phi;
    j["init"] = {{"x_mean", s.init.x_mean},
                 {"x_std", s.init.x_std},
                 {"v_mean", s.init.v_mean},
                 {"v_std", s.init.v_std}};
    if (s.record_stride != 0) j["record_stride"] = s.record_stride;
    j["abort_above"] = s.abort_above;
    if (!s.out.empty()) j["out"] = s.out;
    return j.dump(2) + "\n";
}

inline constexpr int kCsvSchema = 1;
inline constexpr const char* kCsvHeader =
    "schema,preset,algorithm,target,d,h,tau,gamma,M,N,seed,phi,"
    "weak_error,mc_stderr,cost_partials,status,wall_ms";

struct CsvRow {
    int schema = kCsvSchema;
    std::string preset, algorithm, target;
    std::uint64_t d = 0;
    double h = 0.0;
    std::uint32_t tau = 0;
    double gamma = 0.0;
    std::uint64_t M = 0, N = 0, seed = 0;
    std::string phi;
    double weak_error = 0.0, mc_stderr = 0.0;
    std::uint64_t cost_partials = 0;
    std::string status = "ok";
    std::uint64_t wall_ms = 0;
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline std::string csv_line(const CsvRow& r) {
    std::ostringstream os;
    os << r.schema << ',' << r.preset << ',' << r.algorithm << ',' << r.target
       << ',' << r.d << ',' << detail::fmt_double(r.h) << ',' << r.tau << ','
       << detail::fmt_double(r.gamma) << ',' << r.M << ',' << r.N << ',' << r.seed
       << ',' << r.phi << ',' << detail::fmt_double(r.weak_error) << ','
       << detail::fmt_double(r.mc_stderr) << ',' << r.cost_partials << ','
       << r.status << ',' << r.wall_ms;
    return os.str();
}

// Appends rows, creating the file (with header) when absent or empty.
inline void append_csv(const std::string& path, const std::vector<CsvRow>& rows) {
    bool need_header = true;
    {
        std::ifstream in(path);
        if (in.good() && in.peek() != std::ifstream::traits_type::eof())
            need_header = false;
    }
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("csv: cannot open " + path);
    if (need_header) out << kCsvHeader << '\n';
    for (const auto& r : rows) out << csv_line(r) << '\n';
    if (!out) throw std::runtime_error("csv: write failed for " + path);
}

inline std::vector<CsvRow> parse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path);
    if (line != kCsvHeader) throw std::runtime_error("csv: header mismatch in " + path);
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 17) throw std::runtime_error("csv: bad field count in " + path);
        CsvRow r;
        r.schema = std::stoi(f[0]);
        if (r.schema != kCsvSchema)
            throw std::runtime_error("csv: schema version mismatch in " + path);
        r.preset = f[1];
        r.algorithm = f[2];
        r.target = f[3];
        r.d = std::stoull(f[4]);
        r.h = std::stod(f[5]);
        r.tau = std::uint32_t(std::stoul(f[6]));
        r.gamma = std::stod(f[7]);
        r.M = std::stoull(f[8]);
        r.N = std::stoull(f[9]);
        r.seed = std::stoull(f[10]);
        r.phi = f[11];
        r.weak_error = std::stod(f[12]);
        r.mc_stderr = std::stod(f[13]);
        r.cost_partials = std::stoull(f[14]);
        r.status = f[15];
        r.wall_ms = std::stoull(f[16]);
        rows.push_back(std::move(r));
    }
    return rows;
}

struct SaturationEntry {
    std::string algorithm;
    double h = 0.0;
    double saturation_error = 0.0;
};

// Companion TSV for plotting scripts: algorithm <tab> h <tab> saturation.
inline void write_saturation_tsv(const std::string& path,
                                 const std::vector<SaturationEntry>& entries) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("tsv: cannot open " + path);
    out << "algorithm\th\tsaturation_error\n";
    for (const auto& e : entries)
        out << e.algorithm << '\t' << detail::fmt_double(e.h) << '\t'
            << detail::fmt_double(e.saturation_error) << '\n';
}

} // namespace rclmc
