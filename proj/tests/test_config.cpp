#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rclmc/config.hpp"

using namespace rclmc;
namespace fs = std::filesystem;

namespace {

struct TempPath {
    fs::path p;
    explicit TempPath(const char* name)
        : p(fs::temp_directory_path() / (std::string("rclmc_test_") + name)) {
        fs::remove(p);
    }
    ~TempPath() { fs::remove(p); }
    std::string str() const { return p.string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("config: minimal document fills documented defaults") {
    const ExperimentSpec s = parse_config(R"({"algorithm":"olmc","h":0.1})");
    CHECK(s.preset == "custom");
    CHECK(s.scale == "desk");
    CHECK(s.algorithms == std::vector<std::string>{"olmc"});
    CHECK(s.h_list == std::vector<double>{0.1});
    CHECK(s.target.kind == "gaussian");
    CHECK(s.target.d == 1);
    CHECK(s.gamma == 0.0);
    CHECK(s.tau == 0);
    CHECK(s.M == 0);
    CHECK(s.horizon == 20.0);
    CHECK(s.N == 1000);
    CHECK(s.seed == 1);
    CHECK(s.phi == "x1_sq");
    CHECK(s.init.x_mean == 0.0);
    CHECK(s.init.x_std == 1.0);
    CHECK(s.record_stride == 0);
    CHECK(s.abort_above == 1e10);
    CHECK(s.out.empty());
}

TEST_CASE("config: emit/parse round trip preserves every field") {
    ExperimentSpec s;
    s.preset = "bench";
    s.scale = "paper";
    s.algorithms = {"rcd_u", "svrg_o"};
    s.target.kind = "glm_cosine";
    s.target.d = 7;
    s.target.count = 12;
    s.target.dataset_seed = 404;
    s.target.x_true = 0.5;
    s.h_list = {0.04, 0.02, 0.01};
    s.gamma = 0.25;
    s.tau = 5;
    s.M = 600;
    s.horizon = 11.0;
    s.N = 32;
    s.seed = 99;
    s.phi = "first10_sq";
    s.init = {0.5, 0.1, -0.25, 2.0};
    s.record_stride = 10;
    s.abort_above = 5e8;
    s.out = "rows.csv";

    const std::string doc = emit_config(s);
    const ExperimentSpec r = parse_config(doc);
    CHECK(r.preset == s.preset);
    CHECK(r.scale == s.scale);
    CHECK(r.algorithms == s.algorithms);
    CHECK(r.target.kind == s.target.kind);
    CHECK(r.target.d == s.target.d);
    CHECK(r.target.count == s.target.count);
    CHECK(r.target.dataset_seed == s.target.dataset_seed);
    CHECK(r.target.x_true == s.target.x_true);
    CHECK(r.h_list == s.h_list);
    CHECK(r.gamma == s.gamma);
    CHECK(r.tau == s.tau);
    CHECK(r.M == s.M);
    CHECK(r.horizon == s.horizon);
    CHECK(r.N == s.N);
    CHECK(r.seed == s.seed);
    CHECK(r.phi == s.phi);
    CHECK(r.init.x_mean == s.init.x_mean);
    CHECK(r.init.x_std == s.init.x_std);
    CHECK(r.init.v_mean == s.init.v_mean);
    CHECK(r.init.v_std == s.init.v_std);
    CHECK(r.record_stride == s.record_stride);
    CHECK(r.abort_above == s.abort_above);
    CHECK(r.out == s.out);
    CHECK(emit_config(r) == doc);  // emission is a fixed point
}

TEST_CASE("config: singletons emit as scalar keys") {
    const ExperimentSpec s = parse_config(R"({"algorithm":"ulmc","h":0.05})");
    const std::string doc = emit_config(s);
    CHECK(doc.find("\"algorithm\"") != std::string::npos);
    CHECK(doc.find("\"algorithms\"") == std::string::npos);
    CHECK(doc.find("\"h\"") != std::string::npos);
    CHECK(doc.find("\"h_list\"") == std::string::npos);
    CHECK(doc.find("\"gamma\"") == std::string::npos);  // defaults stay implicit
    CHECK(doc.find("\"tau\"") == std::string::npos);
    CHECK(doc.find("\"M\"") == std::string::npos);
    CHECK(doc.find("\"out\"") == std::string::npos);
}

TEST_CASE("config: errors are specific and fail closed") {
    CHECK_THROWS_WITH(parse_config("{}"),
                      "config: missing required keys: algorithm h (or h_list)");
    CHECK_THROWS_WITH(parse_config(R"({"h":0.1})"),
                      "config: missing required keys: algorithm");
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"olmc"})"),
                      "config: missing required keys: h (or h_list)");
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"olmc","h":0.1,"foo":1})"),
                      doctest::Contains("unknown key 'foo'"));
    CHECK_THROWS_WITH(
        parse_config(R"({"algorithm":"olmc","h":0.1,"target":{"kind":"gaussian","bogus":2}})"),
        doctest::Contains("unknown key 'bogus'"));
    CHECK_THROWS_WITH(
        parse_config(R"({"algorithm":"olmc","h":0.1,"init":{"x_men":0.5}})"),
        doctest::Contains("unknown key 'x_men'"));
    CHECK_THROWS_WITH(parse_config("{algorithm"),
                      doctest::Contains("config: malformed JSON:"));
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"olmc","h":"wide"})"),
                      doctest::Contains("config: bad value type:"));
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"olmc","h_list":[0.1,0.2]})"),
                      "config: h_list must be strictly descending");
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"olmc","h_list":[0.2,0.2]})"),
                      "config: h_list must be strictly descending");
    // a scalar "h" entry precedes "h_list" values in the grid
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"olmc","h":0.1,"h_list":[0.2]})"),
                      "config: h_list must be strictly descending");
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"olmc","h":-0.1})"),
                      "config: nonpositive h");
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"molmc","h":0.1})"),
                      doctest::Contains("unknown algorithm"));
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"olmc","h":0.1,"phi":"x2"})"),
                      doctest::Contains("unknown phi"));
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"olmc","h":0.1,"N":0})"),
                      "config: N < 1");
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"olmc","h":0.1,"scale":"huge"})"),
                      "config: scale must be desk or paper");
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"olmc","h":0.1,"horizon":0,"M":0})"),
                      "config: need M > 0 or horizon > 0");
    CHECK_THROWS_WITH(parse_config(R"({"algorithm":"olmc","h":0.1,"abort_above":0})"),
                      "config: abort_above <= 0");
    CHECK_THROWS(parse_config(
        R"({"algorithm":"olmc","h":0.1,"target":{"kind":"pencil"}})"));
    CHECK_THROWS(parse_config(
        R"({"algorithm":"olmc","h":0.1,"target":{"kind":"glm_gaussian","d":3}})"));
    CHECK_THROWS(parse_config(
        R"({"algorithm":"olmc","h":0.1,"target":{"kind":"mixture","offset":0}})"));
    CHECK_THROWS(parse_config(
        R"({"algorithm":"olmc","h":0.1,"target":{"d":0}})"));
}

TEST_CASE("csv: append creates one header and values round-trip exactly") {
    TempPath tmp("rows.csv");
    CsvRow r1;
    r1.preset = "example1";
    r1.algorithm = "rcd_u";
    r1.target = "gaussian";
    r1.d = 50;
    r1.h = 0.1;
    r1.tau = 0;
    r1.gamma = 1.0;
    r1.M = 200;
    r1.N = 1000;
    r1.seed = 1;
    r1.phi = "x1_sq";
    r1.weak_error = 1.0526315789473688;
    r1.mc_stderr = 1e-17;
    r1.cost_partials = 123456789012345ull;
    r1.wall_ms = 42;
    CsvRow r2 = r1;
    r2.algorithm = "svrg_o";
    r2.h = 3.141592653589793;
    r2.tau = 50;
    r2.status = "diverged";

    append_csv(tmp.str(), {r1});
    append_csv(tmp.str(), {r2});

    const std::string text = slurp(tmp.str());
    CHECK(text.find(kCsvHeader) == 0);
    CHECK(text.find("schema", 10) == std::string::npos);  // header written once
    CHECK(text.find("0.10000000000000001") != std::string::npos);
    CHECK(text.find("1.0000000000000001e-17") != std::string::npos);

    const std::vector<CsvRow> rows = parse_csv(tmp.str());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].h == r1.h);  // bitwise through %.17g
    CHECK(rows[0].weak_error == r1.weak_error);
    CHECK(rows[0].mc_stderr == r1.mc_stderr);
    CHECK(rows[0].cost_partials == r1.cost_partials);
    CHECK(rows[0].preset == "example1");
    CHECK(rows[0].status == "ok");
    CHECK(rows[1].algorithm == "svrg_o");
    CHECK(rows[1].h == r2.h);
    CHECK(rows[1].tau == 50);
    CHECK(rows[1].status == "diverged");
}

TEST_CASE("csv: parsing rejects malformed files") {
    TempPath tmp("bad.csv");
    CHECK_THROWS(parse_csv(tmp.str()));  // missing file
    std::ofstream(tmp.str()) << "";
    CHECK_THROWS_WITH(parse_csv(tmp.str()), doctest::Contains("empty file"));
    std::ofstream(tmp.str()) << "schema,preset\n";
    CHECK_THROWS_WITH(parse_csv(tmp.str()), doctest::Contains("header mismatch"));
    std::ofstream(tmp.str()) << kCsvHeader << "\n1,a,b\n";
    CHECK_THROWS_WITH(parse_csv(tmp.str()), doctest::Contains("bad field count"));
    std::ofstream(tmp.str()) << kCsvHeader
                             << "\n2,p,olmc,gaussian,1,0.1,0,0,1,1,1,x1_sq,0,0,0,ok,0\n";
    CHECK_THROWS_WITH(parse_csv(tmp.str()), doctest::Contains("schema version mismatch"));
}

TEST_CASE("tsv: golden output") {
    TempPath tmp("sat.tsv");
    write_saturation_tsv(tmp.str(), {{"rcd_o", 0.005, 0.14285714285716256},
                                     {"ulmc", 0.32, 0.086186743946891076}});
    CHECK(slurp(tmp.str()) ==
          "algorithm\th\tsaturation_error\n"
          "rcd_o\t0.0050000000000000001\t0.14285714285716256\n"
          "ulmc\t0.32000000000000001\t0.086186743946891076\n");
}

TEST_CASE("csv: header string is the documented external interface") {
    CHECK(std::string(kCsvHeader) ==
          "schema,preset,algorithm,target,d,h,tau,gamma,M,N,seed,phi,"
          "weak_error,mc_stderr,cost_partials,status,wall_ms");
    CHECK(kCsvSchema == 1);
}
