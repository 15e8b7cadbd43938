#include "cellcheck/cli.hpp"
#include "cellcheck/io.hpp"
#include "support/nets.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cellcheck;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cellcheck_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::string kNet = testing::data_path("continuum_world.nnet");

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run({"partition", "--domain", "0:1,0:1", "--min-size", "0.1", "--out", "x.jsonl"}).code == cli::kExitUsage);
    CHECK(run({"check", "--net", kNet, "--model", "pond", "--min-size", "1", "--out", "x"}).code == cli::kExitUsage);
    CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("io and validation errors") {
    const fs::path dir = scratch("errors");
    const auto missing = run({"partition", "--net", "/nonexistent.nnet", "--domain", "0:1,0:1", "--min-size", "0.1",
                              "--out", (dir / "p.jsonl").string()});
    CHECK(missing.code == cli::kExitIo);
    CHECK(missing.err.find("error:") != std::string::npos);
    const auto bad_domain = run({"partition", "--net", kNet, "--domain", "0:1", "--min-size", "0.1", "--out",
                                 (dir / "p.jsonl").string()});
    CHECK(bad_domain.code == cli::kExitValidation);
}

TEST_CASE("partition writes a partition file and a manifest") {
    const fs::path dir = scratch("partition");
    const auto r = run({"partition", "--net", kNet, "--model", "continuum", "--min-size", "1.25", "--strategy",
                        "informed", "--out", (dir / "p.jsonl").string()});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(r.out.find("verifier calls") != std::string::npos);
    std::ifstream in(dir / "p.jsonl");
    const PartitionFile pf = read_partition(in);
    CHECK(pf.fields[0].leaf_count() > 1);
    const auto manifest = nlohmann::json::parse(slurp(dir / "run.json"));
    CHECK(manifest["format"] == kFormatVersion);
    CHECK(manifest["command"] == "partition");
}

TEST_CASE("check, mc, exact and compare pipeline") {
    const fs::path dir = scratch("pipeline");
    const std::string field = (dir / "field.jsonl").string();
    const auto c = run({"check", "--net", kNet, "--model", "continuum", "--min-size", "1.25", "--transition-threshold",
                        "0.05", "--threads", "1", "--out", field});
    REQUIRE(c.code == cli::kExitOk);
    CHECK(c.out.find("converged") != std::string::npos);

    {
        std::ofstream s(dir / "starts.csv");
        s << "field,x,y\n0,1.5,1.5\n0,7.5,10.5\n0,10,10\n";
    }
    const std::string mc = (dir / "mc.csv").string();
    const auto m = run({"mc", "--net", kNet, "--model", "continuum", "--starts", (dir / "starts.csv").string(), "--n",
                        "300", "--seed", "4", "--out", mc});
    REQUIRE(m.code == cli::kExitOk);
    std::ifstream mc_in(mc);
    const auto rows = read_mc_csv(mc_in);
    REQUIRE(rows.size() == 3);
    CHECK(rows[2].estimate.estimate == 1.0);

    const std::string exact = (dir / "exact.jsonl").string();
    const auto e = run({"exact", "--net", kNet, "--model", "continuum", "--grid", "20,20", "--table-out",
                        (dir / "table.jsonl").string(), "--out", exact});
    REQUIRE(e.code == cli::kExitOk);
    const auto e2 = run({"exact", "--table", (dir / "table.jsonl").string(), "--model", "continuum", "--out",
                         (dir / "exact2.jsonl").string()});
    REQUIRE(e2.code == cli::kExitOk);

    const std::string cmp = (dir / "cmp.csv").string();
    const auto k = run({"compare", "--field", field, "--mc", mc, "--exact", exact, "--out", cmp});
    REQUIRE(k.code == cli::kExitOk);
    const std::string text = slurp(cmp);
    CHECK(text.rfind("field,x0,x1,p_check,p_mc,mc_stderr,p_exact,p_exact_multilinear,flag\n", 0) == 0);
    CHECK(text.find("violation") == std::string::npos);

    // Recompute the flag from the joined inputs.
    std::ifstream fin(field);
    const PartitionFile pf = read_partition(fin);
    for (const auto& row : rows) {
        const double p = pf.fields[0].cell(pf.fields[0].locate(row.state)).prob;
        CHECK(p >= row.estimate.estimate - 3.0 * row.estimate.std_error);
    }
}

TEST_CASE("vcas check writes a tau curve") {
    const fs::path dir = scratch("vcas");
    const std::string nets = testing::data_path("vcas_COC.nnet") + "," + testing::data_path("vcas_DES1500.nnet") +
                             "," + testing::data_path("vcas_CL1500.nnet");
    const auto r = run({"check", "--net", nets, "--model", "vcas", "--intruder-rate", "-30", "--tau-max", "3",
                        "--min-size", "1000,50", "--out", (dir / "f.jsonl").string(), "--tau-curve",
                        (dir / "tau.csv").string()});
    REQUIRE(r.code == cli::kExitOk);
    const std::string curve = slurp(dir / "tau.csv");
    CHECK(curve.rfind("tau,max_prob\n0,1\n", 0) == 0);
    CHECK(std::count(curve.begin(), curve.end(), '\n') == 5);
}

TEST_CASE("non-convergence is reported") {
    const fs::path dir = scratch("sweeps");
    const auto r = run({"check", "--net", kNet, "--model", "continuum", "--min-size", "2.5", "--max-sweeps", "2",
                        "--out", (dir / "f.jsonl").string()});
    CHECK(r.code == cli::kExitValidation);
    CHECK(r.out.find("INCOMPLETE") != std::string::npos);
    CHECK(fs::exists(dir / "f.jsonl"));
}
