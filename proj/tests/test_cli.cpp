#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eqlab/cli.hpp"

using namespace eqlab;

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "eqlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "eqlab_cli_test";
  fs::create_directories(dir);
  const auto p = dir / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen evil") {
  const auto r = run({"gen", "--family", "evil", "--n", "5"});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "3\n5\n6\n9\n10\n");
  CHECK(r.err.empty());
}

TEST_CASE("gen hybrid with header") {
  const auto r = run({"gen", "--family", "hybrid", "--gamma", "1/2", "--m1", "64", "--n", "70", "--header"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("# family=hybrid\n", 0) == 0);
  CHECK(r.out.find("# m1=64\n") != std::string::npos);
  // a_65 = A_1 + 1 = 65, a_66 = 68
  CHECK(r.out.find("\n64\n65\n68\n73\n") != std::string::npos);
}

TEST_CASE("bounds") {
  const auto r = run({"bounds", "--n-list", "1000"});
  CHECK(r.code == kExitOk);
  std::istringstream in(r.out);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "N,baker,khintchine,fjk");
  CHECK(std::count(row.begin(), row.end(), ',') == 3);
  CHECK(row.rfind("1000,", 0) == 0);
  CHECK(run({"bounds", "--n-list", "2"}).code == kExitValidation);
  CHECK(run({"bounds", "--n-list", "10,x"}).code == kExitValidation);
}

TEST_CASE("validation errors exit with 2") {
  CHECK(run({}).code == kExitValidation);
  CHECK(run({"gen", "--family", "evil", "--n", "5", "--bogus"}).code == kExitValidation);
  CHECK(run({"gen", "--family", "cubic", "--n", "5"}).code == kExitValidation);
  CHECK(run({"gen", "--family", "hybrid", "--gamma", "0.7", "--n", "5"}).code == kExitValidation);
  CHECK(run({"gen", "--family", "hybrid", "--m1", "2", "--n", "5"}).code == kExitValidation);
  CHECK(run({"disc", "--family", "kronecker", "--checkpoints", "list:5"}).code == kExitValidation);
  CHECK(run({"disc", "--family", "kronecker", "--seed", "1", "--alpha", "golden:192", "--checkpoints", "list:5"})
            .code == kExitValidation);
  CHECK(run({"disc", "--family", "kronecker", "--seed", "1", "--precision", "32", "--checkpoints", "list:5"}).code ==
        kExitValidation);
  CHECK(run({"cf", "--alpha", "rational:1/3", "--qbound", "-4"}).code == kExitValidation);
  const auto r = run({"exper", "--plan", "/nonexistent/plan.json"});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("error:") == 0);
}

TEST_CASE("validation happens before file writes") {
  const auto out = scratch("never.csv");
  const auto r = run({"disc", "--family", "kronecker", "--alpha", "golden:192", "--checkpoints", "list:5,3", "--out",
                      out.string()});
  CHECK(r.code == kExitValidation);
  CHECK_FALSE(fs::exists(out));
  const auto dir = scratch("never_dir");
  const auto plan = scratch("bad_plan.json");
  std::ofstream(plan) << R"({"sequence":{"family":"kronecker"},"precision_bits":16})";
  CHECK(run({"exper", "--plan", plan.string(), "--out", dir.string()}).code == kExitValidation);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("disc output and determinism") {
  const std::vector<std::string> args{"disc", "--family", "polynomial", "--coeffs", "0,0,1", "--seed", "5",
                                      "--checkpoints", "geo:2^0.5:5000"};
  const auto a = run(args), b = run(args);
  CHECK(a.code == kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("N,D_N,ND_N\n1,1,1\n", 0) == 0);
  auto json_args = args;
  json_args.insert(json_args.end(), {"--format", "json"});
  const auto j = nlohmann::json::parse(run(json_args).out);
  CHECK(j["series"].back()["N"] == 5000);
  CHECK(run({"disc", "--family", "kronecker", "--alpha", "rational:1/2", "--checkpoints", "list:2,4"}).out ==
        "N,D_N,ND_N\n2,0.5,1\n4,0.5,2\n");
}

TEST_CASE("round trip through a sequence dump") {
  const auto dump = scratch("hybrid.txt");
  const auto g = run({"gen", "--family", "hybrid", "--gamma", "3/10", "--m1", "64", "--blocks", "3", "--n", "1426",
                      "--header", "--out", dump.string()});
  REQUIRE(g.code == kExitOk);
  CHECK(g.out.empty());
  const auto from_file = run({"disc", "--points-file", dump.string(), "--seed", "3", "--checkpoints",
                              "geo:2^0.5:1426"});
  const auto in_process = run({"disc", "--family", "hybrid", "--gamma", "3/10", "--m1", "64", "--blocks", "3",
                               "--seed", "3", "--checkpoints", "geo:2^0.5:1426"});
  CHECK(from_file.code == kExitOk);
  CHECK(from_file.out == in_process.out);
  CHECK(run({"disc", "--points-file", dump.string(), "--seed", "3", "--checkpoints", "list:2000"}).code ==
        kExitValidation);
}

TEST_CASE("hybrid disc beyond coverage") {
  CHECK(run({"disc", "--family", "hybrid", "--blocks", "1", "--seed", "3", "--checkpoints", "list:81"}).code ==
        kExitValidation);
  CHECK(run({"disc", "--family", "hybrid", "--blocks", "2", "--seed", "3", "--checkpoints", "blocks"}).code ==
        kExitOk);
}

TEST_CASE("cf and weyl") {
  const auto c = run({"cf", "--alpha", "rational:16/113", "--qbound", "1000"});
  CHECK(c.out == "l,a_l,p_l,q_l\n1,7,1,7\n2,16,16,113\n");
  const auto cj = nlohmann::json::parse(run({"cf", "--alpha", "golden:192", "--qbound", "100", "--format", "json"}).out);
  CHECK(cj["growth"]["c_hat"] == 1.0);
  CHECK(run({"cf", "--alpha", "golden:64", "--qbound", "100"}).code == kExitValidation);

  const auto w = run({"weyl", "--alpha", "rational:1/5", "--y", "5", "--checkpoints", "list:5"});
  CHECK(w.code == kExitOk);
  CHECK(w.out.find("\n5,2.236067977499") != std::string::npos);
  const auto ws = run({"weyl", "--alpha", "golden:192", "--witnesses", "--qbound", "1000"});
  CHECK(ws.out.rfind("l,q_l,Y_l,magnitude,ratio\n", 0) == 0);
  CHECK(ws.out.find("\n6,13,") != std::string::npos);
  CHECK(run({"weyl", "--alpha", "golden:192"}).code == kExitValidation);
}

TEST_CASE("exper writes a report") {
  const auto plan = scratch("plan.json");
  std::ofstream(plan) << R"({"sequence":{"family":"evil"},"checkpoints":"geo:2^0.5:5000","alpha_count":3,"seed":2})";
  const auto dir = scratch("report");
  const auto r = run({"exper", "--plan", plan.string(), "--out", dir.string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("slope=", 0) == 0);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "series_alpha_002.csv"));
  const auto first = slurp(dir / "report.json");
  REQUIRE(run({"exper", "--plan", plan.string(), "--out", dir.string()}).code == kExitOk);
  CHECK(slurp(dir / "report.json") == first);
}

}
