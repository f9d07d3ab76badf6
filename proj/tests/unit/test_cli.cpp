#include "locov/cli.hpp"
#include "locov/serialize.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace locov;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "locov");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path tmp(const std::string& name) {
  const char* base = std::getenv("LOCOV_TEST_TMP");
  return std::filesystem::path(base ? base : std::filesystem::temp_directory_path().string()) / name;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto p = tmp(name);
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("bound prints the certificate with its meta block") {
  const Run r = run({"bound", "--theorem", "strongly_convex", "--n", "100", "--delta", "0.05", "--B", "1", "--L",
                     "1", "--R", "1", "--gamma", "0.5", "--seed", "9"});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["meta"]["seed"] == 9);
  CHECK(j["meta"]["tool"] == "locov");
  CHECK(j["meta"]["config_hash"].get<std::string>().size() == 16);
  CHECK(j["result"]["total"].get<double>() == doctest::Approx(0.5401679738831866).epsilon(1e-15));
}

TEST_CASE("text and csv output carry the same numbers") {
  const std::vector<std::string> base = {"bound", "--theorem", "single_trajectory", "--n", "1000", "--B", "1",
                                         "--T", "8"};
  auto text = base;
  text.insert(text.end(), {"--format", "text"});
  const Run t = run(text);
  REQUIRE(t.code == 0);
  CHECK(t.out.find("result.total: 0.05194694083467") != std::string::npos);
  CHECK(t.out.find("meta.seed: 0") != std::string::npos);
  auto csv = base;
  csv.insert(csv.end(), {"--format", "csv"});
  const Run c = run(csv);
  REQUIRE(c.code == 0);
  CHECK(c.out.rfind("# locov", 0) == 0);
  CHECK(c.out.find("seed=0") != std::string::npos);
}

TEST_CASE("config files are merged with flags, flags winning") {
  const std::string cfg = write_file("bound.json", R"({"command": "bound", "theorem": "early_stopping",
    "n": 100, "B": 1, "T": 0, "delta": 0.05})");
  const Run r = run({"--config", cfg});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out)["result"]["total"].get<double>() == doctest::Approx(0.13581015157406195));
  const Run o = run({"--config", cfg, "bound", "--T", "10"});
  REQUIRE(o.code == 0);
  CHECK(Json::parse(o.out)["result"]["total"].get<double>() == doctest::Approx(0.23581015157406195));
  CHECK(Json::parse(o.out)["meta"]["config"]["T"] == 10);
}

TEST_CASE("schema errors name the field and exit 2") {
  const Run unknown = run({"--config", write_file("bad1.json", R"({"command": "bound", "theorem": "early_stopping",
    "n": 100, "B": 1, "T": 0, "wobble": 3})")});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("wobble") != std::string::npos);
  const Run type = run({"--config", write_file("bad2.json", R"({"command": "bound", "theorem": "early_stopping",
    "n": "many", "B": 1, "T": 0})")});
  CHECK(type.code == 2);
  CHECK(type.err.find("'n'") != std::string::npos);
  const Run malformed = run({"--config", write_file("bad3.json", "{\n  \"command\": \"bound\",\n  oops\n}")});
  CHECK(malformed.code == 2);
  CHECK(malformed.err.find(":3:") != std::string::npos);
  const Run flag = run({"bound", "--theorem", "early_stopping", "--n", "ten"});
  CHECK(flag.code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"bound", "--theorem", "nope", "--n", "10"}).code == 2);
}

TEST_CASE("cover writes JSON lines and reports the cap") {
  const Run r = run({"cover", "--n", "2", "--T", "2", "--seed", "1"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  const CoverSet cover = read_cover_jsonl(lines);
  CHECK(cover.size() == 4);
  const Json head = Json::parse(r.out.substr(0, r.out.find('\n')));
  CHECK(head["meta"]["seed"] == 1);
  CHECK(head["meta"]["command"] == "cover");

  const Run capped = run({"cover", "--n", "10", "--T", "8", "--cap", "1000"});
  CHECK(capped.code == 2);
  CHECK(capped.err.find("1e+08") != std::string::npos);
  CHECK(capped.out.empty());
}

TEST_CASE("cover with verification") {
  const Run r = run({"cover", "--n", "3", "--verify", "500", "--output", tmp("cover.jsonl").string()});
  REQUIRE(r.code == 0);
  std::ifstream in(tmp("cover.jsonl"));
  std::string first;
  std::getline(in, first);
  const Json head = Json::parse(first);
  CHECK(head["meta"]["result"]["verification"]["failures"] == 0);
  CHECK(head["meta"]["result"]["T"] == 3);
}

TEST_CASE("contract, approx and stability commands") {
  const Run c = run({"contract", "--n", "3", "--d", "2", "--eta", "0.5", "--pairs", "20"});
  REQUIRE(c.code == 0);
  const Json cj = Json::parse(c.out)["result"];
  CHECK(cj["max_ratio"].get<double>() <= 0.5 + 1e-9);
  const Run a = run({"approx", "--grid", "50"});
  REQUIRE(a.code == 0);
  CHECK(Json::parse(a.out)["result"]["pass"] == true);
  const Run s = run({"stability", "--inits", "500"});
  REQUIRE(s.code == 0);
  CHECK(Json::parse(s.out)["result"]["separated"] == true);
}

TEST_CASE("gap, validate, kmeans, ifs and hoeffding commands") {
  const Run g = run({"gap", "--n", "50", "--steps", "20", "--format", "csv"});
  REQUIRE(g.code == 0);
  CHECK(g.out.find("step,index,x0") != std::string::npos);
  const Run v = run({"validate", "--resamplings", "20", "--trials", "5", "--threads", "1"});
  REQUIRE(v.code == 0);
  CHECK(Json::parse(v.out)["result"]["violations"] == 0);
  const Run k = run({"kmeans", "--n", "40", "--K", "2"});
  REQUIRE(k.code == 0);
  CHECK(Json::parse(k.out)["result"]["pass"] == true);
  const Run h = run({"kmeans", "--mode", "hard", "--n", "40", "--K", "2", "--steps", "100"});
  REQUIRE(h.code == 0);
  const Run i = run({"ifs"});
  REQUIRE(i.code == 0);
  CHECK(Json::parse(i.out)["result"]["d_H"].get<double>() == doctest::Approx(0.6309297535714574));
  const Run ho = run({"hoeffding", "--n-grid", "10,20", "--eps-fractions", "0.1,0.3", "--resamplings", "500"});
  REQUIRE(ho.code == 0);
  CHECK(Json::parse(ho.out)["result"]["cells"].size() == 4);
}

TEST_CASE("identical seeds give identical results") {
  const std::vector<std::string> args = {"gap", "--n", "30", "--steps", "15", "--seed", "5"};
  Json a = Json::parse(run(args).out), b = Json::parse(run(args).out);
  a["meta"].erase("timestamp");
  b["meta"].erase("timestamp");
  CHECK(a == b);
}

}  // TEST_SUITE
