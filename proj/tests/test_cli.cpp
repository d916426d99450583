#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "momsens/cli.hpp"
#include "momsens/csv.hpp"

using namespace momsens;
namespace fs = std::filesystem;

namespace {

const std::string kModels = MOMSENS_MODEL_DIR;

struct Result {
  int code;
  std::string out, err;
};

Result run(const cli::RunConfig& c) {
  std::ostringstream out, err;
  const int code = cli::run(c, out, err);
  return {code, out.str(), err.str()};
}

cli::RunConfig config(cli::Command cmd, const std::string& model) {
  cli::RunConfig c;
  c.command = cmd;
  c.model_path = kModels + "/" + model;
  c.points = 11;
  return c;
}

std::string body(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, kept;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') kept += line + "\n";
  return kept;
}

std::string first_data_line(const std::string& csv) {
  std::istringstream in(body(csv));
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  return header + "\n" + line;
}

int argv_main(std::vector<std::string> args) {
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("number formatting round-trips and writes NA") {
  CHECK(csv::number(0.1) == "0.10000000000000001");
  CHECK(std::stod(csv::number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(csv::number(std::nan("")) == "NA");
  CHECK(csv::fnv1a64("") == "cbf29ce484222325");
  CHECK(csv::fnv1a64("a") == "af63dc4c8601ec8c");
}

TEST_CASE("simulate writes metadata and moment columns") {
  const auto r = run(config(cli::Command::simulate, "birthdeath.model"));
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("# command: simulate") != std::string::npos);
  CHECK(r.out.find("# model_fnv1a64: ") != std::string::npos);
  CHECK(r.out.find("threads") == std::string::npos);
  CHECK(first_data_line(r.out) == "t,mu_X,sigma_X_X\n0,50,0");
}

TEST_CASE("dimerization exposes only the observed species") {
  const auto r = run(config(cli::Command::simulate, "dimerization.model"));
  REQUIRE(r.code == cli::kOk);
  CHECK(first_data_line(r.out) == "t,mu_X,sigma_X_X\n0,301,0");
}

TEST_CASE("oracle adds difference columns") {
  auto c = config(cli::Command::oracle, "birthdeath.model");
  c.bound = {400};
  const auto r = run(c);
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("# states: 401") != std::string::npos);
  CHECK(first_data_line(r.out).rfind("t,mu_X,sigma_X_X,diff_mu_X,diff_sigma_X_X\n0,50,0,0,0", 0) == 0);
  c.bound = {400, 3};
  const auto bad = run(c);
  CHECK(bad.code == cli::kInputError);
}

TEST_CASE("local writes sensitivities and a sweep file") {
  const auto dir = fs::temp_directory_path() / "momsens_cli_test";
  fs::create_directories(dir);
  auto c = config(cli::Command::local, "birthdeath.model");
  c.out = (dir / "local.csv").string();
  const auto r = run(c);
  REQUIRE(r.code == cli::kOk);
  std::ifstream main_file(c.out), sweep_file(dir / "local.sweep.csv");
  REQUIRE(main_file);
  REQUIRE(sweep_file);
  std::stringstream a, b;
  a << main_file.rdbuf();
  b << sweep_file.rdbuf();
  CHECK(body(a.str()).rfind("t,output,param,S_raw,S_normalized\n", 0) == 0);
  CHECK(body(b.str()).rfind("t,output,perturbed,value\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("sobol output is independent of the thread count") {
  auto c = config(cli::Command::sobol, "birthdeath.model");
  c.n = 64;
  c.threads = 1;
  const auto one = run(c);
  c.threads = 3;
  const auto three = run(c);
  REQUIRE(one.code == cli::kOk);
  CHECK(one.out == three.out);
  CHECK(body(one.out).rfind("t,output,param,S_first,S_total,estimator,n,seed\n", 0) == 0);
  CHECK(one.out.find(",NA,NA,martinez,64,1\n") != std::string::npos);
  c.seed = 2;
  CHECK(body(run(c).out) != body(one.out));
}

TEST_CASE("errors map to exit codes with one-line messages") {
  auto missing = config(cli::Command::simulate, "nope.model");
  const auto r = run(missing);
  CHECK(r.code == cli::kInputError);
  CHECK(r.err.rfind("error: input: file not found", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  const auto dir = fs::temp_directory_path() / "momsens_cli_bad";
  fs::create_directories(dir);
  const auto bad = dir / "bad.model";
  std::ofstream(bad) << "species X init=5\nparam c1=0.1\nreaction r: X -> X @ c1\n";
  cli::RunConfig c;
  c.model_path = bad.string();
  const auto m = run(c);
  CHECK(m.code == cli::kInputError);
  CHECK(m.err.find("error: model: line 3") == 0);

  std::ofstream(bad) << "species X init=5\nparam c1=0.1\nreaction r: X -> 0 @ c1\n";
  c.command = cli::Command::sobol;
  const auto s = run(c);
  CHECK(s.code == cli::kRuntimeError);
  CHECK(s.err.find("no bounds") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("argument parsing") {
  CHECK(argv_main({"momsens"}) == cli::kUsageError);
  CHECK(argv_main({"momsens", "simulate"}) == cli::kUsageError);
  CHECK(argv_main({"momsens", "sobol", kModels + "/birthdeath.model", "--estimator", "sobol"}) == cli::kUsageError);
  CHECK(argv_main({"momsens", "oracle", kModels + "/birthdeath.model", "--bound", "x"}) == cli::kUsageError);
  CHECK(argv_main({"momsens", "simulate", kModels + "/absent.model"}) == cli::kInputError);
}
