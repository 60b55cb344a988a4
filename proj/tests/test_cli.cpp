#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "support.hpp"

using namespace cvxrelu;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(CLI_PATH) + " " + args + " >cli_stdout.txt 2>cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_text("cli_stderr.txt");
  return r;
}

}  // namespace

TEST_CASE("analyze example 1 from csv") {
  fs::create_directories("cli_ex1");
  write_text("cli_ex1/data.csv", dataset_csv(builtin_dataset("example1")));
  const Run r = run("analyze --data cli_ex1/data.csv --bias --beta 0.1 --out cli_ex1");
  REQUIRE(r.code == 0);
  const std::string text = read_text("cli_ex1/report.json");
  const LoadedReport rep = parse_report(text);
  CHECK(std::abs(rep.objective - 0.0975) < 1e-6);
  CHECK(rep.m_star == 1);
  CHECK(rep.M_star == 2);
  CHECK(revalidate_certificate(builtin_dataset("example1"), rep).pass);
  CHECK(run("analyze --data cli_ex1/data.csv --bias --beta 0.1 --out cli_ex1").code == 0);
  CHECK(read_text("cli_ex1/report.json") == text);
}

TEST_CASE("counterexample ce2 writes two interpolators of cost 4") {
  const Run r = run("counterexample --builtin ce2 --out cli_ce2");
  REQUIRE(r.code == 0);
  CHECK(fs::exists("cli_ce2/dataset.csv"));
  const std::string fam = read_text("cli_ce2/family.csv");
  CHECK(fam.rfind("member,t,objective,residual,", 0) == 0);
  std::istringstream in(fam);
  std::string line;
  std::getline(in, line);
  std::set<std::string> functions;
  int rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    CHECK(std::abs(std::stod(cells[2]) - 4.0) < 1e-8);
    std::string tail;
    for (size_t k = 4 + 16; k < cells.size(); ++k) tail += cells[k] + ",";
    functions.insert(tail);
    ++rows;
  }
  CHECK(rows >= 2);
  CHECK(functions.size() >= 2);
  const Dataset back = load_dataset_csv("cli_ce2/dataset.csv", true, true, 0.0, Mode::Interpolation);
  CHECK(back.y == builtin_dataset("ce2").y);
}

TEST_CASE("empty csv exits with validation code") {
  write_text("cli_empty.csv", "");
  const Run r = run("analyze --data cli_empty.csv --beta 0.1 --out cli_empty");
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: INVALID_INPUT:", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("size limit exits with code 3") {
  CHECK(run("analyze --builtin example2 --limit-patterns 3 --out cli_lim").code == 3);
  CHECK(run("widths --builtin example2 --limit-generators 2 --out cli_lim").code == 3);
}

TEST_CASE("divergence exits with code 4") {
  const Run r = run("train --builtin example2 --beta 0.1 --m 10 --lr 0.05 --out cli_div");
  CHECK(r.code == 4);
  CHECK(r.err.rfind("error: DIVERGED:", 0) == 0);
}

TEST_CASE("bad flags exit with code 2") {
  CHECK(run("analyze --builtin example1 --mode nope").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("connect --builtin example1 --m 3 --strategy sideways").code == 2);
}

TEST_CASE("remaining subcommands write their files byte-stably") {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"solve --builtin example1", "report.json"},
      {"widths --builtin example2", "report.json"},
      {"connect --builtin example1 --m 3 --strategy sum", "path.csv"},
      {"connect --builtin example1 --m 3 --strategy nplus1", "path.csv"},
      {"family --builtin example2", "family.csv"},
      {"counterexample --class-n 4", "dataset.csv"},
      {"landscape --slice M2", "grid.csv"},
      {"train --builtin example1 --m 3 --seed 3 --steps 2000", "trace.csv"},
      {"demo-corollary1 --builtin example1 --m 3 --seed 0", "path.csv"},
  };
  int idx = 0;
  for (const auto& [args, file] : cases) {
    const std::string dir = "cli_sub" + std::to_string(idx++);
    const Run a = run(args + " --out " + dir);
    CHECK_MESSAGE(a.code == 0, args << ": " << a.err);
    const std::string first = read_text(dir + "/" + file);
    CHECK(run(args + " --out " + dir).code == 0);
    CHECK(read_text(dir + "/" + file) == first);
  }
}

TEST_CASE("connect at the isolated width reports NOT_CONNECTED") {
  const Run r = run("connect --builtin example1 --m 2 --out cli_nc");
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: NOT_CONNECTED:", 0) == 0);
}
