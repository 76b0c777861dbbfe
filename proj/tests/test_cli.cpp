#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "fq/store.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run fq_run(const std::string& args) {
  const std::string cmd = std::string(FQ_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  Run r;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.out += buf;
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fq-cli-test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("table rows for the scalar design") {
  const Run r = fq_run("table --design 4 --n 1,5,10");
  CHECK(r.status == 0);
  CHECK(r.out == "n,design,distortion,plan\n1,IV,0.5000,1\n5,IV,0.1271,5\n10,IV,0.0984,5x2\n");
  CHECK(fq_run("table --design 4 --n 1,5,10").out == r.out);
  CHECK(fq_run("table --design 4 --n 10 --precision 8").out.find("0.09844615") != std::string::npos);
}

TEST_CASE("build, weights and cubature") {
  const auto one = scratch("one.txt");
  REQUIRE(fq_run("build --design 4 --n 1 --out " + one.string()).status == 0);
  const auto f = fq::load_codebook(one);
  CHECK(f.codebook.coords == std::vector<double>{0.0});
  CHECK(f.distortion == 0.5);

  const auto ten = scratch("ten.txt");
  REQUIRE(fq_run("build --design 4 --n 10 --out " + ten.string()).status == 0);
  CHECK(fq_run("cubature --in " + ten.string()).status == 2);  // no weights yet
  REQUIRE(fq_run("weights --in " + ten.string() + " --samples 20000 --seed 3").status == 0);
  const Run c = fq_run("cubature --in " + ten.string() + " --functional one");
  CHECK(c.status == 0);
  CHECK(std::stod(c.out) == doctest::Approx(1.0).epsilon(1e-14));

  const Run q = fq_run("distortion --in " + ten.string());
  CHECK(q.status == 0);
  CHECK(q.out.rfind("method,distortion,std_error\nquadrature,0.0984", 0) == 0);
}

TEST_CASE("rate and spectrum output") {
  const Run r = fq_run("rate --n 10,100");
  CHECK(r.status == 0);
  CHECK(r.out.rfind("n,logn_times_dist\n10,", 0) == 0);
  const Run s = fq_run("spectrum --jmax 2");
  CHECK(s.out == "j,lambda\n1,0.40528473456935116\n2,0.045031637174372349\n");
}

TEST_CASE("exit codes") {
  CHECK(fq_run("table --n 5 --bogus").status == 2);
  CHECK(fq_run("table --design 7 --n 5").status == 2);
  CHECK(fq_run("table --design 1 --n 10").status == 2);  // stochastic without --seed
  CHECK(fq_run("table --process ou --n 5").status == 2);
  CHECK(fq_run("").status == 2);
  CHECK(fq_run("table --design 2 --lmax 3 --n 10").status == 1);
  CHECK(fq_run("--help").status == 0);
}
