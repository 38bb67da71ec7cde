#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "kramers/report.hpp"

namespace fs = std::filesystem;
using kramers::read_file;
using kramers::Report;
using kramers::write_file;

namespace {

const char* kBase = R"(system.dimension = 1
system.drift = linear
domain.kind = interval
domain.lower = -1
domain.upper = 1
measure.kind = exponential_light
run.epsilon = 0.4, 0.3
run.paths = 150
run.seed = 11
run.dt = 0.01
run.horizon = 2
quasipotential.family = grid
quasipotential.restarts = 1
quasipotential.max_knots = 2
quasipotential.nm_max_evals = 150
quasipotential.horizons = 1, 2, 4
quasipotential.golden_steps = 2
kramers.bootstrap = 100
cycle.t_cap = 1000
is.tilt = constant
is.level = 1.5
is.horizon = 2
)";

struct Sandbox {
  fs::path root;
  Sandbox() {
    root = fs::temp_directory_path() / ("kramers_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Sandbox() { fs::remove_all(root); }
  std::string config(const std::string& name, const std::string& text) const {
    const auto p = root / name;
    write_file(p.string(), text);
    return p.string();
  }
};

int cli(const std::string& args) {
  const std::string cmd = std::string(KRAMERS_CLI) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string err_of(const std::string& args, const fs::path& log) {
  [[maybe_unused]] const int rc = std::system((std::string(KRAMERS_CLI) + " " + args + " 2>" + log.string() + " >/dev/null").c_str());
  return read_file(log.string());
}

void same_tree(const fs::path& a, const fs::path& b) {
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto other = b / e.path().filename();
    REQUIRE(fs::exists(other));
    CHECK_MESSAGE(read_file(e.path().string()) == read_file(other.string()), e.path().filename().string());
    ++files;
  }
  CHECK(files == std::distance(fs::directory_iterator(b), fs::directory_iterator()));
}

}  // namespace

TEST_CASE("simulate with one path writes one trajectory and a manifest") {
  Sandbox box;
  const auto cfg = box.config("a.cfg", std::string(kBase) + "run.paths = 1\n");
  // run.paths appears twice: duplicate keys are rejected
  CHECK(cli("simulate --config " + cfg + " --out " + (box.root / "x").string()) == 2);
  std::string text = kBase;
  text.replace(text.find("run.paths = 150"), 15, "run.paths = 1");
  const auto ok = box.config("b.cfg", text);
  const auto out = box.root / "one";
  REQUIRE(cli("simulate --config " + ok + " --out " + out.string()) == 0);
  CHECK(std::distance(fs::directory_iterator(out), fs::directory_iterator()) == 2);
  CHECK(fs::exists(out / "trajectory_0000.csv"));
  const auto m = Report::read((out / "manifest.txt").string());
  CHECK(m.get("command") == "simulate");
  CHECK(m.get("files") == "1");
}

TEST_CASE("missing measure.kind is a config error naming the key") {
  Sandbox box;
  std::string text = kBase;
  text.erase(text.find("measure.kind"), std::string("measure.kind = exponential_light\n").size());
  const auto cfg = box.config("c.cfg", text);
  CHECK(cli("simulate --config " + cfg + " --out " + (box.root / "o").string()) == 2);
  CHECK(err_of("simulate --config " + cfg + " --out " + (box.root / "o").string(), box.root / "log")
            .find("measure.kind") != std::string::npos);
  CHECK(cli("simulate --config " + (box.root / "nope.cfg").string()) == 2);
  CHECK(cli("simulate") == 2);
  CHECK(cli("frobnicate --config " + cfg) == 2);
}

TEST_CASE("every command is deterministic across runs and worker counts") {
  Sandbox box;
  const auto cfg = box.config("d.cfg", kBase);
  for (const std::string cmd : {"simulate", "sample-measure", "quasipotential", "exit-stats", "kramers",
                                "cycle-diag", "is-exit"}) {
    CAPTURE(cmd);
    const auto a = box.root / (cmd + "_a"), b = box.root / (cmd + "_b"), c = box.root / (cmd + "_c");
    REQUIRE(cli(cmd + " --config " + cfg + " --out " + a.string()) == 0);
    REQUIRE(cli(cmd + " --config " + cfg + " --out " + b.string() + " --workers 1") == 0);
    REQUIRE(cli(cmd + " --config " + cfg + " --out " + c.string() + " --workers 3") == 0);
    same_tree(a, b);
    same_tree(a, c);
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() == ".txt") CHECK_NOTHROW(Report::read(e.path().string()));
    }
  }
}

TEST_CASE("a different seed changes the output") {
  Sandbox box;
  const auto cfg = box.config("e.cfg", kBase);
  REQUIRE(cli("exit-stats --config " + cfg + " --out " + (box.root / "s1").string()) == 0);
  REQUIRE(cli("exit-stats --config " + cfg + " --seed 12 --out " + (box.root / "s2").string()) == 0);
  CHECK(read_file((box.root / "s1" / "exit_stats.csv").string()) !=
        read_file((box.root / "s2" / "exit_stats.csv").string()));
}

TEST_CASE("kramers reports reference their quasipotential report") {
  Sandbox box;
  const auto cfg = box.config("f.cfg", kBase);
  const auto qp = box.root / "qp";
  REQUIRE(cli("quasipotential --config " + cfg + " --out " + qp.string()) == 0);
  const auto qp_report = Report::read((qp / "quasipotential.txt").string());
  CHECK(qp_report.get("result.argmin").find(';') != std::string::npos);
  CHECK(qp_report.has("result.trace.0"));
  const std::string qp_text = read_file((qp / "quasipotential.txt").string());

  const auto cfg2 = box.config("g.cfg", std::string(kBase) + "kramers.quasipotential_report = " +
                                            (qp / "quasipotential.txt").string() + "\n");
  const auto k = box.root / "k";
  REQUIRE(cli("kramers --config " + cfg2 + " --out " + k.string()) == 0);
  const auto rep = Report::read((k / "kramers.txt").string());
  CHECK(rep.get("quasipotential.fnv1a") == kramers::hex64(kramers::fnv1a(qp_text)));
  const std::string csv = read_file((k / "kramers.csv").string());
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.rfind("epsilon,mean,ci_lo,ci_hi,eps_log_mean,window_prob,concentration,timeout_fraction\n", 0) == 0);
}

TEST_CASE("flagged reports exit with 4 only under --strict") {
  Sandbox box;
  const auto cfg = box.config("h.cfg", std::string(kBase) + "run.t_cap = 0.5\n");
  CHECK(cli("exit-stats --config " + cfg + " --out " + (box.root / "f1").string()) == 0);
  CHECK(cli("exit-stats --config " + cfg + " --out " + (box.root / "f2").string() + " --strict") == 4);
  CHECK(cli("kramers --config " + cfg + " --out " + (box.root / "f3").string() + " --strict") == 4);
}
