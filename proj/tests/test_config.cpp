#include <doctest.h>

#include <string>

#include "kramers/config.hpp"
#include "kramers/errors.hpp"
#include "kramers/report.hpp"

using namespace kramers;

namespace {

const char* kMinimal = R"(# benchmark
system.dimension = 1
system.drift = linear
domain.kind = interval
domain.lower = -1
domain.upper = 1
measure.kind = exponential_light
run.epsilon = 0.4, 0.2
)";

std::string error_of(const std::string& text) {
  try {
    ExperimentConfig::from(ConfigFile::parse(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config builds the benchmark") {
  const auto cfg = ExperimentConfig::from(ConfigFile::parse(kMinimal));
  REQUIRE(cfg.measure);
  CHECK(cfg.epsilons == std::vector<double>{0.4, 0.2});
  CHECK(cfg.system.domain.kind() == Domain::Kind::Box);
  Vec x = Vec::Constant(1, 0.5);
  CHECK(cfg.system.b(x)(0) == -0.5);
  CHECK(cfg.system.G(x) == 1.0);
}

TEST_CASE("config errors name the key and line") {
  CHECK(error_of(std::string(kMinimal) + "run.pahts = 3\n").find("line 9: unknown key 'run.pahts'") !=
        std::string::npos);
  std::string no_kind = kMinimal;
  no_kind.erase(no_kind.find("measure.kind"), std::string("measure.kind = exponential_light\n").size());
  CHECK(error_of(no_kind).find("measure.kind") != std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "run.seed = 2\nrun.seed = 3\n").find("duplicate") != std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "no equals sign\n").find("line 9") != std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "run.paths = many\n").find("run.paths") != std::string::npos);
}

TEST_CASE("affine G is clamped away from zero") {
  const auto cfg = ExperimentConfig::from(ConfigFile::parse(std::string(kMinimal) +
                                                            "system.G = affine\nsystem.G_slope = 2\n"
                                                            "system.G_floor = 0.25\n"));
  CHECK(cfg.system.G(Vec::Constant(1, -2.0)) == 0.25);
  CHECK(cfg.system.G(Vec::Constant(1, 0.5)) == 2.0);
}

TEST_CASE("reports round-trip") {
  Report r;
  r.set("value", 0.1 + 0.2);
  r.set("name", "a = b");
  r.set("count", 3);
  r.set("flag", true);
  const auto back = Report::parse(r.str());
  CHECK(back.str() == r.str());
  CHECK(back.get_double("value") == 0.1 + 0.2);
  CHECK(back.get("name") == "a = b");
  CHECK_THROWS(r.set("count", 4));
  CHECK_THROWS(Report::parse("schema_version = 99\n"));
}

TEST_CASE("tables use comma, LF and a header row") {
  Table t({"a", "b"});
  t.add({"1", "2.5"});
  CHECK(t.str() == "a,b\n1,2.5\n");
}
