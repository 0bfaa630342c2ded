#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "command.hpp"

using forumtag::cli::Command;

namespace {

struct TempJson {
  explicit TempJson(const std::string& body) : path("test_cli_settings_" + std::to_string(counter++) + ".json") {
    std::ofstream(path) << body;
  }
  ~TempJson() { std::remove(path.c_str()); }
  std::string path;
  static inline int counter = 0;
};

void parse(CLI::App& app, std::vector<std::string> args) {
  std::vector<const char*> argv{"prog"};
  for (const auto& a : args) argv.push_back(a.c_str());
  app.parse(static_cast<int>(argv.size()), const_cast<char**>(argv.data()));
}

struct Fixture {
  Fixture() : cmd(app, "run", "test") {
    cmd.option("--context-cap", cap, "cap");
    cmd.flag("--verbose", verbose, "verbose");
    cmd.tunable<std::size_t>("--hidden", "hidden");
  }
  CLI::App app;
  Command cmd;
  std::size_t cap = 5;
  bool verbose = false;
};

}  // namespace

TEST_CASE("defaults apply without flags or file") {
  Fixture f;
  parse(f.app, {"run"});
  CHECK(f.cmd.resolve().empty());
  CHECK(f.cap == 5);
  CHECK(f.cmd.seed == 1);
  CHECK_FALSE(f.cmd.json);
  CHECK(f.cmd.overrides().empty());
}

TEST_CASE("file values fill options that were not given") {
  TempJson file(R"({"context_cap": 3, "seed": 9, "json": true, "verbose": true})");
  Fixture f;
  parse(f.app, {"run", "--config", file.path});
  f.cmd.resolve();
  CHECK(f.cap == 3);
  CHECK(f.cmd.seed == 9);
  CHECK(f.cmd.json);
  CHECK(f.verbose);
}

TEST_CASE("flags override the file") {
  TempJson file(R"({"context_cap": 3, "seed": 9, "hidden": 7})");
  Fixture f;
  parse(f.app, {"run", "--config", file.path, "--context-cap", "2", "--seed", "4", "--hidden", "8"});
  const auto rest = f.cmd.resolve(true);
  CHECK(f.cap == 2);
  CHECK(f.cmd.seed == 4);
  CHECK(rest.at("hidden") == 7);
  CHECK(f.cmd.overrides().at("hidden") == 8);
}

TEST_CASE("unknown and mistyped keys are rejected") {
  TempJson unknown(R"({"contxt_cap": 3})");
  Fixture a;
  parse(a.app, {"run", "--config", unknown.path});
  CHECK_THROWS_AS(a.cmd.resolve(), forumtag::ValidationError);

  TempJson mistyped(R"({"context_cap": "three"})");
  Fixture b;
  parse(b.app, {"run", "--config", mistyped.path});
  CHECK_THROWS_AS(b.cmd.resolve(), forumtag::ValidationError);

  TempJson broken("{not json");
  Fixture c;
  parse(c.app, {"run", "--config", broken.path});
  CHECK_THROWS_AS(c.cmd.resolve(), forumtag::ParseError);
}

TEST_CASE("flag names map to config keys") {
  CHECK(forumtag::cli::key_of("--context-cap") == "context_cap");
  CHECK(forumtag::cli::key_of("--seed") == "seed");
}
