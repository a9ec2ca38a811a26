// Round trips and corruption handling for the on-disk formats, then
// subprocess-level checks of the command line driver: exit codes, artifact
// layout and byte-for-byte determinism of repeated runs.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slipstokes/common.hpp"
#include "slipstokes/grid.hpp"
#include "slipstokes/io.hpp"
#include "slipstokes/rng.hpp"

using namespace slipstokes;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path d = fs::temp_directory_path() / ("slipstokes_test_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spew(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  REQUIRE(out.good());
}

// Runs the installed driver binary with the given arguments, output
// discarded, and returns its exit status.
int run_cli(const std::string& args) {
  const char* bin = std::getenv("SS_CLI_BIN");
  REQUIRE(bin != nullptr);
  const std::string cmd = std::string(bin) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  REQUIRE(st != -1);
  REQUIRE(WIFEXITED(st));
  return WEXITSTATUS(st);
}

io::json norms_config() {
  return io::json{
      {"subcommand", "norms"},
      {"seed", 5},
      {"grid", {{"n", 16}}},
      {"refinements", 1},
      {"slopes", {0.05, 0.1, 0.15}},
      {"tolerances",
       {{"gagliardo_deviation", 0.1}, {"multiplier_slope_deviation", 0.5}}},
  };
}

}  // namespace

TEST_CASE("grid fields survive a binary round trip") {
  const fs::path dir = fresh_dir("field_rt");
  const Grid2 g{1.5, 2.25, 12, 20};

  GridField f(g, 2);
  Rng rng(99);
  for (double& v : f.raw()) v = rng.uniform(-1.0, 1.0);

  const std::string path = (dir / "f.bin").string();
  io::write_field(path, f);
  const GridField back = io::read_field(path);
  CHECK(back.rank() == 2);
  CHECK(back.grid() == g);
  CHECK(back.raw() == f.raw());  // bitwise

  GridField s(g, 0);
  for (double& v : s.raw()) v = rng.normal();
  const std::string spath = (dir / "s.bin").string();
  io::write_field(spath, s);
  CHECK(io::read_field(spath).raw() == s.raw());
}

TEST_CASE("malformed field files are rejected") {
  const fs::path dir = fresh_dir("field_bad");
  const Grid2 g{kTwoPi, kPi, 8, 10};
  GridField f(g, 1);
  Rng rng(7);
  for (double& v : f.raw()) v = rng.normal();
  const fs::path path = dir / "f.bin";
  io::write_field(path.string(), f);
  const std::string good = slurp(path);

  SUBCASE("wrong magic") {
    std::string bad = good;
    bad[0] = 'X';
    spew(path, bad);
    CHECK_THROWS_AS(io::read_field(path.string()), Error);
  }
  SUBCASE("absurd header length") {
    std::string bad = good;
    for (int k = 8; k < 12; ++k) bad[k] = static_cast<char>(0xFF);
    spew(path, bad);
    CHECK_THROWS_AS(io::read_field(path.string()), Error);
  }
  SUBCASE("mangled header json") {
    std::string bad = good;
    bad[12] = 'X';  // header starts right after magic + length
    spew(path, bad);
    CHECK_THROWS_AS(io::read_field(path.string()), Error);
  }
  SUBCASE("truncated payload") {
    spew(path, good.substr(0, good.size() - 8));
    CHECK_THROWS_AS(io::read_field(path.string()), Error);
  }
  SUBCASE("trailing garbage") {
    spew(path, good + '\0');
    CHECK_THROWS_AS(io::read_field(path.string()), Error);
  }
  SUBCASE("non-finite payload") {
    std::string bad = good;
    const char nan_le[8] = {0, 0, 0, 0, 0, 0, static_cast<char>(0xF8),
                            static_cast<char>(0x7F)};
    bad.replace(bad.size() - 8, 8, nan_le, 8);
    spew(path, bad);
    CHECK_THROWS_AS(io::read_field(path.string()), Error);
  }
  SUBCASE("write refuses non-finite values") {
    f.at(0, 3, 4) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(io::write_field((dir / "nan.bin").string(), f), Error);
  }
  SUBCASE("write refuses empty fields") {
    CHECK_THROWS_AS(io::write_field((dir / "empty.bin").string(), GridField{}),
                    Error);
  }
}

TEST_CASE("json files round trip with a stable layout") {
  const fs::path dir = fresh_dir("json_rt");
  const io::json j{{"a", 1},
                   {"b", {1, 2, 3}},
                   {"c", {{"d", true}, {"e", "text"}}}};
  const fs::path path = dir / "j.json";
  io::write_json(path.string(), j);
  CHECK(io::read_json(path.string()) == j);
  CHECK(slurp(path) == j.dump(2) + "\n");
  CHECK_THROWS_AS(io::read_json((dir / "missing.json").string()), Error);
}

TEST_CASE("csv output is deterministic text") {
  const fs::path dir = fresh_dir("csv");
  const fs::path path = dir / "t.csv";
  io::write_csv(path.string(), {"n", "err"},
                {{1.0, 0.5}, {2.0, 0.0625}, {-3.0, 0.1}});
  CHECK(slurp(path) == "n,err\n1,0.5\n2,0.0625\n-3,0.10000000000000001\n");
  CHECK_THROWS_AS(io::write_csv(path.string(), {"a", "b"}, {{1.0}}), Error);

  CHECK(io::format_double(1.0) == "1");
  CHECK(io::format_double(0.0625) == "0.0625");
  CHECK(io::format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("the norms driver writes deterministic artifacts on success") {
  const fs::path dir = fresh_dir("cli_ok");
  const fs::path cfg = dir / "norms.json";
  io::write_json(cfg.string(), norms_config());

  const fs::path out1 = dir / "out1";
  REQUIRE(run_cli("norms --config " + cfg.string() + " --out " + out1.string()) == 0);

  const io::json summary = io::read_json((out1 / "summary.json").string());
  CHECK(summary.at("ok").get<bool>());
  CHECK(summary.at("subcommand").get<std::string>() == "norms");
  CHECK(summary.at("seed").get<uint64_t>() == 5);
  REQUIRE(summary.at("checks").is_array());
  REQUIRE(summary.at("checks").size() == 2);
  for (const auto& chk : summary.at("checks")) CHECK(chk.at("pass").get<bool>());
  CHECK(fs::exists(out1 / "tables" / "gagliardo.csv"));
  CHECK(fs::exists(out1 / "tables" / "multiplier.csv"));
  CHECK(fs::exists(out1 / "sweeps.jsonl"));

  // Same config, fresh directory: every artifact must be byte-identical.
  const fs::path out2 = dir / "out2";
  REQUIRE(run_cli("norms --config " + cfg.string() + " --out " + out2.string()) == 0);
  CHECK(slurp(out1 / "summary.json") == slurp(out2 / "summary.json"));
  CHECK(slurp(out1 / "tables" / "gagliardo.csv") ==
        slurp(out2 / "tables" / "gagliardo.csv"));
  CHECK(slurp(out1 / "tables" / "multiplier.csv") ==
        slurp(out2 / "tables" / "multiplier.csv"));
  CHECK(slurp(out1 / "sweeps.jsonl") == slurp(out2 / "sweeps.jsonl"));
}

TEST_CASE("a failed check exits with status one and an honest summary") {
  const fs::path dir = fresh_dir("cli_fail");
  io::json doc = norms_config();
  doc["tolerances"]["gagliardo_deviation"] = 1e-30;  // unreachable on purpose
  const fs::path cfg = dir / "norms.json";
  io::write_json(cfg.string(), doc);

  const fs::path out = dir / "out";
  CHECK(run_cli("norms --config " + cfg.string() + " --out " + out.string()) == 1);

  // Artifacts are still written so the failure can be inspected.
  const io::json summary = io::read_json((out / "summary.json").string());
  CHECK_FALSE(summary.at("ok").get<bool>());
  bool any_fail = false;
  for (const auto& chk : summary.at("checks"))
    if (!chk.at("pass").get<bool>()) any_fail = true;
  CHECK(any_fail);
}

TEST_CASE("configuration errors exit with status two and write nothing") {
  const fs::path dir = fresh_dir("cli_cfg");
  const fs::path out = dir / "out";

  SUBCASE("unknown key") {
    io::json doc = norms_config();
    doc["extra"] = 1;
    const fs::path cfg = dir / "bad.json";
    io::write_json(cfg.string(), doc);
    CHECK(run_cli("norms --config " + cfg.string() + " --out " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out / "summary.json"));
  }
  SUBCASE("config written for a different subcommand") {
    const fs::path cfg = dir / "norms.json";
    io::write_json(cfg.string(), norms_config());
    CHECK(run_cli("rough-solve --config " + cfg.string() + " --out " + out.string()) ==
          2);
    CHECK_FALSE(fs::exists(out / "summary.json"));
  }
  SUBCASE("missing config file") {
    CHECK(run_cli("norms --config " + (dir / "nope.json").string() + " --out " +
                  out.string()) == 2);
  }
  SUBCASE("missing required flags") {
    CHECK(run_cli("norms --out " + out.string()) == 2);
  }
  SUBCASE("bad thread count") {
    const fs::path cfg = dir / "norms.json";
    io::write_json(cfg.string(), norms_config());
    CHECK(run_cli("norms --threads 0 --config " + cfg.string() + " --out " +
                  out.string()) == 2);
  }
  SUBCASE("wrong value type") {
    io::json doc = norms_config();
    doc["grid"]["n"] = "sixteen";
    const fs::path cfg = dir / "bad.json";
    io::write_json(cfg.string(), doc);
    CHECK(run_cli("norms --config " + cfg.string() + " --out " + out.string()) == 2);
  }
}

TEST_CASE("a seed override flows into the recorded configuration") {
  const fs::path dir = fresh_dir("cli_seed");
  const fs::path cfg = dir / "norms.json";
  io::write_json(cfg.string(), norms_config());

  const fs::path out = dir / "out";
  REQUIRE(run_cli("norms --seed 77 --config " + cfg.string() + " --out " +
                  out.string()) == 0);
  const io::json summary = io::read_json((out / "summary.json").string());
  CHECK(summary.at("seed").get<uint64_t>() == 77);
  CHECK(summary.at("config").at("seed").get<uint64_t>() == 77);
}
