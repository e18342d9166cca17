#include <doctest.h>

#include <kreinkit/runner.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kreinkit;
using runner::RunConfig;

TEST_CASE("configuration parsing") {
  const std::string text = R"(
# example configuration
[model]
kind = interval
n = 128

[run]
seed = 42
jmax = 6
p = 1 2 inf
z = -1 -10 1+2i 0.5-3i i

[extension soft]
kind = krein

[extension mixed]
kind = param
w = 0 1
b = 1 0 0 0 0 0 2 0
)";
  const RunConfig cfg = RunConfig::parse(text);
  CHECK(cfg.model_kind == "interval");
  CHECK(cfg.n == 128);
  CHECK(cfg.seed == 42);
  CHECK(cfg.jmax == 6);
  REQUIRE(cfg.p_list.size() == 3);
  CHECK(std::isinf(cfg.p_list[2]));
  REQUIRE(cfg.z_list.size() == 5);
  CHECK(cfg.z_list[2] == numlin::Complex(1, 2));
  CHECK(cfg.z_list[3] == numlin::Complex(0.5, -3));
  CHECK(cfg.z_list[4] == numlin::Complex(0, 1));
  REQUIRE(cfg.extension_specs.size() == 2);
  CHECK(cfg.extension_specs[0].name == "soft");
  CHECK(cfg.extension_specs[1].spec.b(1, 1) == numlin::Complex(2, 0));
}

TEST_CASE("malformed configuration reports the offending line") {
  try {
    RunConfig::parse("[model]\nkind = interval\nbogus line without equals\n");
    CHECK(false);
  } catch (const runner::ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(RunConfig::parse("[weird]\nx = 1\n"), runner::ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[run]\nz = 1+bogus\n"),
                  runner::ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[extension e]\nw = 0\n"),
                  runner::ConfigError);
}

TEST_CASE("verification battery passes on a small interval model") {
  RunConfig cfg;
  cfg.n = 256;
  cfg.jmax = 5;
  cfg.trial_count = 2000;
  cfg.z_list = {numlin::Complex(-1, 0), numlin::Complex(1, 2)};
  cfg.p_list = {1.0, 2.0};
  const auto result = runner::cmd_verify(cfg);
  CHECK(result.exit_code == 0);
  CHECK(result.report.records.size() >= 40);
  CHECK(result.report.all_pass());
  for (const auto& rec : result.report.records) CHECK_FALSE(rec.claim.empty());
}

TEST_CASE("coarse grids are flagged as advisories, exit 1") {
  RunConfig cfg;
  cfg.n = 32;
  const auto result = runner::cmd_verify(cfg);
  CHECK(result.exit_code == 1);
  CHECK_FALSE(result.report.all_pass());
  bool advisory = false;
  for (const auto& rec : result.report.records)
    advisory = advisory || rec.note.find("grid too coarse") != std::string::npos;
  CHECK(advisory);
}

TEST_CASE("seeded runs are byte-identical") {
  RunConfig cfg;
  cfg.n = 128;
  cfg.jmax = 4;
  cfg.trial_count = 200;
  cfg.p_list = {2.0};
  cfg.z_list = {numlin::Complex(-1, 0)};
  const auto r1 = runner::cmd_verify(cfg);
  const auto r2 = runner::cmd_verify(cfg);
  CHECK(runner::to_json(r1.report) == runner::to_json(r2.report));
  const auto s1 = runner::cmd_spectra(cfg);
  const auto s2 = runner::cmd_spectra(cfg);
  CHECK(runner::to_csv(s1.table) == runner::to_csv(s2.table));
}

TEST_CASE("counting-function table") {
  RunConfig cfg;
  cfg.n = 256;
  cfg.jmax = 10;
  const auto result = runner::cmd_spectra(cfg);
  CHECK(result.exit_code == 0);
  REQUIRE(result.table.rows.size() == 10);
  CHECK(result.table.header[0] == "j");
  for (const auto& row : result.table.rows) {
    const double ratio = std::stod(row[3]);
    CHECK(ratio >= 1.0 - 1e-6);
  }

  RunConfig dcfg = cfg;
  dcfg.model_kind = "dsum";
  dcfg.n = 128;
  dcfg.jmax = 20;
  const auto dresult = runner::cmd_spectra(dcfg);
  CHECK(dresult.exit_code == 0);
  CHECK(dresult.table.rows.size() == 20);

  RunConfig bad = cfg;
  bad.jmax = 100000;
  const auto bresult = runner::cmd_spectra(bad);
  CHECK(bresult.exit_code == 1);
  REQUIRE(bresult.table.rows.size() == 1);
  CHECK(bresult.table.rows[0][0] == "error");
}

TEST_CASE("operator-function samples along a contour") {
  RunConfig cfg;
  cfg.n = 192;
  cfg.z_list = {numlin::Complex(0, 1)};
  const auto result = runner::cmd_mfun(cfg);
  CHECK(result.exit_code == 0);
  // the z = i rows must carry the matrix i * I
  int checked = 0;
  for (const auto& row : result.table.rows) {
    if (row[0] == "0" && std::stod(row[1]) == 1.0 && row[2] == "ok") {
      CHECK(std::abs(std::stod(row[3])) < 1e-10);        // m00 re
      CHECK(std::stod(row[4]) == doctest::Approx(1.0));  // m00 im
      CHECK(std::abs(std::stod(row[5])) < 1e-10);        // m01 re
      ++checked;
    }
  }
  CHECK(checked >= 1);

  // the vertical-contour samples carry a growing Herglotz imaginary part
  std::vector<std::pair<double, double>> imtrace;
  for (const auto& row : result.table.rows) {
    if (row[0] == "-1" && row[2] == "ok") {
      const double t = std::stod(row[1]);
      if (t > 0)
        imtrace.emplace_back(t, std::stod(row[4]) + std::stod(row[10]));
    }
  }
  REQUIRE(imtrace.size() >= 10);
  for (std::size_t k = 1; k < imtrace.size(); ++k)
    CHECK(imtrace[k].second >= imtrace[k - 1].second);

  // a contour point in the spectrum is flagged and skipped
  auto model = cfg.build_model();
  extensions::ExtensionRealization hard(model,
                                        extensions::ExtensionSpec::friedrichs());
  RunConfig cross = cfg;
  cross.z_list = {numlin::Complex(hard.eigenvalues()(2), 0.0)};
  const auto crossed = runner::cmd_mfun(cross);
  bool skipped = false;
  for (const auto& row : crossed.table.rows)
    skipped = skipped || row[2] == "skipped";
  CHECK(skipped);
}

TEST_CASE("trace-ideal sweep with Richardson extrapolation") {
  RunConfig cfg;
  cfg.n = 512;  // sweep runs n/4, n/2, n
  cfg.p_list = {2.0};
  const auto result = runner::cmd_schatten(cfg);
  CHECK(result.exit_code == 0);
  REQUIRE(result.table.rows.size() == 3);
  const double extrap = std::stod(result.table.rows.back().back());
  // the reduced-inverse Hilbert-Schmidt norm has an exact closed form
  const double oracle = std::sqrt(11.0 / 12600.0);
  CHECK(std::abs(extrap - oracle) < 1e-4);

  RunConfig empty = cfg;
  empty.p_list = {};
  const auto eresult = runner::cmd_schatten(empty);
  CHECK(eresult.exit_code == 2);
}

TEST_CASE("atomic writes and report serialization") {
  RunConfig cfg;
  cfg.n = 128;
  cfg.jmax = 3;
  const auto spectra = runner::cmd_spectra(cfg);
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "kreinkit_test_out";
  std::filesystem::remove_all(dir);
  const auto path = dir / "spectra.csv";
  runner::write_atomic(path, runner::to_csv(spectra.table));
  CHECK(std::filesystem::exists(path));
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "j,mu_F,mu_K,mu_K_over_mu_F");
  std::filesystem::remove_all(dir);
}
