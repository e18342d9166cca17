// Command-line runner: configures a model, realizes an extension family,
// runs the verification suites, and writes machine-readable reports.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "kreinkit/runner.hpp"

namespace {

using kreinkit::runner::CommandResult;
using kreinkit::runner::RunConfig;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string model;
  long n = -1;
  long long seed = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "configuration file path");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "random seed override");
  cmd->add_option("--n", flags.n, "grid size override");
  cmd->add_option("--model", flags.model,
                  "model override: interval | halfline | dsum");
}

RunConfig resolve(const CommonFlags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) cfg = RunConfig::load(flags.config_path);
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (!flags.model.empty()) cfg.model_kind = flags.model;
  if (flags.n > 0) cfg.n = flags.n;
  if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
  return cfg;
}

int write_csv_result(const RunConfig& cfg, const CommandResult& result,
                     const std::string& name) {
  const std::filesystem::path path =
      std::filesystem::path(cfg.out_dir) / (name + ".csv");
  kreinkit::runner::write_atomic(path, kreinkit::runner::to_csv(result.table));
  std::printf("%s: wrote %s (%zu rows), exit %d\n", name.c_str(),
              path.string().c_str(), result.table.rows.size(),
              result.exit_code);
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical toolkit for nonnegative self-adjoint extensions"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto* verify = app.add_subcommand(
      "verify", "run all module invariant suites and write a JSON report");
  auto* spectra = app.add_subcommand(
      "spectra", "counting-function table for the hard/soft extension pair");
  auto* mfun = app.add_subcommand(
      "mfun", "M-operator samples along a contour (CSV)");
  auto* schatten = app.add_subcommand(
      "schatten", "trace-ideal quantities across grid refinements (CSV)");
  for (auto* cmd : {verify, spectra, mfun, schatten}) add_common(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = resolve(flags);
    if (verify->parsed()) {
      const CommandResult result = kreinkit::runner::cmd_verify(cfg);
      const std::filesystem::path path =
          std::filesystem::path(cfg.out_dir) / "verify.json";
      kreinkit::runner::write_atomic(path,
                                     kreinkit::runner::to_json(result.report));
      std::printf("verify: %zu checks, %d failures -> %s\n",
                  result.report.records.size(), result.report.failures(),
                  path.string().c_str());
      for (const auto& rec : result.report.records) {
        if (!rec.pass)
          std::printf("  FAIL %s [%s] residual=%.3e tol=%.3e %s\n",
                      rec.id.c_str(), rec.claim.c_str(), rec.residual,
                      rec.tolerance, rec.note.c_str());
      }
      return result.exit_code;
    }
    if (spectra->parsed())
      return write_csv_result(cfg, kreinkit::runner::cmd_spectra(cfg), "spectra");
    if (mfun->parsed())
      return write_csv_result(cfg, kreinkit::runner::cmd_mfun(cfg), "mfun");
    if (schatten->parsed())
      return write_csv_result(cfg, kreinkit::runner::cmd_schatten(cfg), "schatten");
  } catch (const kreinkit::runner::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
