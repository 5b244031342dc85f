// gpwc command-line front end: run, catalog, validate.

#include "gpwc/catalog.hpp"
#include "gpwc/runner.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace fs = std::filesystem;

namespace {

struct RunFlags {
  std::vector<std::string> files;
  std::vector<std::string> overrides;
  std::string output_dir = ".";
  int jobs = 1;
  bool echo_config = false;
  std::optional<double> tol_rel, tol_abs, horizon;
};

gpwc::Json prepare(const std::string& file, const RunFlags& f) {
  gpwc::Json doc = gpwc::load_scenario_file(file);
  for (const auto& o : f.overrides) gpwc::apply_override(doc, o);
  auto set = [&](const char* key, const std::optional<double>& v) {
    if (v) gpwc::apply_override(doc, std::string("integrator.") + key + "=" + gpwc::Json(*v).dump());
  };
  set("rel_tol", f.tol_rel);
  set("abs_tol", f.tol_abs);
  set("horizon", f.horizon);
  return doc;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw gpwc::ValidationError("cannot write '" + p.string() + "'");
  out << content;
}

// Returns an error message, empty on success.
std::string run_one(const std::string& file, const RunFlags& f, int inner_jobs, std::string& log) {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const gpwc::Json doc = prepare(file, f);
    const gpwc::Scenario sc = gpwc::build_scenario(doc);
    const gpwc::RunResult res = gpwc::run_scenario(sc, {inner_jobs});
    const fs::path dir(f.output_dir);
    fs::create_directories(dir);
    write_file(dir / (sc.prefix + ".report.json"), gpwc::render_machine(res.report));
    write_file(dir / (sc.prefix + ".report.txt"), gpwc::render_human(res.report));
    for (const auto& a : res.artifacts) write_file(dir / a.file, a.content);
    if (f.echo_config) write_file(dir / (sc.prefix + ".echo.scn"), doc.dump(2) + "\n");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string summary;
    const auto& r = res.report["results"];
    if (r.contains("certificate")) summary = r["certificate"]["verdict"].get<std::string>();
    else if (r.contains("outcome")) summary = r["outcome"]["kind"].get<std::string>();
    else if (r.contains("divergence")) summary = r["divergence"]["kind"].get<std::string>();
    else if (r.contains("summary") && r["summary"].contains("all_pass"))
      summary = r["summary"]["all_pass"].get<bool>() ? "envelope holds" : "envelope violated";
    else if (r.contains("outcomes")) summary = std::to_string(r["entries"].get<std::size_t>()) + " entries";
    log = sc.name + " [" + sc.task + "] " + summary + " (" + std::to_string(secs) + " s)\n";
    return {};
  } catch (const gpwc::Error& e) {
    return file + ": " + e.what();
  } catch (const std::exception& e) {
    return file + ": error: " + e.what();
  }
}

int cmd_run(const RunFlags& f) {
  const std::size_t n = f.files.size();
  std::vector<std::string> errors(n), logs(n);
  const int workers = std::max(1, std::min<int>(f.jobs, static_cast<int>(n)));
  // A single scenario gets the threads for its own parallel map.
  const int inner = n == 1 ? f.jobs : 1;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) errors[i] = run_one(f.files[i], f, inner, logs[i]);
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  int rc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::cerr << logs[i];
    if (!errors[i].empty()) {
      std::cerr << errors[i] << '\n';
      rc = 1;
    }
  }
  return rc;
}

int cmd_validate(const RunFlags& f) {
  int rc = 0;
  for (const auto& file : f.files) {
    try {
      const gpwc::Scenario sc = gpwc::build_scenario(prepare(file, f));
      std::cout << file << ": ok (" << sc.name << ", " << sc.task << ")\n";
    } catch (const std::exception& e) {
      std::cerr << file << ": " << e.what() << '\n';
      rc = 1;
    }
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory integration, completeness certificates and plane-wave geodesics"};
  app.set_version_flag("--version", std::string(gpwc::kToolName) + " " + gpwc::kToolVersion);
  app.require_subcommand(1);

  RunFlags flags;
  auto add_common = [&](CLI::App* c) {
    c->add_option("scenarios", flags.files, "Scenario files (.scn)")->required()->check(CLI::ExistingFile);
    c->add_option("--set,-s", flags.overrides, "Override a scenario key: section.key=value");
    c->add_option("--tol-rel", flags.tol_rel, "Integrator relative tolerance");
    c->add_option("--tol-abs", flags.tol_abs, "Integrator absolute tolerance");
    c->add_option("--horizon", flags.horizon, "Integration horizon");
  };
  auto* run = app.add_subcommand("run", "Run scenarios and write reports and CSV files");
  add_common(run);
  run->add_option("--output-dir,-o", flags.output_dir, "Directory for reports and artifacts");
  run->add_option("--jobs,-j", flags.jobs, "Scenarios run concurrently")->check(CLI::Range(1, 256));
  run->add_flag("--echo-config", flags.echo_config, "Also write the effective scenario as <prefix>.echo.scn");
  auto* validate = app.add_subcommand("validate", "Parse and validate scenarios without running them");
  add_common(validate);
  auto* catalog = app.add_subcommand("catalog", "List built-in manifolds, potentials, tensors and waves");

  CLI11_PARSE(app, argc, argv);
  if (*catalog) {
    std::cout << gpwc::list_catalog();
    return 0;
  }
  if (*validate) return cmd_validate(flags);
  return cmd_run(flags);
}
