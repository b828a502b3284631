// Command-line front end: one subcommand per experiment kind plus a
// validate-only mode. Exit codes: 0 success, 2 rejected input (schema,
// model, data, domain), 3 iteration or numerical failure.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "mprt/experiment.hpp"

namespace {

int run(const std::string& kind, const std::string& spec_path, const std::string& out_dir,
        int threads, bool quiet) {
  mprt::thread_count() = threads;
  try {
    mprt::json spec = mprt::load_spec(spec_path);
    if (kind == "validate") {
      mprt::ResolvedSpec r = mprt::validate_spec(spec);
      if (!quiet)
        std::fprintf(stderr, "spec OK: kind=%s h=%g cells=%d\n", r.kind.c_str(), r.h,
                     r.grid->n_active());
      return 0;
    }
    if (spec.value("kind", "") != kind) {
      std::fprintf(stderr, "error: spec kind '%s' does not match subcommand '%s'\n",
                   spec.value("kind", "").c_str(), kind.c_str());
      return 2;
    }
    mprt::RunOutcome out = mprt::run_experiment(spec, out_dir, quiet);
    std::printf("%s\n", out.dir.c_str());
    return 0;
  } catch (const mprt::iteration_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const mprt::numerical_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const mprt::error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mprt: radiative transport with state-dependent absorption"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mprt::tool_version());

  const char* kinds[] = {"forward",        "diffusion",      "invert",  "spectral-scan",
                         "stability-scan", "diffusion-limit-scan", "validate"};
  std::string spec_path, out_dir = "runs";
  int threads = 1;
  bool quiet = false;

  for (const char* k : kinds) {
    CLI::App* sub = app.add_subcommand(k, std::string("run the ") + k + " experiment");
    sub->add_option("--spec", spec_path, "experiment spec (JSON)")->required();
    sub->add_option("--out", out_dir, "output root for run directories");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", quiet, "suppress progress output");
  }

  CLI11_PARSE(app, argc, argv);
  return run(app.get_subcommands().front()->get_name(), spec_path, out_dir, threads, quiet);
}
