#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ordsim {

// Command-line front end over the library: four subcommands sharing one
// entry point so tests can drive the binary in-process.
//
//   simulate <config> [--resume] [--scenarios F] [--nsim-override N]
//                     [--exclude-divergent] [--jobs N]
//       Loads a run configuration (TOML-style key/value document, or JSON),
//       executes every grid scenario against the configured output
//       directory, then rebuilds the aggregate CSV and manifest from the
//       record files on disk.  --scenarios keeps scenarios whose key
//       contains any of the comma-separated substrings; --resume keeps
//       valid record prefixes instead of recomputing them.
//
//   fit <data> --schema S [--model L|all] [--arms C:T] [sampler flags]
//              [--sparse-threshold N] [--jobs N] [--out STEM]
//       Complete-case analysis of one trial endpoint: writes STEM.csv and
//       STEM.ndjson (default stem: data file name with the extension
//       replaced by "-analysis") and prints one per-cut-point table per
//       model.  Printed numbers use the same %.6g formatting as the CSV.
//
//   report <records> --kind K [--format csv|svg] [--out PATH]
//       Renders recorded results.  Metric kinds (bias, relbias, coverage,
//       mse) read an aggregate CSV and emit tidy tables or per-scenario
//       panel figures; kind "forest" reads a fit's .ndjson records and
//       emits the per-cut-point forest (CSV table or SVG).
//
//   validate [--suite gradients|oracle|sampler|dgm|all]
//       Runs the self-check suites and prints one PASS/FAIL line each.
//
// Exit codes: 0 success; 1 usage, configuration, or I/O error; 2 completed
// with computational failures (failed fits, failed checks, or an aggregate
// that could not be built).  The ORDSIM_SEED environment variable, when
// set, overrides the seed from every other source in simulate and fit.
//
// `args` excludes the program name.  All diagnostics go to `err`; results
// and progress go to `out`.  Never throws: errors become messages + code.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace ordsim
