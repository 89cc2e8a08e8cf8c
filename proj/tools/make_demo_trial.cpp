// Regenerates the committed demo trial bundle: one CSV + one schema JSON per
// demo endpoint, written into the directory given as argv[1] (default
// data/demo_trial).  The bundle is deterministic — every endpoint uses its
// own name-derived seed — so rerunning this tool must reproduce the
// committed files byte for byte.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "ordsim/trialio.hpp"

int main(int argc, char** argv) {
  const std::string out_dir = argc > 1 ? argv[1] : "data/demo_trial";
  try {
    std::filesystem::create_directories(out_dir);
    for (const ordsim::SyntheticEndpoint& e : ordsim::demo_endpoints()) {
      const ordsim::TrialDataset d =
          ordsim::synthetic_trial(e, ordsim::demo_trial_seed(e.name));
      ordsim::write_trial_csv(d, out_dir + "/" + e.name + ".csv");
      ordsim::write_schema_json(d.schema,
                                out_dir + "/" + e.name + ".schema.json");
      std::printf("%s: %zu subjects, %zu categories\n", e.name.c_str(),
                  d.rows.size(), d.j());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "make_demo_trial: %s\n", e.what());
    return 1;
  }
  return 0;
}
