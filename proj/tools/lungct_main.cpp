#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lungct/commands.hpp"
#include "lungct/errors.hpp"

namespace {

lungct::Connectivity parse_connectivity(int c) {
  if (c == 6) return lungct::Connectivity::Face6;
  if (c == 26) return lungct::Connectivity::Full26;
  throw CLI::ValidationError("--connectivity", "must be 6 or 26");
}

// "LO:HI", both integers, LO <= HI.
std::pair<int, int> parse_band(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--nl-band", "expected LO:HI");
  try {
    const int lo = std::stoi(s.substr(0, colon));
    const int hi = std::stoi(s.substr(colon + 1));
    if (lo > hi) throw CLI::ValidationError("--nl-band", "LO must be <= HI");
    return {lo, hi};
  } catch (const std::invalid_argument&) {
    throw CLI::ValidationError("--nl-band", "expected integer LO:HI");
  }
}

std::vector<lungct::Outcome> parse_outcomes(const std::string& s) {
  if (s == "icu") return {lungct::Outcome::Icu};
  if (s == "death") return {lungct::Outcome::Death};
  if (s == "both") return {lungct::Outcome::Icu, lungct::Outcome::Death};
  throw CLI::ValidationError("--outcome", "must be icu, death or both");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CT-derived feature extraction and outcome prediction"};
  app.set_version_flag("--version", lungct::kToolVersion);
  app.require_subcommand(1);

  std::string input, output, outcome = "both", nl_band, output_csv;
  std::string pred, truth;
  std::vector<std::string> family_names;
  int repeats = 10, connectivity = 26;
  std::uint64_t seed = 0;
  int patients = 10, nx = 32, ny = 32, nz = 24;
  std::vector<double> spacing{1.5, 1.5, 3.0};

  auto* extract = app.add_subcommand("extract", "Extract per-patient features");
  extract->add_option("--input", input, "Cohort directory with ehr.csv")
      ->required();
  extract->add_option("--output", output, "Output directory")->required();
  extract->add_option("--connectivity", connectivity,
                      "Component connectivity, 6 or 26");
  extract->add_option("--nl-band", nl_band,
                      "Normal-lung HU band as LO:HI (default -900:-700)");
  extract->add_option("--seed", seed, "Base random seed");

  auto* experiment =
      app.add_subcommand("experiment", "Repeated LOPO evaluation");
  experiment->add_option("--input", input, "Feature table CSV")->required();
  experiment->add_option("--output", output, "Output directory")->required();
  experiment->add_option("--outcome", outcome, "icu, death or both");
  experiment->add_option("--family", family_names,
                         "Model family, repeatable (default: all five)");
  experiment->add_option("--repeats", repeats, "Number of repeated runs");
  experiment->add_option("--seed", seed, "Base random seed");

  auto* phantom =
      app.add_subcommand("phantom", "Generate a synthetic test cohort");
  phantom->add_option("--output", output, "Output directory")->required();
  phantom->add_option("--patients", patients, "Number of patients");
  phantom->add_option("--nx", nx, "Voxels along x");
  phantom->add_option("--ny", ny, "Voxels along y");
  phantom->add_option("--nz", nz, "Voxels along z");
  phantom->add_option("--spacing", spacing, "Voxel spacing in mm (3 values)")
      ->expected(3);
  phantom->add_option("--seed", seed, "Base random seed");

  auto* segquality =
      app.add_subcommand("segquality", "Dice/RVE between mask directories");
  segquality->add_option("--pred", pred, "Predicted mask directory")
      ->required();
  segquality->add_option("--truth", truth, "Ground-truth mask directory")
      ->required();
  segquality->add_option("--output", output_csv, "Optional per-pair CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lungct::kExitBadInput;
  }

  try {
    if (*extract) {
      lungct::ExtractConfig config;
      config.input_dir = input;
      config.output_dir = output;
      config.connectivity = parse_connectivity(connectivity);
      if (!nl_band.empty()) {
        const auto [lo, hi] = parse_band(nl_band);
        config.nl_band_lo = lo;
        config.nl_band_hi = hi;
      }
      config.seed = seed;
      return lungct::cmd_extract(config, std::cerr);
    }
    if (*experiment) {
      lungct::ExperimentConfig config;
      config.input_csv = input;
      config.output_dir = output;
      config.outcomes = parse_outcomes(outcome);
      for (const auto& name : family_names)
        config.families.push_back(lungct::parse_family(name));
      config.repeats = repeats;
      config.seed = seed;
      return lungct::cmd_experiment(config, std::cerr);
    }
    if (*phantom) {
      lungct::PhantomCmdConfig config;
      config.output_dir = output;
      config.phantom.patients = patients;
      config.phantom.nx = nx;
      config.phantom.ny = ny;
      config.phantom.nz = nz;
      config.phantom.spacing_mm = {spacing[0], spacing[1], spacing[2]};
      config.phantom.seed = seed;
      return lungct::cmd_phantom(config, std::cerr);
    }
    if (*segquality) {
      lungct::SegQualityConfig config;
      config.pred_dir = pred;
      config.truth_dir = truth;
      config.output_csv = output_csv;
      return lungct::cmd_segquality(config, std::cout);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lungct::kExitBadInput;
  } catch (const lungct::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lungct::kExitBadInput;
  } catch (const lungct::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lungct::kExitRuntime;
  }
  return lungct::kExitRuntime;
}
