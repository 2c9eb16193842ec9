#pragma once

#include <map>
#include <string>

#include "morl/trainer.hpp"

namespace morl {

// Experiment description parsed from a sectioned key/value manifest
// (docs/manifest_format.md). Unknown sections or keys are errors so typos
// fail loudly.
struct ExperimentManifest {
  std::string name;
  RunConfig config;
  std::string out_dir;
  bool plot = true;
};

// raw sectioned key/value view of the file; keys are "section.key"
std::map<std::string, std::string> parse_ini(const std::string& text);

ExperimentManifest parse_manifest_text(const std::string& text);
ExperimentManifest load_manifest(const std::string& path);

// Runs the full pipeline described by the manifest and writes its artifact
// files (metrics.csv, timings.csv, summary.txt, checkpoints, vocab.txt,
// optional curves.svg) into out_dir. Returns the result for callers that
// want the numbers.
RunResult execute_manifest(const ExperimentManifest& manifest);

}  // namespace morl
