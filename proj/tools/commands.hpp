// Command implementations behind the m2rec binary. Everything lives in a
// library so the commands can be driven in-process by tests; main.cpp is a
// thin argv forwarder. Every command is a pure function of (config, input
// files, seed): re-running one reproduces its outputs byte for byte.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "m2rec/corpus.hpp"
#include "m2rec/model.hpp"

namespace m2rec::cli {

// Exit codes of the m2rec binary.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;  ///< bad config / flags / references
inline constexpr int kExitData = 2;    ///< unreadable or malformed data

// Configuration problems: unknown keys, bad values, missing referenced
// paths. Distinct from DataError so the two exit codes stay separable.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The single JSON run configuration shared by prepare / train / evaluate.
// Every field can be overridden from the command line with
// --set section.key=value.
struct RunConfig {
  // dataset
  std::string interactions_path;
  std::string corpus_path;  ///< defaults to <output_dir>/corpus.json
  ParseMode parse_mode = ParseMode::strict;
  FilterSpec filter;

  // split
  std::string split_kind = "time";  ///< "time" | "order"
  std::int64_t cutoff_train_end = 0;
  std::int64_t cutoff_valid_end = 0;

  // model hyperparameters; the grid vectors, when non-empty, replace the
  // corresponding scalar for an exhaustive cross-product search
  Hyperparams hp;
  std::vector<std::uint32_t> grid_d;
  std::vector<double> grid_gamma;
  std::vector<double> grid_lambda;

  // evaluation
  std::vector<std::size_t> ks = {5, 10, 20};
  int max_horizon = 3;
  bool exclude_cold = false;
  bool include_validation = true;  ///< final-test protocol for contexts

  std::string output_dir = "m2rec_out";

  // Resolved corpus path (explicit or the output_dir default).
  std::string effective_corpus_path() const;
};

// Loads the JSON config, applies --set overrides (dotted paths; values
// parsed as JSON when possible, as strings otherwise) and validates keys
// and ranges. Unknown keys are configuration errors.
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);

// Parses the argument vector (without the program name) and runs one
// command. Human-readable progress goes to `out`, diagnostics and wall
// times to `err`. Returns one of the kExit* codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace m2rec::cli
