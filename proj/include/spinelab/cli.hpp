#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spinelab/verify.hpp"

namespace spinelab {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Command { Spectral, Forward, Spine, VerifyAll, VerifyAnalytic, KsLimit };

struct RunConfig {
  Command command = Command::Spectral;
  std::string spec_path;
  std::vector<double> mu;  // empty: delta at type 1
  double horizon = 1.0;
  std::vector<double> eval_times;  // empty: command default
  std::vector<double> f;           // test function for verify analytic (empty: all ones)
  std::size_t n_paths = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: default_threads()
  std::string out_path;  // empty: stdout
  VerifyConfig thresholds{};
};

/// FNV-1a over the canonical JSON form of the spec.
std::string spec_hash(const ModelSpec& spec);

/// Executes one command. Exit codes: 0 success / all tests pass, 1 a test
/// failed, 2 usage or spec error. Machine output goes to out_path (or `out`
/// when empty); diagnostics go to `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv into a RunConfig and runs it.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spinelab
