#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spinelab/linalg.hpp"
#include "spinelab/model.hpp"
#include "spinelab/rng.hpp"

namespace spinelab {

struct PopulationState {
  Vector masses;
  double time = 0.0;
};

/// Between jumps the masses follow x' = F x with
///   F_jj = -(a(j) + mean PiL(j)),  F_ji = c(i) p_ij  (i != j),
/// i.e. the compensator of the local jumps plus the first-order non-local
/// mass transfer. Together with the jumps this reproduces the mean matrix A.
Matrix build_flow_matrix(const ModelSpec& spec);

/// masses <- e^{F dt} masses
PopulationState flow(const PopulationState& state, double dt, const Matrix& F);

enum class JumpKind : std::uint8_t { Local, NonLocal };

struct JumpEvent {
  double time;
  int type;
  JumpKind kind;
  double size;
};

struct ForwardOptions {
  double window = 0.1;              // look-ahead window for the thinning bound
  std::uint64_t event_cap = 10'000'000;
  bool record_events = false;
};

struct PathSample {
  std::vector<Vector> states;  // one per requested evaluation time
  std::vector<JumpEvent> events;
  std::uint64_t n_events = 0;
  std::uint64_t n_candidates = 0;
  bool extinct = false;
  bool capped = false;  // only set when partial results were requested
  double cap_time = 0.0;
};

/// Exact event-driven simulation of the K-type process: deterministic linear
/// flow between jumps, jumps sampled by thinning against
///   R = lambda_max <1, x> e^{omega (window end - t)},
/// lambda_i = |PiL(i)| + |PiNL(i)| and omega the largest positive column sum
/// of F, which bounds the growth of total mass along the flow.
///
/// A local jump of type i adds theta e_i; a non-local jump adds theta p(i, .).
/// Both sizes are plain draws from the normalised jump measure.
class ForwardSimulator {
 public:
  explicit ForwardSimulator(const ModelSpec& spec, ForwardOptions options = {});

  const ModelSpec& spec() const noexcept { return *spec_; }
  const Matrix& flow_matrix() const noexcept { return F_; }
  const ForwardOptions& options() const noexcept { return options_; }

  /// eval_times must be sorted and inside [0, T]. Throws EventCapError when
  /// the path needs more than options().event_cap jumps.
  PathSample simulate(const Vector& mu0, double T, std::span<const double> eval_times, Rng& rng) const;
  /// As simulate, but a capped path returns the states recorded so far with
  /// `capped` set instead of throwing.
  PathSample simulate_partial(const Vector& mu0, double T, std::span<const double> eval_times, Rng& rng) const;

 private:
  void advance(Vector& x, double dt, Vector& scratch) const;
  PathSample run(const Vector& mu0, double T, std::span<const double> eval_times, Rng& rng, bool partial) const;

  const ModelSpec* spec_;
  ForwardOptions options_;
  Matrix F_;
  Matrix window_step_;
  Vector rate_;        // lambda_i
  Vector local_rate_;  // |PiL(i)|
  double rate_max_ = 0.0;
  double omega_ = 0.0;
};

enum class CapPolicy { Throw, Censor };

/// Ensemble of independent forward paths at shared evaluation times.
///
/// masses[e] is an n_paths x K column-major block for eval_times[e], so each
/// type is a contiguous column across paths. Path p draws from
/// Rng(master_seed, p); results do not depend on the worker count.
struct TrajectoryBundle {
  std::vector<double> eval_times;
  int K = 0;
  std::size_t n_paths = 0;
  std::uint64_t master_seed = 0;
  Vector mu0;
  std::vector<Matrix> masses;
  std::vector<std::uint64_t> event_counts;
  /// Under CapPolicy::Censor: time at which path p hit the cap (inf if never).
  /// Entries for eval times past that point are NaN.
  std::vector<double> censored_at;

  std::size_t censored() const;
};

TrajectoryBundle ensemble(const ForwardSimulator& sim, const Vector& mu0, double T,
                          const std::vector<double>& eval_times, std::size_t n_paths, std::uint64_t master_seed,
                          unsigned threads, CapPolicy policy = CapPolicy::Throw);

}  // namespace spinelab
