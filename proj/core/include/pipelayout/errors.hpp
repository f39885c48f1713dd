#ifndef PIPELAYOUT_ERRORS_HPP_
#define PIPELAYOUT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pipelayout {

// Scene generation gave up after the redraw bound.
struct GenerationExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed scene/path file. Message names the offending field.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A structural invariant of a scene or path does not hold.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// step() was called with a masked action; a policy or search bug upstream.
struct IllegalAction : std::logic_error {
  using std::logic_error::logic_error;
};

// Every action is masked; the caller must treat the state as trapped.
struct AllMasked : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Observation width does not match the network's recorded input width.
struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint file is not a valid checkpoint (magic/version/CRC/truncation).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint was trained against a different observation layout.
struct LayoutMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// PPO loss went non-finite; training aborts with diagnostics in the message.
struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A path fails adjacency/collision checks.
struct InvalidPath : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// episode_return_identity was handed a trajectory that did not succeed.
struct NotSuccessful : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad CLI/benchmark configuration detected before any work starts.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pipelayout

#endif  // PIPELAYOUT_ERRORS_HPP_
