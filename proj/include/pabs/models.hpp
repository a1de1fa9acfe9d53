#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace pabs {

/// Vehicle pose. `theta` is kept unwrapped.
struct State {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Perceived lane offset `d` (m) and heading difference `psi` (rad).
struct Percept {
  double d = 0.0;
  double psi = 0.0;
};

/// Steering angle (bicycle) or angular velocity (skid steer).
struct Control {
  double value = 0.0;
};

enum class VehicleKind { Bicycle, SkidSteer };

struct VehicleParams {
  VehicleKind kind = VehicleKind::Bicycle;
  double v_f = 0.0;
  double wheel_base = 0.0;  // bicycle only
  double dt = 0.0;
  double sat_limit = 0.0;   // delta_max (rad) or omega_max (rad/s)
  double gain = 0.0;

  /// Throws ConfigError when a field violates its range.
  void validate() const;
};

/// Polaris GEM e2 constants with the Stanley controller.
VehicleParams gem_params();
/// Under-canopy agricultural robot with the modified Stanley controller.
VehicleParams agbot_params();

enum class ErrorFn { V1, V2, V3 };

enum class Combiner { And, Or };

struct UnsafeSet {
  double y_limit = 0.0;
  std::optional<double> theta_limit;
  Combiner combiner = Combiner::And;

  void validate() const;
};

std::string_view to_string(VehicleKind kind);
std::string_view to_string(ErrorFn fn);
std::string_view to_string(Combiner c);
VehicleKind parse_vehicle_kind(std::string_view s);
ErrorFn parse_error_fn(std::string_view s);
Combiner parse_combiner(std::string_view s);

/// One step of the discrete-time kinematics.
///
/// Bicycle:   x' = x + v cos(theta + delta) dt, y' = y + v sin(theta + delta) dt,
///            theta' = theta + v sin(delta) / L dt.
/// SkidSteer: x' = x + v cos(theta) dt, y' = y + v sin(theta) dt,
///            theta' = theta + omega dt.
State dynamics_step(const State& s, Control u, const VehicleParams& p);

/// Stanley lateral controller, saturated at `p.sat_limit`.
///
/// The quotient K d / v_f goes through atan2 so that the degenerate cases
/// behave like the reference C implementation.
Control controller(const Percept& z, const VehicleParams& p);

/// Unsaturated Stanley law `psi + atan2(K d, v_f)`.
double stanley_raw(const Percept& z, const VehicleParams& p);

/// Ground-truth percept for a straight lane aligned with the x axis.
inline Percept ground_truth_percept(const State& s) { return {-s.y, -s.theta}; }

/// Tracking error V1 = |psi + atan(K d / v_f)|, V2 = |d|, V3 = ||(d, psi)||.
double tracking_error(ErrorFn v, const Percept& z, const VehicleParams& p);

bool in_unsafe(const State& s, const UnsafeSet& u);

}  // namespace pabs
