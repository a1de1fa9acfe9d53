#include "pabs/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pabs/error.hpp"

namespace pabs {

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void VehicleParams::validate() const {
  if (!(v_f > 0.0) || !finite(v_f)) throw ConfigError("v_f must be positive and finite");
  if (!(dt > 0.0) || !finite(dt)) throw ConfigError("dt must be positive and finite");
  if (!(sat_limit > 0.0) || !finite(sat_limit)) throw ConfigError("sat_limit must be positive and finite");
  if (!(gain > 0.0) || !finite(gain)) throw ConfigError("gain must be positive and finite");
  if (kind == VehicleKind::Bicycle && (!(wheel_base > 0.0) || !finite(wheel_base)))
    throw ConfigError("wheel_base must be positive for the bicycle model");
}

VehicleParams gem_params() {
  VehicleParams p;
  p.kind = VehicleKind::Bicycle;
  p.v_f = 2.8;
  p.wheel_base = 1.75;
  p.dt = 0.1;
  p.sat_limit = 0.61;
  p.gain = 0.45;
  return p;
}

VehicleParams agbot_params() {
  VehicleParams p;
  p.kind = VehicleKind::SkidSteer;
  p.v_f = 1.0;
  p.wheel_base = 0.0;
  p.dt = 0.05;
  p.sat_limit = 0.5;
  p.gain = 0.1;
  return p;
}

void UnsafeSet::validate() const {
  if (!(y_limit > 0.0) || !finite(y_limit)) throw ConfigError("unsafe y_limit must be positive");
  if (theta_limit && (!(*theta_limit > 0.0) || !finite(*theta_limit)))
    throw ConfigError("unsafe theta_limit must be positive");
}

std::string_view to_string(VehicleKind kind) {
  return kind == VehicleKind::Bicycle ? "bicycle" : "skid_steer";
}

std::string_view to_string(ErrorFn fn) {
  switch (fn) {
    case ErrorFn::V1: return "V1";
    case ErrorFn::V2: return "V2";
    case ErrorFn::V3: return "V3";
  }
  return "V1";
}

std::string_view to_string(Combiner c) { return c == Combiner::And ? "and" : "or"; }

VehicleKind parse_vehicle_kind(std::string_view s) {
  if (s == "bicycle") return VehicleKind::Bicycle;
  if (s == "skid_steer" || s == "skidsteer") return VehicleKind::SkidSteer;
  throw ConfigError("unknown vehicle kind '" + std::string(s) + "'");
}

ErrorFn parse_error_fn(std::string_view s) {
  if (s == "V1" || s == "v1") return ErrorFn::V1;
  if (s == "V2" || s == "v2") return ErrorFn::V2;
  if (s == "V3" || s == "v3") return ErrorFn::V3;
  throw ConfigError("unknown error function '" + std::string(s) + "'");
}

Combiner parse_combiner(std::string_view s) {
  if (s == "and") return Combiner::And;
  if (s == "or") return Combiner::Or;
  throw ConfigError("unknown unsafe-set combiner '" + std::string(s) + "'");
}

State dynamics_step(const State& s, Control u, const VehicleParams& p) {
  if (!finite(s.x) || !finite(s.y) || !finite(s.theta) || !finite(u.value))
    throw DomainError("dynamics_step: non-finite input");
  State next;
  if (p.kind == VehicleKind::Bicycle) {
    const double heading = s.theta + u.value;
    next.x = s.x + p.v_f * std::cos(heading) * p.dt;
    next.y = s.y + p.v_f * std::sin(heading) * p.dt;
    next.theta = s.theta + p.v_f * std::sin(u.value) / p.wheel_base * p.dt;
  } else {
    next.x = s.x + p.v_f * std::cos(s.theta) * p.dt;
    next.y = s.y + p.v_f * std::sin(s.theta) * p.dt;
    next.theta = s.theta + u.value * p.dt;
  }
  return next;
}

double stanley_raw(const Percept& z, const VehicleParams& p) {
  return z.psi + std::atan2(p.gain * z.d, p.v_f);
}

Control controller(const Percept& z, const VehicleParams& p) {
  if (!finite(z.d) || !finite(z.psi)) throw DomainError("controller: non-finite percept");
  const double raw = stanley_raw(z, p);
  if (p.kind == VehicleKind::Bicycle) {
    if (raw >= p.sat_limit) return {p.sat_limit};
    if (raw <= -p.sat_limit) return {-p.sat_limit};
    return {raw};
  }
  // three-case law: the threshold is compared before dividing by dt
  const double threshold = p.sat_limit * p.dt;
  if (raw >= threshold) return {p.sat_limit};
  if (raw <= -threshold) return {-p.sat_limit};
  return {std::clamp(raw / p.dt, -p.sat_limit, p.sat_limit)};
}

double tracking_error(ErrorFn v, const Percept& z, const VehicleParams& p) {
  switch (v) {
    case ErrorFn::V1: return std::abs(z.psi + std::atan2(p.gain * z.d, p.v_f));
    case ErrorFn::V2: return std::abs(z.d);
    case ErrorFn::V3: return std::hypot(z.d, z.psi);
  }
  return 0.0;
}

bool in_unsafe(const State& s, const UnsafeSet& u) {
  const bool y_out = std::abs(s.y) > u.y_limit;
  if (!u.theta_limit) return y_out;
  const bool theta_out = std::abs(s.theta) > *u.theta_limit;
  return u.combiner == Combiner::And ? (y_out && theta_out) : (y_out || theta_out);
}

}  // namespace pabs
