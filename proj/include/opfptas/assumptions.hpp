// Structural assumptions of the approximation scheme and the rotation that
// brings all discrete demands into the first quadrant.
#pragma once

#include <string>
#include <vector>

#include "opfptas/flow.hpp"
#include "opfptas/network.hpp"

namespace opfptas {

struct AssumptionViolation {
  std::string assumption;  // "A0".."A4", "consumer", "rotated"
  std::string entity;      // e.g. "edge (1,3)", "user 7"
  std::string detail;
};

struct AssumptionReport {
  bool a0_ok = true;        // supply cost non-decreasing in supplied power, user costs well formed
  bool a1_ok = true;        // Re z >= 0 and Im z >= 0
  bool a2_ok = true;        // v_min < v0 < v_max at every node
  bool a3_ok = true;        // Re(z^* s_max) >= 0 for discrete users
  bool a4_ok = true;        // theta <= pi/2
  bool consumers_ok = true; // Re(s_max) >= 0
  bool rotated_ok = true;   // after rotation: impedances and demands in the first quadrant
  double theta = 0.0;
  double phi = 0.0;
  std::vector<AssumptionViolation> violations;

  bool all_ok() const {
    return a0_ok && a1_ok && a2_ok && a3_ok && a4_ok && consumers_ok && rotated_ok;
  }
};

AssumptionReport check_assumptions(const Instance& instance);

/// max(max over discrete users of -angle(s_max), 0), clamped to [0, pi/2].
double rotation_angle(const Instance& instance);

/// Complex data of an instance seen in the frame rotated by phi. Continuous
/// demand boxes are rotated corner by corner.
struct RotatedInstance {
  double phi = 0.0;
  std::vector<Complex> impedance;  // z_e e^{i phi}, per edge
  std::vector<Complex> peak;       // s_max e^{i phi}, per user
  std::vector<Complex> floor;      // lower corner e^{i phi}, per user (= 0 for discrete)
};

/// Throws InputError unless 0 <= phi <= pi/2.
RotatedInstance rotate_instance(const Instance& instance, double phi);

/// Maps a solution of the rotated problem back: S e^{-i phi}, s0 e^{-i phi};
/// demands, controls, voltages and currents are unchanged.
FlowState unrotate_solution(const FlowState& state, double phi);

/// Inverse of `unrotate_solution`.
FlowState rotate_solution(const FlowState& state, double phi);

}  // namespace opfptas
