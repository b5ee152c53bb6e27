#pragma once

#include "codress/geometry.hpp"

#include <vector>

namespace codress::garment {

/// Mass-spring centerline of a sleeve. Particle 0 is the opening; the tube
/// extends from it along the grip frame's +x axis.
struct SleeveModel {
  int n_particles = 10;
  double rest_segment_length = 0.05;
  double tube_radius = 0.08;
  double stretch_stiffness = 800.0;
  double bend_stiffness = 0.02;   // N·m; per-triple coefficient is this / segment^3
  double damping = 0.5;          // absolute drag per particle, N·s/m
  double particle_mass = 0.05;
  int grip_particle_index = 0;
  double contact_stiffness = 2000.0;  // penalty N/m
  int anchor_particle_index = -1;     // optional world-fixed particle

  [[nodiscard]] double length() const { return rest_segment_length * (n_particles - 1); }
  void validate() const;
};

struct ContactRecord {
  int body = -1;   // human body id
  int link = -1;   // chain link carrying the capsule
  Vec3 force = Vec3::Zero();  // force on the human, N
  Vec3 point = Vec3::Zero();  // application point on the limb axis
};

struct SleeveState {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::vector<ContactRecord> contacts;
};

/// Straight, unstretched sleeve held by `grip`.
SleeveState rest_state(const SleeveModel& model, const Transform& grip);

struct GarmentStep {
  SleeveState state;
  Wrench reaction = Wrench::Zero();  // force/torque the grip exerts, about the grip point
};

/// Net non-constraint force on every particle (springs, drag, contact penalties)
/// plus the contact records produced. Exposed for the Newton's-third-law check.
struct ForceEvaluation {
  std::vector<Vec3> forces;
  Vec3 anchor_force = Vec3::Zero();  // force on the virtual orientation anchor
  Vec3 anchor_point = Vec3::Zero();
  std::vector<ContactRecord> contacts;
};

ForceEvaluation evaluate_forces(const SleeveModel& model, const SleeveState& state,
                                const Transform& grip, std::span<const Capsule> human);

GarmentStep step_garment(const SleeveModel& model, const SleeveState& state,
                         const Transform& grip, std::span<const Capsule> human, double dt);

/// Stretch + bend potential energy.
double spring_energy(const SleeveModel& model, const SleeveState& state, const Transform& grip);

double kinetic_energy(const SleeveModel& model, const SleeveState& state);

struct Projection {
  double arclength = 0.0;  // signed; negative before the opening
  double radial = 0.0;     // distance from the centerline (or its extension)
  Vec3 point = Vec3::Zero();
};

/// Closest point on the centerline polyline, extended backward from the
/// opening along the first segment's direction.
Projection project_on_centerline(const SleeveState& state, const Vec3& p);

/// Lower/upper clamp of limb_progress.
inline constexpr double kProgressMin = -1.0;
inline constexpr double kProgressMax = 1.5;

/// Normalized limb progress. Inside the tube it is arclength / threshold;
/// before the opening plane it is the (negative) signed arclength / threshold;
/// past the plane but outside the tube wall it is minus the radial excess / threshold.
double limb_progress(const SleeveModel& model, const SleeveState& state, const Vec3& limb_tip,
                     double threshold_arclength);

double geodesic_distance(const SleeveModel& model, const SleeveState& state, const Vec3& limb_tip);

double deformation(const SleeveModel& model, const SleeveState& state);

/// Largest magnitude of the per-body vector sum of contact forces.
double aggregate_force_on_human(std::span<const ContactRecord> contacts, int human_body_count);

struct ProgressReport {
  double progress = 0.0;
  double geodesic = 0.0;
  double max_stretch = 0.0;
  double f_max = 0.0;
};

}  // namespace codress::garment
