#include "codress/garment.hpp"

#include "codress/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace codress::garment {

namespace {

double bend_coefficient(const SleeveModel& m) {
  const double s = m.rest_segment_length;
  return m.bend_stiffness / (s * s * s);
}

/// Orientation anchor: a virtual particle one segment beyond the gripped end,
/// on the grip axis. Only defined when the grip holds an end particle.
bool anchor_point(const SleeveModel& m, const Transform& grip, Vec3& out) {
  const Vec3 axis = grip.linear().col(0);
  if (m.grip_particle_index == 0) {
    out = grip.translation() - axis * m.rest_segment_length;
    return true;
  }
  if (m.grip_particle_index == m.n_particles - 1) {
    out = grip.translation() + axis * m.rest_segment_length;
    return true;
  }
  return false;
}

void check_state(const SleeveModel& m, const SleeveState& s) {
  if (static_cast<int>(s.positions.size()) != m.n_particles ||
      static_cast<int>(s.velocities.size()) != m.n_particles) {
    throw ArgumentError("sleeve state size does not match model");
  }
  for (int i = 0; i < m.n_particles; ++i) {
    if (!s.positions[i].allFinite() || !s.velocities[i].allFinite()) {
      throw NumericError("sleeve state is not finite at particle " + std::to_string(i));
    }
  }
}

}  // namespace

void SleeveModel::validate() const {
  if (n_particles < 4) throw ArgumentError("sleeve needs at least 4 particles");
  if (!(rest_segment_length > 0.0 && tube_radius > 0.0 && stretch_stiffness > 0.0 &&
        bend_stiffness > 0.0 && damping > 0.0 && particle_mass > 0.0 && contact_stiffness > 0.0)) {
    throw ArgumentError("sleeve physical constants must be positive");
  }
  if (grip_particle_index < 0 || grip_particle_index >= n_particles) {
    throw ArgumentError("sleeve grip particle index out of range");
  }
  if (anchor_particle_index >= n_particles || anchor_particle_index == grip_particle_index) {
    throw ArgumentError("sleeve anchor particle index invalid");
  }
}

SleeveState rest_state(const SleeveModel& model, const Transform& grip) {
  model.validate();
  SleeveState s;
  const Vec3 axis = grip.linear().col(0);
  for (int i = 0; i < model.n_particles; ++i) {
    s.positions.push_back(grip.translation() +
                          axis * ((i - model.grip_particle_index) * model.rest_segment_length));
    s.velocities.push_back(Vec3::Zero());
  }
  return s;
}

ForceEvaluation evaluate_forces(const SleeveModel& model, const SleeveState& state,
                                const Transform& grip, std::span<const Capsule> human) {
  const int n = model.n_particles;
  const auto& x = state.positions;
  ForceEvaluation ev;
  ev.forces.assign(n, Vec3::Zero());

  for (int i = 0; i + 1 < n; ++i) {
    const Vec3 d = x[i + 1] - x[i];
    const double len = d.norm();
    if (len <= 0.0) continue;
    const Vec3 f = model.stretch_stiffness * (len - model.rest_segment_length) * (d / len);
    ev.forces[i] += f;
    ev.forces[i + 1] -= f;
  }

  const double kb = bend_coefficient(model);
  for (int i = 1; i + 1 < n; ++i) {
    const Vec3 u = x[i - 1] - 2.0 * x[i] + x[i + 1];
    ev.forces[i - 1] -= kb * u;
    ev.forces[i] += 2.0 * kb * u;
    ev.forces[i + 1] -= kb * u;
  }
  Vec3 anchor;
  if (anchor_point(model, grip, anchor)) {
    // Triple (anchor, grip particle, neighbour) keeps the tube aligned with the grip axis.
    const int g = model.grip_particle_index;
    const int nb = g == 0 ? 1 : n - 2;
    const Vec3 u = anchor - 2.0 * x[g] + x[nb];
    ev.anchor_force = -kb * u;
    ev.anchor_point = anchor;
    ev.forces[g] += 2.0 * kb * u;
    ev.forces[nb] -= kb * u;
  }

  for (int i = 0; i < n; ++i) {
    ev.forces[i] -= model.damping * state.velocities[i];
  }

  const double R = model.tube_radius;
  for (int i = 0; i < n; ++i) {
    Vec3 t = x[std::min(i + 1, n - 1)] - x[std::max(i - 1, 0)];
    const double tn = t.norm();
    if (tn <= 0.0) continue;
    t /= tn;
    for (const auto& cap : human) {
      const Vec3 c = closest_point_on_segment(cap.a, cap.b, x[i]);
      const Vec3 rel = x[i] - c;
      const double axial = rel.dot(t);
      if (std::abs(axial) >= cap.radius) continue;
      const double r_eff = std::sqrt(cap.radius * cap.radius - axial * axial);
      const Vec3 w = rel - axial * t;
      const double d = w.norm();
      if (d <= 1e-12) continue;
      const Vec3 w_hat = w / d;
      double depth = 0.0;
      Vec3 dir;
      if (d < R && cap.radius < R) {
        // Limb inside the tube pressing on the wall: the wall is dragged toward the limb.
        depth = d + r_eff - R;
        dir = -w_hat;
      } else {
        depth = r_eff - (d - R);
        dir = w_hat;
      }
      if (depth <= 0.0) continue;
      const Vec3 f = model.contact_stiffness * depth * dir;
      ev.forces[i] += f;
      ev.contacts.push_back({cap.body, cap.link, -f, c});
    }
  }
  return ev;
}

GarmentStep step_garment(const SleeveModel& model, const SleeveState& state,
                         const Transform& grip, std::span<const Capsule> human, double dt) {
  if (!(dt > 0.0)) throw ArgumentError("step_garment: dt must be positive");
  if (!grip.matrix().allFinite()) throw NumericError("step_garment: grip transform not finite");
  check_state(model, state);

  const ForceEvaluation ev = evaluate_forces(model, state, grip, human);
  const int g = model.grip_particle_index;

  GarmentStep out;
  out.state.positions = state.positions;
  out.state.velocities = state.velocities;
  out.state.contacts = ev.contacts;
  const double inv_m = 1.0 / model.particle_mass;
  for (int i = 0; i < model.n_particles; ++i) {
    if (i == g) {
      out.state.positions[i] = grip.translation();
      out.state.velocities[i] = (grip.translation() - state.positions[i]) / dt;
    } else if (i == model.anchor_particle_index) {
      out.state.velocities[i].setZero();
    } else {
      out.state.velocities[i] = state.velocities[i] + dt * inv_m * ev.forces[i];
      out.state.positions[i] = state.positions[i] + dt * out.state.velocities[i];
    }
  }
  const Vec3 net = ev.forces[g] + ev.anchor_force;
  out.reaction.head<3>() = -net;
  out.reaction.tail<3>() = -(ev.anchor_point - grip.translation()).cross(ev.anchor_force);
  for (int i = 0; i < model.n_particles; ++i) {
    if (!out.state.positions[i].allFinite() || !out.state.velocities[i].allFinite()) {
      throw NumericError("step_garment: sleeve state diverged");
    }
  }
  return out;
}

double spring_energy(const SleeveModel& model, const SleeveState& state, const Transform& grip) {
  const int n = model.n_particles;
  const auto& x = state.positions;
  double e = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const double ext = (x[i + 1] - x[i]).norm() - model.rest_segment_length;
    e += 0.5 * model.stretch_stiffness * ext * ext;
  }
  const double kb = bend_coefficient(model);
  for (int i = 1; i + 1 < n; ++i) {
    e += 0.5 * kb * (x[i - 1] - 2.0 * x[i] + x[i + 1]).squaredNorm();
  }
  Vec3 anchor;
  if (anchor_point(model, grip, anchor)) {
    const int g = model.grip_particle_index;
    const int nb = g == 0 ? 1 : n - 2;
    e += 0.5 * kb * (anchor - 2.0 * x[g] + x[nb]).squaredNorm();
  }
  return e;
}

double kinetic_energy(const SleeveModel& model, const SleeveState& state) {
  double e = 0.0;
  for (int i = 0; i < model.n_particles; ++i) {
    if (i == model.grip_particle_index || i == model.anchor_particle_index) continue;
    e += 0.5 * model.particle_mass * state.velocities[i].squaredNorm();
  }
  return e;
}

Projection project_on_centerline(const SleeveState& state, const Vec3& p) {
  const auto& x = state.positions;
  const int n = static_cast<int>(x.size());
  int first = -1;
  for (int i = 0; i + 1 < n; ++i) {
    if ((x[i + 1] - x[i]).norm() > 1e-12) {
      first = i;
      break;
    }
  }
  if (first < 0) throw GeometryError("sleeve centerline is degenerate");

  Projection best;
  // Backward extension from the opening.
  const Vec3 back = (x[first] - x[first + 1]).normalized();
  const double s_back = std::max(0.0, (p - x[0]).dot(back));
  best.point = x[0] + s_back * back;
  best.arclength = -s_back;
  best.radial = (p - best.point).norm();

  double cumulative = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const double seg = (x[i + 1] - x[i]).norm();
    if (seg > 1e-12) {
      const double t = segment_parameter(x[i], x[i + 1], p);
      const Vec3 q = x[i] + t * (x[i + 1] - x[i]);
      const double dist = (p - q).norm();
      if (dist < best.radial) {
        best.radial = dist;
        best.point = q;
        best.arclength = cumulative + t * seg;
      }
    }
    cumulative += seg;
  }
  return best;
}

double limb_progress(const SleeveModel& model, const SleeveState& state, const Vec3& limb_tip,
                     double threshold_arclength) {
  if (!(threshold_arclength > 0.0) || threshold_arclength > model.length() + 1e-12) {
    throw ArgumentError("limb_progress: threshold must lie in (0, sleeve length]");
  }
  const Projection proj = project_on_centerline(state, limb_tip);
  double progress = 0.0;
  if (proj.arclength <= 0.0 || proj.radial <= model.tube_radius) {
    progress = proj.arclength / threshold_arclength;
  } else {
    progress = -(proj.radial - model.tube_radius) / threshold_arclength;
  }
  return std::clamp(progress, kProgressMin, kProgressMax);
}

double geodesic_distance(const SleeveModel& model, const SleeveState& state, const Vec3& limb_tip) {
  const Projection proj = project_on_centerline(state, limb_tip);
  if (proj.arclength > 0.0 && proj.radial <= model.tube_radius) return 0.0;
  return (limb_tip - state.positions.front()).norm();
}

double deformation(const SleeveModel& model, const SleeveState& state) {
  double worst = 0.0;
  for (int i = 0; i + 1 < model.n_particles; ++i) {
    worst = std::max(worst, (state.positions[i + 1] - state.positions[i]).norm() /
                                model.rest_segment_length);
  }
  return worst;
}

double aggregate_force_on_human(std::span<const ContactRecord> contacts, int human_body_count) {
  std::vector<Vec3> sums(std::max(human_body_count, 0), Vec3::Zero());
  for (const auto& c : contacts) {
    if (c.body < 0 || c.body >= human_body_count) {
      throw ArgumentError("contact record body id out of range");
    }
    sums[c.body] += c.force;
  }
  double f_max = 0.0;
  for (const auto& s : sums) f_max = std::max(f_max, s.norm());
  return f_max;
}

}  // namespace codress::garment
