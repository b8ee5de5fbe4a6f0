#include "morphquad/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace morphquad {

namespace {

Vec4 remove_component(const Vec4& v, const Vec4& along) {
  const double n2 = along.squaredNorm();
  if (n2 <= 1e-30) return v;
  return v - (v.dot(along) / n2) * along;
}

// Zero the components that would push past an active angle limit.
// A limit closer than `edge` counts as active.
Vec4 project_to_box(Vec4 g, const Morphology& at, const AirframeParams& params, double edge) {
  for (int i = 0; i < 4; ++i) {
    if (at.theta[i] <= params.theta_min + edge && g[i] < 0.0) g[i] = 0.0;
    if (at.theta[i] >= params.theta_max - edge && g[i] > 0.0) g[i] = 0.0;
  }
  return g;
}

Morphology clip(const Morphology& m, const AirframeParams& params) {
  return {m.theta.cwiseMax(params.theta_min).cwiseMin(params.theta_max)};
}

bool layout_valid(const Morphology& morph, const AirframeParams& params, RotorPoints& rotors) {
  if (!angles_within_limits(morph, params)) return false;
  rotors = rotor_layout(morph, params);
  return min_rotor_separation(rotors) >= params.prop_diameter;
}

std::optional<Vec4> rotor_terms(const Morphology& morph, const MassProperties& props,
                                const AirframeParams& params) {
  RotorPoints rotors;
  if (!layout_valid(morph, params, rotors)) return std::nullopt;
  const Mat4 a = allocation_matrix(rotors, props.cog, params);
  if (!(allocation_condition(a) < kMaxAllocationCondition)) return std::nullopt;
  return rotor_controllability(a, props.inertia);
}

}  // namespace

void OptimizerSettings::validate() const {
  if (!(beta1 > 0.0)) throw ValidationError("beta1", "must be positive");
  if (!(tol_residual > 0.0)) throw ValidationError("tol_residual", "must be positive");
  if (!(eta_slack >= 0.0)) throw ValidationError("eta_slack", "must be >= 0");
  if (!(beta1_growth_cap >= 1.0)) throw ValidationError("beta1_growth_cap", "must be >= 1");
  if (!(beta2 > 0.0)) throw ValidationError("beta2", "must be positive");
  if (max_iters <= 0) throw ValidationError("max_iters", "must be positive");
  if (!(grad_step > 0.0)) throw ValidationError("grad_step", "must be positive");
  if (!(tol_angle > 0.0)) throw ValidationError("tol_angle", "must be positive");
  if (!(beta2_decay > 0.0 && beta2_decay <= 1.0)) {
    throw ValidationError("beta2_decay", "must be in (0, 1]");
  }
  if (!(softmin_power >= 1.0)) throw ValidationError("softmin_power", "must be >= 1");
  if (!(contact_tolerance >= 0.0)) throw ValidationError("contact_tolerance", "must be >= 0");
}

MassModel constant_mass_model(const MassProperties& props) {
  return [props](const Morphology&) { return props; };
}

MassModel payload_mass_model(const AirframeParams& params, const PayloadSpec& payload) {
  return [params, payload](const Morphology& m) {
    return compose_mass_properties(m, params, payload);
  };
}

std::optional<RotorThrusts> hover_thrusts(const Morphology& morph, const MassProperties& props,
                                          const AirframeParams& params) {
  const Mat4 a = allocation_matrix(rotor_layout(morph, params), props.cog, params);
  if (!(allocation_condition(a) < kMaxAllocationCondition)) return std::nullopt;
  return RotorThrusts{a.fullPivLu().solve(Vec4(props.mass * kGravity, 0.0, 0.0, 0.0))};
}

double efficiency_of(const RotorThrusts& thrusts, double power_coeff) {
  return thrusts.total() / total_power(thrusts.f, power_coeff);
}

Eigen::Matrix<double, 4, 2> thrust_sensitivity(const Mat4& allocation, const Mat3& inertia) {
  const Mat4 inv = allocation.inverse();
  return inv.rightCols<3>() * inertia.leftCols<2>();
}

Vec4 rotor_controllability(const Mat4& allocation, const Mat3& inertia) {
  const auto s = thrust_sensitivity(allocation, inertia);
  return s.rowwise().norm().cwiseInverse();
}

double controllability_from(const Mat4& allocation, const Mat3& inertia) {
  return rotor_controllability(allocation, inertia).minCoeff();
}

std::optional<double> efficiency_factor(const Morphology& morph, const MassProperties& props,
                                        const AirframeParams& params) {
  RotorPoints rotors;
  if (!layout_valid(morph, params, rotors)) return std::nullopt;
  const auto hover = hover_thrusts(morph, props, params);
  if (!hover || (hover->f.array() <= 0.0).any()) return std::nullopt;
  return efficiency_of(*hover, params.power_coeff);
}

std::optional<double> controllability_factor(const Morphology& morph, const MassProperties& props,
                                             const AirframeParams& params) {
  const auto terms = rotor_terms(morph, props, params);
  if (!terms) return std::nullopt;
  return terms->minCoeff();
}

MorphObjectives evaluate_objectives(const Morphology& morph, const MassProperties& props,
                                    const AirframeParams& params) {
  MorphObjectives out;
  if (auto hover = hover_thrusts(morph, props, params)) out.hover = *hover;
  const auto eta = efficiency_factor(morph, props, params);
  const auto c = controllability_factor(morph, props, params);
  out.feasible = eta.has_value() && c.has_value();
  if (out.feasible) {
    out.efficiency = *eta;
    out.controllability = *c;
  }
  return out;
}

Vec4 gradient(const MorphField& field, const Morphology& at, double step) {
  const auto center = field(at);
  if (!center) throw DomainError("gradient requested at an infeasible morphology");
  Vec4 g;
  for (int i = 0; i < 4; ++i) {
    Morphology plus = at, minus = at;
    plus.theta[i] += step;
    minus.theta[i] -= step;
    const auto fp = field(plus);
    const auto fm = field(minus);
    if (fp && fm) {
      g[i] = (*fp - *fm) / (2.0 * step);
    } else if (fp) {
      g[i] = (*fp - *center) / step;
    } else if (fm) {
      g[i] = (*center - *fm) / step;
    } else {
      std::ostringstream msg;
      msg << "both neighbors of arm " << i + 1 << " are infeasible";
      throw DomainError(msg.str());
    }
  }
  return g;
}

Vec4 projected_update(const Vec4& grad_eta, const Vec4& grad_c, double beta1, double beta2) {
  return beta1 * grad_eta + beta2 * remove_component(grad_c, grad_eta);
}

std::vector<RotorContact> rotor_contacts(const Morphology& morph, const AirframeParams& params,
                                         double within) {
  const RotorPoints rotors = rotor_layout(morph, params);
  std::vector<RotorContact> out;
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      const Vec2 d = rotors[a] - rotors[b];
      const double dist = d.norm();
      const double clearance = dist - params.prop_diameter;
      if (clearance >= within || dist <= 0.0) continue;
      const Vec2 u = d / dist;
      // Rotor i moves along L (-sin h, cos h) as its angle grows.
      auto tangent = [&](int i) -> Vec2 {
        const double h = arm_heading(morph, i);
        return Vec2(-std::sin(h), std::cos(h)) * params.arm_length;
      };
      RotorContact c;
      c.a = a;
      c.b = b;
      c.clearance = clearance;
      c.normal[a] = u.dot(tangent(a));
      c.normal[b] = -u.dot(tangent(b));
      out.push_back(c);
    }
  }
  return out;
}

Vec4 project_step(const Vec4& step, const Morphology& at, const AirframeParams& params,
                  const std::vector<RotorContact>& contacts, double keep_clear) {
  Vec4 out = step;
  // Alternating projections; contacts share arms so one pass is not always enough.
  for (int pass = 0; pass < 20; ++pass) {
    bool changed = false;
    for (const auto& c : contacts) {
      const double n2 = c.normal.squaredNorm();
      if (n2 <= 1e-30) continue;
      const double predicted = c.clearance + c.normal.dot(out) - keep_clear;
      if (predicted < -1e-15) {
        out -= (predicted / n2) * c.normal;
        changed = true;
      }
    }
    for (int i = 0; i < 4; ++i) {
      const double lo = params.theta_min - at.theta[i];
      const double hi = params.theta_max - at.theta[i];
      if (out[i] < lo || out[i] > hi) {
        out[i] = std::clamp(out[i], lo, hi);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return out;
}

OptimizerResult optimize_morphology(const Morphology& start, const MassModel& mass_model,
                                    const AirframeParams& params,
                                    const OptimizerSettings& settings) {
  settings.validate();
  const double h = settings.grad_step;

  MorphField eta_field = [&](const Morphology& m) {
    return efficiency_factor(m, mass_model(m), params);
  };
  auto terms_at = [&](const Morphology& m) { return rotor_terms(m, mass_model(m), params); };

  OptimizerResult result;
  Morphology theta = clip(start, params);
  std::vector<Morphology> trace{theta};
  if (!eta_field(theta) || !terms_at(theta)) {
    std::ostringstream msg;
    msg << "start morphology (" << theta.degrees().transpose() << ") deg is infeasible";
    throw OptimizerFailedError(msg.str(), trace);
  }

  auto soft_min = [&](const Vec4& terms) {
    return std::pow(terms.array().pow(-settings.softmin_power).sum(), -1.0 / settings.softmin_power);
  };
  double beta1 = settings.beta1;
  double beta2 = settings.beta2;
  double eta_here = *eta_field(theta);

  for (int k = 0; k < settings.max_iters; ++k) {
    Vec4 g_eta;
    try {
      g_eta = gradient(eta_field, theta, h);
    } catch (const DomainError& e) {
      throw OptimizerFailedError(e.what(), trace);
    }
    // Contacts within reach of a full step; the projection only bites when a
    // step would actually close the gap.
    const auto contacts = rotor_contacts(theta, params, 0.05);
    std::vector<RotorContact> touching;
    for (const auto& c : contacts) {
      if (c.clearance < settings.contact_tolerance) touching.push_back(c);
    }
    // Directions blocked right here: gradient components into active limits.
    auto tangent_part = [&](Vec4 g) {
      for (int pass = 0; pass < 20; ++pass) {
        bool changed = false;
        for (const auto& c : touching) {
          const double n2 = c.normal.squaredNorm();
          if (n2 > 1e-30 && c.normal.dot(g) < 0.0) {
            g -= (c.normal.dot(g) / n2) * c.normal;
            changed = true;
          }
        }
        const Vec4 boxed = project_to_box(g, theta, params, settings.tol_angle);
        if (boxed != g) {
          g = boxed;
          changed = true;
        }
        if (!changed) break;
      }
      return g;
    };
    result.residual = tangent_part(g_eta).norm();

    // Gradient of each rotor's controllability term, one pass over the stencil.
    const Vec4 center = *terms_at(theta);
    Eigen::Matrix4d rotor_grads;  // row j = d(rotor terms)/d theta_j
    for (int j = 0; j < 4; ++j) {
      Morphology plus = theta, minus = theta;
      plus.theta[j] += h;
      minus.theta[j] -= h;
      const auto tp = terms_at(plus);
      const auto tm = terms_at(minus);
      Vec4 row;
      if (tp && tm) {
        row = (*tp - *tm) / (2.0 * h);
      } else if (tp) {
        row = (*tp - center) / h;
      } else if (tm) {
        row = (center - *tm) / h;
      } else {
        row.setZero();
      }
      rotor_grads.row(j) = row.transpose();
    }
    // Gradient of the soft minimum (sum c_i^-p)^(-1/p) of the rotor terms.
    const double c_soft = soft_min(center);
    const Vec4 weights = (c_soft / center.array()).pow(settings.softmin_power + 1.0).matrix();
    const Vec4 g_c = rotor_grads * weights;

    const Vec4 g_eta_t = tangent_part(g_eta);
    const Vec4 g_c_t = tangent_part(g_c);

    // Stationarity is judged on the nominal step, not the backtracked one.
    result.last_step = project_step(projected_update(g_eta_t, g_c_t, settings.beta1, beta2), theta,
                                    params, contacts, 0.5 * settings.contact_tolerance)
                           .norm();
    if (result.last_step < settings.tol_angle) {
      result.converged = true;
      result.iterations = k;
      break;
    }
    Vec4 step = project_step(projected_update(g_eta_t, g_c_t, beta1, beta2), theta, params,
                             contacts, 0.5 * settings.contact_tolerance);
    Morphology next = clip({theta.theta + step}, params);
    std::optional<double> eta_next = eta_field(next);
    int halvings = 0;
    // Backtrack until the step stays feasible and does not lose efficiency.
    // A little eta may be given up so the C term can follow a curved ridge.
    auto acceptable = [&](const std::optional<double>& e) {
      return e && *e >= eta_here - settings.eta_slack;
    };
    while (!acceptable(eta_next) && halvings < 40) {
      step *= 0.5;
      next = clip({theta.theta + step}, params);
      eta_next = eta_field(next);
      ++halvings;
    }
    if (!acceptable(eta_next)) {
      // No shortened step is acceptable; this is as far as the ascent gets.
      result.converged = result.residual < settings.tol_residual;
      result.iterations = k + 1;
      break;
    }
    const bool crawling = step.norm() < settings.tol_angle;
    if (halvings > 0) {
      beta1 *= 0.5;
    } else {
      beta1 = std::min(settings.beta1_growth_cap * settings.beta1, beta1 * 1.5);
    }

    // Once a step stops improving C the rate is halved so the iteration can settle.
    const auto next_terms = terms_at(next);
    if (!next_terms || soft_min(*next_terms) < c_soft) beta2 *= 0.5;
    beta2 *= settings.beta2_decay;

    theta = next;
    eta_here = *eta_next;
    result.iterations = k + 1;
    if (settings.keep_trace) trace.push_back(theta);
    if (crawling && result.residual < settings.tol_residual) {
      result.converged = true;
      break;
    }
  }

  result.morph = theta;
  result.objectives = evaluate_objectives(theta, mass_model(theta), params);
  if (settings.keep_trace) result.trace = std::move(trace);
  return result;
}

OptimizerResult optimize_morphology(const Morphology& start, const MassProperties& props,
                                    const AirframeParams& params,
                                    const OptimizerSettings& settings) {
  return optimize_morphology(start, constant_mass_model(props), params, settings);
}

GridSearchResult grid_search(const MassModel& mass_model, const AirframeParams& params,
                             double step) {
  if (!(step > 0.0)) throw DomainError("grid step must be positive");
  std::vector<double> values;
  for (double v = params.theta_min; v <= params.theta_max + 1e-9; v += step) values.push_back(v);
  const long n = static_cast<long>(values.size());
  GridSearchResult out;
  for (long k = 0; k < n * n * n * n; ++k) {
    Morphology m{Vec4(values[k % n], values[(k / n) % n], values[(k / (n * n)) % n],
                      values[k / (n * n * n)])};
    ++out.evaluated;
    const auto eta = efficiency_factor(m, mass_model(m), params);
    if (!eta) continue;
    if (out.feasible == 0 || *eta > out.efficiency) {
      out.best = m;
      out.efficiency = *eta;
    }
    ++out.feasible;
  }
  if (out.feasible == 0) throw DomainError("no feasible grid point");
  return out;
}

PayloadSpec payload_for_cog(double total_mass, const Vec2& cog_xy, const AirframeParams& params) {
  const MassProperties dry = compose_mass_properties(Morphology::x_config(), params);
  const double payload_mass = total_mass - dry.mass;
  if (std::abs(payload_mass) <= 1e-9 && (cog_xy - dry.cog.head<2>()).norm() <= 1e-9) return {};
  if (!(payload_mass > 1e-9)) {
    std::ostringstream msg;
    msg << "mass " << total_mass << " kg must exceed the dry mass " << dry.mass
        << " kg to move the CoG";
    throw DomainError(msg.str());
  }
  Vec3 position;
  position.head<2>() = (total_mass * cog_xy - dry.mass * dry.cog.head<2>()) / payload_mass;
  position.z() = dry.cog.z();
  return PayloadSpec::cube(payload_mass, position, params);
}

}  // namespace morphquad
