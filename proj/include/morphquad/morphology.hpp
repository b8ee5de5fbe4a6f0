#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "morphquad/rotor.hpp"

namespace morphquad {

/// Hover efficiency and roll/pitch controllability of one morphology.
struct MorphObjectives {
  double efficiency = 0.0;       // eta, N/W
  double controllability = 0.0;  // C
  bool feasible = false;
  RotorThrusts hover;            // A^-1 [m g, 0, 0, 0]
};

struct OptimizerSettings {
  double beta1 = 50.0;       // ascent rate on eta
  /// The eta rate adapts: halved on a rejected step, grown after clean ones up to this multiple.
  double beta1_growth_cap = 1.0;
  double beta2 = 1e-2;       // ascent rate on the projected C direction
  /// beta2 is multiplied by this every iteration, so C only refines locally.
  double beta2_decay = 0.97;
  /// Largest eta loss a single step may take, N/W.
  double eta_slack = 1e-10;
  int max_iters = 2000;
  double grad_step = 1e-4;   // rad
  double tol_angle = 1e-4;   // rad
  /// A stalled ascent still counts as converged below this projected gradient, N/W per rad.
  double tol_residual = 1e-4;
  /// Exponent of the soft minimum over rotors used for the C ascent direction.
  double softmin_power = 40.0;
  /// Rotor pairs closer than this to touching count as in contact, m.
  double contact_tolerance = 1e-4;
  bool keep_trace = false;

  void validate() const;
};

struct OptimizerResult {
  Morphology morph;
  MorphObjectives objectives;
  int iterations = 0;
  bool converged = false;
  /// Norm of grad eta projected onto the directions the limits allow, N/W per rad.
  double residual = 0.0;
  /// Norm of the last nominal ascent step, rad.
  double last_step = 0.0;
  std::vector<Morphology> trace;
};

class OptimizerFailedError : public std::runtime_error {
 public:
  OptimizerFailedError(const std::string& what, std::vector<Morphology> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<Morphology>& trace() const { return trace_; }

 private:
  std::vector<Morphology> trace_;
};

/// Mass properties as a function of morphology (arms carry mass, so the CoG
/// and inertia move with them). A constant model is fine for fixed studies.
using MassModel = std::function<MassProperties(const Morphology&)>;

MassModel constant_mass_model(const MassProperties& props);
MassModel payload_mass_model(const AirframeParams& params, const PayloadSpec& payload);

/// Hover thrusts f = A^-1 [m g, 0, 0, 0]; nullopt if A is singular.
std::optional<RotorThrusts> hover_thrusts(const Morphology& morph, const MassProperties& props,
                                          const AirframeParams& params);

/// Sum f / sum P for a thrust set, all thrusts must be positive.
double efficiency_of(const RotorThrusts& thrusts, double power_coeff);

/// 4x2 matrix of d f_i / d alpha_des for roll and pitch: rows of A^-1 restricted
/// to the moment columns times the first two columns of J.
Eigen::Matrix<double, 4, 2> thrust_sensitivity(const Mat4& allocation, const Mat3& inertia);

/// Per-rotor 1 / ||d f_i / d alpha||.
Vec4 rotor_controllability(const Mat4& allocation, const Mat3& inertia);

/// 1 / max_i ||d f_i / d alpha||.
double controllability_from(const Mat4& allocation, const Mat3& inertia);

/// eta; nullopt when some hover thrust is <= 0 or the layout is invalid.
std::optional<double> efficiency_factor(const Morphology& morph, const MassProperties& props,
                                        const AirframeParams& params);

/// C; nullopt when A is singular or the layout is invalid.
std::optional<double> controllability_factor(const Morphology& morph, const MassProperties& props,
                                             const AirframeParams& params);

MorphObjectives evaluate_objectives(const Morphology& morph, const MassProperties& props,
                                    const AirframeParams& params);

/// A scalar field over morphologies; nullopt marks an infeasible point.
using MorphField = std::function<std::optional<double>(const Morphology&)>;

/// Central finite-difference gradient. Falls back to a one-sided difference
/// when one neighbor is infeasible; throws DomainError when both are, or
/// when `at` itself is infeasible.
Vec4 gradient(const MorphField& field, const Morphology& at, double step);

/// beta1 * g_eta + beta2 * (g_c - proj_{g_eta} g_c). The projection is
/// dropped when g_eta vanishes.
Vec4 projected_update(const Vec4& grad_eta, const Vec4& grad_c, double beta1, double beta2);

/// Rotor pair whose clearance (separation minus propeller diameter) is small.
struct RotorContact {
  int a = 0, b = 0;
  double clearance = 0.0;  // m
  Vec4 normal = Vec4::Zero();  // d clearance / d theta
};
std::vector<RotorContact> rotor_contacts(const Morphology& morph, const AirframeParams& params,
                                         double within);

/// Removes from `step` whatever would, to first order, push a contact below
/// `keep_clear` or an angle past its limit.
Vec4 project_step(const Vec4& step, const Morphology& at, const AirframeParams& params,
                  const std::vector<RotorContact>& contacts, double keep_clear = 0.0);

/// Gradient ascent on eta with the C gradient projected off the eta gradient,
/// clipped to the angle limits. Deterministic for fixed inputs.
OptimizerResult optimize_morphology(const Morphology& start, const MassModel& mass_model,
                                    const AirframeParams& params,
                                    const OptimizerSettings& settings = {});

/// Best eta over the grid theta_min + k * step (per arm, within the limits).
struct GridSearchResult {
  Morphology best;
  double efficiency = 0.0;
  long evaluated = 0;
  long feasible = 0;
};

/// Exhaustive search; throws DomainError when no grid point is feasible.
GridSearchResult grid_search(const MassModel& mass_model, const AirframeParams& params,
                             double step);

/// Payload that puts the composite CoG at `cog_xy` (z unchanged) with the arms
/// at X. Empty when total_mass is the dry mass and the CoG is the dry one.
/// Throws DomainError otherwise when total_mass is not above the dry mass.
PayloadSpec payload_for_cog(double total_mass, const Vec2& cog_xy, const AirframeParams& params);

OptimizerResult optimize_morphology(const Morphology& start, const MassProperties& props,
                                    const AirframeParams& params,
                                    const OptimizerSettings& settings = {});

}  // namespace morphquad
