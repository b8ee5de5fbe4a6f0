#include <doctest.h>

#include <cmath>
#include <random>

#include "morphquad/controller.hpp"

using namespace morphquad;

namespace {

const AirframeParams kParams;

Mat4 x_allocation(const Vec3& cog = Vec3::Zero()) {
  return allocation_matrix(rotor_positions(Morphology::x_config(), kParams), cog, kParams);
}

}  // namespace

TEST_SUITE("controller") {

TEST_CASE("zero error gives pure gravity compensation") {
  PositionController pos;
  const Vec3 f = pos.update({}, {}, 2.5, 0.01);
  CHECK(f.x() == 0.0);
  CHECK(f.y() == 0.0);
  CHECK(f.z() == doctest::Approx(-2.5 * kGravity));
}

TEST_CASE("position step against a discrete reference") {
  ControllerGains g;
  g.pos_p = 6.0;
  g.pos_d = 4.0;
  g.pos_i = 1.0;
  PositionController pos(g);
  const double dt = 0.01;
  RigidBodyState s;
  const Setpoint sp{Vec3(1, 0, 0), 0.0, Vec3::Zero()};
  double integral = 0.0;
  double x = 0.0, v = 0.0;
  for (int k = 0; k < 50; ++k) {
    s.position.x() = x;
    s.velocity.x() = v;
    const Vec3 f = pos.update(sp, s, 2.0, dt);
    const double e = 1.0 - x;
    integral += g.pos_i * e * dt;
    const double ref = 6.0 * e - 4.0 * v + integral;
    if (k == 0) CHECK(ref == doctest::Approx(6.0 + 0.01));
    CHECK(f.x() == doctest::Approx(ref).epsilon(1e-12));
    v += f.x() / 2.0 * dt;
    x += v * dt;
  }
}

TEST_CASE("integrator is clamped and can be held") {
  ControllerGains g;
  g.pos_integral_limit = 0.5;
  PositionController pos(g);
  const Setpoint sp{Vec3(10, 0, 0), 0.0, Vec3::Zero()};
  for (int k = 0; k < 1000; ++k) pos.update(sp, {}, 2.0, 0.01);
  CHECK(pos.integral().x() == doctest::Approx(0.5));
  pos.reset();
  pos.update(sp, {}, 2.0, 0.01, true);
  CHECK(pos.integral().x() == 0.0);
}

TEST_CASE("desired attitude at hover") {
  const AttitudeCmd a = desired_attitude(Vec3(0, 0, -19.62), 0.0);
  CHECK(a.attitude.w() == doctest::Approx(1.0));
  CHECK(a.attitude.vec().norm() < 1e-15);
  CHECK(a.thrust == doctest::Approx(19.62));

  const AttitudeCmd yawed = desired_attitude(Vec3(0, 0, -19.62), kPi / 2);
  const double h = std::sqrt(0.5);
  CHECK(yawed.attitude.w() == doctest::Approx(h));
  CHECK(yawed.attitude.x() == doctest::Approx(0.0));
  CHECK(yawed.attitude.y() == doctest::Approx(0.0));
  CHECK(yawed.attitude.z() == doctest::Approx(h));
}

TEST_CASE("desired attitude aligns body z against the force") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 10.0);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 f(n(rng), n(rng), n(rng));
    const double psi = yaw(rng);
    const AttitudeCmd a = desired_attitude(f, psi);
    CHECK(std::abs(a.attitude.norm() - 1.0) < 1e-12);
    const Vec3 body_z = a.attitude * Vec3::UnitZ();
    CHECK((body_z + f.normalized()).norm() < 1e-9);
    CHECK(a.thrust == doctest::Approx(f.norm()));
    // Yaw first, then a tilt about a horizontal axis.
    const Quat tilt = Quat(Eigen::AngleAxisd(-psi, Vec3::UnitZ())) * a.attitude;
    CHECK(std::abs(tilt.z()) < 1e-9);
  }
}

TEST_CASE("degenerate forces") {
  const AttitudeCmd prev{Quat(Eigen::AngleAxisd(0.3, Vec3::UnitY())), 12.0};
  const AttitudeCmd held = desired_attitude(Vec3::Zero(), 0.0, prev);
  CHECK(held.thrust == 0.0);
  CHECK(held.attitude.isApprox(prev.attitude));

  const AttitudeCmd flipped = desired_attitude(Vec3(0, 0, 5.0), 0.0);
  CHECK(std::abs(flipped.attitude.x()) == doctest::Approx(1.0));
  CHECK(((flipped.attitude * Vec3::UnitZ()) + Vec3::UnitZ()).norm() < 1e-12);
}

TEST_CASE("quaternion extraction survives every branch") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int k = 0; k < 500; ++k) {
    Quat q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    const Quat back = quaternion_from_rotation(q.toRotationMatrix());
    CHECK(std::abs(std::abs(back.dot(q)) - 1.0) < 1e-12);
    CHECK(back.w() >= 0.0);
  }
  const Quat half_turn = quaternion_from_rotation(Vec3(1, -1, -1).asDiagonal());
  CHECK(std::abs(half_turn.x()) == doctest::Approx(1.0));
}

TEST_CASE("attitude error to rate command") {
  const Quat q(Eigen::AngleAxisd(0.4, Vec3(1, 2, 3).normalized()));
  CHECK(attitude_control(q, q, 8.0).norm() < 1e-15);
  Quat neg = q;
  neg.coeffs() *= -1.0;
  const Quat d(Eigen::AngleAxisd(0.2, Vec3::UnitY()));
  CHECK((attitude_control(d, q, 8.0) - attitude_control(d, neg, 8.0)).norm() < 1e-15);

  const Quat roll(Eigen::AngleAxisd(deg2rad(10.0), Vec3::UnitX()));
  const Vec3 w = attitude_control(roll, Quat::Identity(), 8.0);
  CHECK(w.x() == doctest::Approx(8.0 * std::sin(deg2rad(5.0))).epsilon(1e-12));
  CHECK(w.x() == doctest::Approx(0.697).epsilon(1e-3));
  CHECK(std::abs(w.y()) < 1e-15);
  CHECK(std::abs(w.z()) < 1e-15);
}

TEST_CASE("rate loop") {
  const Mat3 j = Vec3(0.02, 0.03, 0.04).asDiagonal();
  RateController rate;
  CHECK(rate.update(Vec3::Zero(), Vec3::Zero(), j, 0.002).norm() == 0.0);

  RateController spin;
  const Vec3 w(0, 0, 5.0);
  CHECK(spin.update(w, w, j, 0.002).norm() < 1e-15);

  // Off-axis spin needs the gyroscopic term.
  RateController gyro;
  const Vec3 w2(1.0, 2.0, 0.5);
  const Vec3 m = gyro.update(w2, w2, j, 0.002);
  CHECK((m - w2.cross(j * w2)).norm() < 1e-15);

  ControllerGains g;
  RateController p(g);
  const Vec3 err(0.1, 0, 0);
  CHECK(p.update(err, Vec3::Zero(), j, 0.002).x() ==
        doctest::Approx(0.02 * (g.rate_p * 0.1 + g.rate_i * 0.1 * 0.002)));
}

TEST_CASE("hover allocation is uniform") {
  const AllocationOutput out = allocate(19.62, Vec3::Zero(), x_allocation(), kParams);
  for (int i = 0; i < 4; ++i) {
    CHECK(out.omega_sq[i] == doctest::Approx(out.omega_sq[0]));
    CHECK(out.thrusts.f[i] == doctest::Approx(4.905));
  }
  CHECK_FALSE(out.saturation.any());
  CHECK(out.omega_sq[0] == doctest::Approx(4.905 / kParams.lift_coeff));
}

TEST_CASE("unsaturated allocation reproduces the wrench") {
  const Mat4 a = x_allocation(Vec3(0.01, -0.02, 0));
  const Vec3 m(0.2, -0.1, 0.02);
  const AllocationOutput out = allocate(20.0, m, a, kParams);
  REQUIRE_FALSE(out.saturation.any());
  CHECK((out.achieved.as_vector() - Vec4(20.0, m.x(), m.y(), m.z())).norm() < 1e-12);
  CHECK(out.yaw_scale == 1.0);
}

TEST_CASE("fixed X airframe with the payload 20 cm out saturates") {
  const double mass = 3.0;
  const Vec3 cog(0, 1.0 * 0.20 / mass, 0);
  const AllocationOutput out = allocate(mass * kGravity, Vec3::Zero(), x_allocation(cog), kParams);
  CHECK(out.saturation.any());
  CHECK(out.requested.f[0] > kParams.max_thrust);
  CHECK(out.thrusts.f.maxCoeff() <= kParams.max_thrust);
  CHECK(out.thrusts.f.minCoeff() >= 0.0);
  // Roll balance is kept and collective gives way.
  CHECK(out.collective_changed);
  CHECK(out.roll_pitch_scale == 1.0);
  CHECK(std::abs(out.achieved.moment.x()) < 1e-9);
}

TEST_CASE("yaw is shed before roll and pitch") {
  const AllocationOutput out = allocate(19.62, Vec3(0.0, 0.0, 0.5), x_allocation(), kParams);
  CHECK(out.saturation.any());
  CHECK(out.yaw_scale < 1.0);
  CHECK(out.roll_pitch_scale == 1.0);
  CHECK(out.achieved.collective == doctest::Approx(19.62));
}

TEST_CASE("allocation outputs stay finite and bounded on adversarial input") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Mat4 a = x_allocation();
  for (int k = 0; k < 2000; ++k) {
    const double c = 100.0 * u(rng);
    const Vec3 m(50.0 * u(rng), 50.0 * u(rng), 5.0 * u(rng));
    const AllocationOutput out = allocate(c, m, a, kParams);
    CHECK(out.thrusts.f.allFinite());
    CHECK(out.thrusts.f.minCoeff() >= 0.0);
    CHECK(out.thrusts.f.maxCoeff() <= kParams.max_thrust);
    CHECK(out.roll_pitch_scale >= 0.0);
    CHECK(out.roll_pitch_scale <= 1.0);
  }
}

TEST_CASE("flight controller holds hover on a trimmed model") {
  FlightController fc(kParams);
  ControlModel model;
  model.mass = 2.0;
  model.inertia = compose_mass_properties(Morphology::x_config(), kParams).inertia;
  model.rotors = rotor_positions(Morphology::x_config(), kParams);
  fc.set_model(model);
  fc.update_position({}, {}, 0.01);
  const AllocationOutput out = fc.update_attitude({}, 0.002);
  for (int i = 0; i < 4; ++i) CHECK(out.thrusts.f[i] == doctest::Approx(4.905));
}

TEST_CASE("moving the CoG belief hands trim to the rate integrator") {
  FlightController fc(kParams);
  ControlModel model;
  model.mass = 3.0;
  model.inertia = Mat3::Identity() * 0.05;
  model.rotors = rotor_positions(Morphology::x_config(), kParams);
  fc.set_model(model);
  fc.preload(Vec3::Zero(), Vec3(0.5, 0, 0), {Vec4::Constant(3.0 * kGravity / 4.0)});
  ControlModel moved = model;
  moved.cog.y() = -0.01;
  fc.set_model(moved);
  CHECK(fc.rate_loop().integral().x() == doctest::Approx(0.5 - 0.01 * 3.0 * kGravity));
  // Only held trim is released; the integrator never gains from a belief change.
  ControlModel back = moved;
  back.cog.y() = 0.05;
  fc.set_model(back);
  CHECK(fc.rate_loop().integral().x() == doctest::Approx(0.5 - 0.01 * 3.0 * kGravity));
}

TEST_CASE("gain validation") {
  ControllerGains g;
  g.att = -1.0;
  CHECK_THROWS_AS(g.validate(), ValidationError);
  CHECK_THROWS_AS(FlightController(kParams, g), ValidationError);
}

}
