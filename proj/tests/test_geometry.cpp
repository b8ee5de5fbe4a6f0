#include <doctest.h>

#include <cmath>

#include "morphquad/geometry.hpp"

using namespace morphquad;

namespace {

// Point cloud of a solid box, for brute-force inertia sums.
struct Point {
  double m;
  Vec3 r;
};

void add_box(std::vector<Point>& pts, double mass, const Vec3& center, const Vec3& size,
             double heading, int n) {
  const Mat3 rot = rot_z(heading);
  const double dm = mass / (n * n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const Vec3 local((i + 0.5) / n - 0.5, (j + 0.5) / n - 0.5, (k + 0.5) / n - 0.5);
        pts.push_back({dm, center + rot * local.cwiseProduct(size)});
      }
    }
  }
}

Mat3 point_inertia(const std::vector<Point>& pts, Vec3* cog_out = nullptr) {
  double m = 0.0;
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) {
    m += p.m;
    c += p.m * p.r;
  }
  c /= m;
  Mat3 j = Mat3::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p.r - c;
    j += p.m * (d.squaredNorm() * Mat3::Identity() - d * d.transpose());
  }
  if (cog_out) *cog_out = c;
  return j;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("X configuration puts rotors on the diagonals") {
  const AirframeParams p;
  const RotorPoints r = rotor_positions(Morphology::x_config(), p);
  const double a = 0.06 + 0.134 * std::sqrt(0.5);
  CHECK(a == doctest::Approx(0.15475).epsilon(1e-4));
  const double sx[] = {1, -1, -1, 1};
  const double sy[] = {1, 1, -1, -1};
  for (int i = 0; i < 4; ++i) {
    CHECK(r[i].x() == doctest::Approx(sx[i] * a).epsilon(1e-12));
    CHECK(r[i].y() == doctest::Approx(sy[i] * a).epsilon(1e-12));
  }
}

TEST_CASE("zero and ninety degree arms") {
  const AirframeParams p;
  const RotorPoints zero = rotor_layout(Morphology::uniform(0.0), p);
  CHECK(zero[0].x() == doctest::Approx(0.06 + 0.134));
  CHECK(zero[0].y() == doctest::Approx(0.06));
  const RotorPoints ninety = rotor_layout(Morphology::uniform(kPi / 2), p);
  CHECK(ninety[0].x() == doctest::Approx(0.06));
  CHECK(ninety[0].y() == doctest::Approx(0.06 + 0.134));
}

TEST_CASE("rotor_positions rejects angles outside the limits and overlapping disks") {
  const AirframeParams p;
  CHECK_THROWS_AS(rotor_positions(Morphology::from_degrees(Vec4(45, 45, 45, 110)), p),
                  DomainError);
  CHECK_THROWS_AS(rotor_positions(Morphology::from_degrees(Vec4(45, 45, -20, 45)), p),
                  DomainError);
  // Arm 1 at 90 deg and arm 2 at 0 deg both point along +y, 0.12 m apart.
  CHECK_THROWS_AS(rotor_positions(Morphology::from_degrees(Vec4(90, 0, 45, 45)), p), DomainError);
  CHECK_NOTHROW(rotor_positions(Morphology::uniform(deg2rad(-15.0)), p));
  CHECK_NOTHROW(rotor_positions(Morphology::uniform(deg2rad(105.0)), p));
}

TEST_CASE("airframe validation names the field") {
  AirframeParams p;
  p.body_width = -1.0;
  try {
    p.validate();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "body_width");
  }
  AirframeParams q;
  q.arm_inertia_cm(0, 1) = 1.0;
  CHECK_THROWS_AS(q.validate(), ValidationError);
  CHECK_NOTHROW(AirframeParams{}.validate());
}

TEST_CASE("dry X airframe has no products of inertia") {
  const MassProperties m = compose_mass_properties(Morphology::x_config(), AirframeParams{});
  CHECK(m.mass == doctest::Approx(2.0));
  CHECK(std::abs(m.inertia(0, 1)) < 1e-15);
  CHECK(std::abs(m.inertia(0, 2)) < 1e-15);
  CHECK(std::abs(m.inertia(1, 2)) < 1e-15);
  CHECK((m.inertia - m.inertia.transpose()).norm() == 0.0);
}

TEST_CASE("payload moves the CoG by its mass-weighted share") {
  const AirframeParams p;
  const PayloadSpec load = PayloadSpec::cube(1.0, Vec3(0, 0.15, 0), p);
  const MassProperties m = compose_mass_properties(Morphology::x_config(), p, load);
  CHECK(m.mass == doctest::Approx(3.0));
  CHECK(m.cog.y() == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(std::abs(m.cog.x()) < 1e-15);

  // Same thing summed by hand from the part positions.
  double mass = p.body_mass + load.mass;
  Vec3 moment = load.mass * load.position;
  for (int i = 0; i < 4; ++i) {
    const double h = Morphology::x_config().theta[i] + i * kPi / 2;
    const Vec2 hinge(i == 0 || i == 3 ? 0.06 : -0.06, i < 2 ? 0.06 : -0.06);
    const Vec2 c = hinge + 0.5 * 0.134 * Vec2(std::cos(h), std::sin(h));
    moment += p.arm_mass * Vec3(c.x(), c.y(), 0.0);
    mass += p.arm_mass;
  }
  CHECK((m.cog - moment / mass).norm() < 1e-15);
}

TEST_CASE("composite inertia matches a point-mass cloud within 2 percent per element") {
  const AirframeParams p;
  for (const Vec4& deg : {Vec4(45, 45, 45, 45), Vec4(77.5, 12.5, 6.6, 83.4), Vec4(-15, 30, 60, 105)}) {
    const Morphology morph = Morphology::from_degrees(deg);
    const PayloadSpec load = PayloadSpec::cube(1.0, Vec3(0.03, 0.15, 0.02), p);
    const MassProperties m = compose_mass_properties(morph, p, load);

    std::vector<Point> pts;
    const int n = 12;
    add_box(pts, p.body_mass, p.body_com, Vec3(0.12, 0.12, AirframeParams::kDefaultBodyHeight),
            0.0, n);
    for (int i = 0; i < 4; ++i) {
      const double h = morph.theta[i] + i * kPi / 2;
      const Vec2 hinge(i == 0 || i == 3 ? 0.06 : -0.06, i < 2 ? 0.06 : -0.06);
      const Vec2 c = hinge + 0.5 * 0.134 * Vec2(std::cos(h), std::sin(h));
      add_box(pts, p.arm_mass, Vec3(c.x(), c.y(), 0.0),
              Vec3(0.134, AirframeParams::kDefaultArmSection, AirframeParams::kDefaultArmSection),
              h, n);
    }
    add_box(pts, 1.0, load.position, Vec3::Constant(0.06), 0.0, n);
    Vec3 cog;
    const Mat3 oracle = point_inertia(pts, &cog);

    CHECK((cog - m.cog).norm() < 1e-9);
    const double scale = oracle.cwiseAbs().maxCoeff();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const double tol = 0.02 * std::max(std::abs(oracle(r, c)), 0.01 * scale);
        CHECK(std::abs(m.inertia(r, c) - oracle(r, c)) <= tol);
      }
    }
  }
}

TEST_CASE("payload position inversion") {
  const AirframeParams p;
  const Morphology x = Morphology::x_config();
  const PayloadSpec load = PayloadSpec::cube(1.0, Vec3(0, 0.15, 0), p);
  const MassProperties est = compose_mass_properties(x, p, load);
  const auto where = infer_payload_position(est, x, p);
  REQUIRE(where);
  CHECK((*where - Vec3(0, 0.15, 0)).norm() < 1e-12);

  MassProperties dry = compose_mass_properties(x, p);
  CHECK_FALSE(infer_payload_position(dry, x, p));

  MassProperties centered = dry;
  centered.mass = 3.0;
  const auto zero = infer_payload_position(centered, x, p);
  REQUIRE(zero);
  CHECK(zero->norm() < 1e-12);
}

TEST_CASE("cube inertia") {
  const Mat3 j = cube_inertia(6.0, 0.1);
  CHECK(j(0, 0) == doctest::Approx(0.01));
  CHECK(j(0, 1) == 0.0);
}

}
