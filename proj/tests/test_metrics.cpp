#include <cmath>
#include <random>

#include "doctest.h"
#include "ssat/error.hpp"
#include "ssat/metrics.hpp"
#include "ssat/rng.hpp"

using namespace ssat;

namespace
{

Trajectory make_traj(std::initializer_list<Waypoint> pts)
{
  Trajectory t;
  t.points = pts;
  return t;
}

Trajectory random_future(Rng & rng, int n = kFutureLen)
{
  Trajectory t;
  Waypoint p{uniform(rng, -10.0, 10.0), uniform(rng, -10.0, 10.0)};
  double angle = uniform(rng, 0.0, 2.0 * M_PI);
  for (int i = 0; i < n; ++i) {
    t.points.push_back(p);
    angle += normal(rng, 0.0, 0.15);
    const double step = std::abs(normal(rng, 1.0, 0.3)) + 0.05;
    p = p + Waypoint{step * std::cos(angle), step * std::sin(angle)};
  }
  return t;
}

Trajectory random_offset(Rng & rng, const Trajectory & base, double scale)
{
  Trajectory t = base;
  for (auto & p : t.points) {
    p.x += normal(rng, 0.0, scale);
    p.y += normal(rng, 0.0, scale);
  }
  return t;
}

// Independent route: per-frame rotation matrices built from atan2 angles.
double oracle_directional_error(
  const Trajectory & pred, const Trajectory & truth, metrics::Axis axis)
{
  double sum = 0.0;
  for (int i = 0; i < pred.size(); ++i) {
    int a = i + 1 < truth.size() ? i : truth.size() - 2;
    if (truth[a + 1] == truth[a]) {
      for (a = 0; a + 1 < truth.size(); ++a) {
        if (!(truth[a + 1] == truth[a])) {
          break;
        }
      }
    }
    const double theta =
      std::atan2(truth[a + 1].y - truth[a].y, truth[a + 1].x - truth[a].x);
    // Rows of [R(-pi/2)] applied to the longitudinal unit vector.
    const double ux = std::cos(theta);
    const double uy = std::sin(theta);
    const double rot[2][2] = {{std::cos(-M_PI / 2), -std::sin(-M_PI / 2)},
                              {std::sin(-M_PI / 2), std::cos(-M_PI / 2)}};
    const double lat_x = rot[0][0] * ux + rot[0][1] * uy;
    const double lat_y = rot[1][0] * ux + rot[1][1] * uy;
    const double dx = pred[i].x - truth[i].x;
    const double dy = pred[i].y - truth[i].y;
    sum += axis == metrics::Axis::kLateral ? dx * lat_x + dy * lat_y : dx * ux + dy * uy;
  }
  return sum / pred.size();
}

}  // namespace

TEST_CASE("ade basics")
{
  const auto t = make_traj({{0, 0}, {1, 0}, {2, 0}});
  CHECK(metrics::ade(t, t) == doctest::Approx(0.0));

  auto shifted = t;
  for (auto & p : shifted.points) {
    p.x += 1.0;
  }
  CHECK(metrics::ade(shifted, t) == doctest::Approx(1.0));

  const auto pred = make_traj({{3, 4}, {1, 0}, {2, 0}});
  CHECK(metrics::ade(pred, t) == doctest::Approx(5.0 / 3.0));

  const auto shorter = make_traj({{0, 0}});
  CHECK_THROWS_AS(metrics::ade(shorter, t), Error);
}

TEST_CASE("ade symmetry and translation invariance")
{
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_future(rng);
    const auto b = random_offset(rng, a, 1.0);
    CHECK(metrics::ade(a, b) == doctest::Approx(metrics::ade(b, a)));

    const Waypoint shift{uniform(rng, -100.0, 100.0), uniform(rng, -100.0, 100.0)};
    auto a2 = a;
    auto b2 = b;
    for (auto & p : a2.points) p = p + shift;
    for (auto & p : b2.points) p = p + shift;
    CHECK(std::abs(metrics::ade(a2, b2) - metrics::ade(a, b)) < 1e-11);
  }
}

TEST_CASE("direction_frame axis conventions")
{
  const auto f1 = metrics::direction_frame({0, 0}, {2, 0});
  CHECK(f1.u_lon.x == doctest::Approx(1.0));
  CHECK(f1.u_lon.y == doctest::Approx(0.0));
  CHECK(f1.u_lat.x == doctest::Approx(0.0));
  CHECK(f1.u_lat.y == doctest::Approx(-1.0));

  const auto f2 = metrics::direction_frame({0, 0}, {0, 3});
  CHECK(f2.u_lon.x == doctest::Approx(0.0));
  CHECK(f2.u_lon.y == doctest::Approx(1.0));
  CHECK(f2.u_lat.x == doctest::Approx(1.0));
  CHECK(f2.u_lat.y == doctest::Approx(0.0));

  CHECK_THROWS_AS(metrics::direction_frame({1, 1}, {1, 1}), Error);
}

TEST_CASE("direction frames fall back over stationary steps")
{
  // Stationary mid-trajectory steps reuse the first moving pair.
  const auto truth = make_traj({{0, 0}, {1, 0}, {1, 0}, {2, 0}});
  const auto frames = metrics::direction_frames(truth);
  CHECK(frames.size() == 4);
  CHECK(frames[1].u_lon.x == doctest::Approx(1.0));

  const auto frozen = make_traj({{1, 1}, {1, 1}, {1, 1}});
  CHECK_THROWS_AS(metrics::direction_frames(frozen), Error);
}

TEST_CASE("directional_error stated cases")
{
  Trajectory truth;
  for (int i = 0; i < 10; ++i) {
    truth.points.push_back({static_cast<double>(i), 0.0});
  }
  CHECK(metrics::directional_error(truth, truth, metrics::Axis::kLateral) ==
        doctest::Approx(0.0));
  CHECK(metrics::directional_error(truth, truth, metrics::Axis::kLongitudinal) ==
        doctest::Approx(0.0));

  auto ahead = truth;
  for (auto & p : ahead.points) p.x += 1.0;
  CHECK(metrics::directional_error(ahead, truth, metrics::Axis::kLongitudinal) ==
        doctest::Approx(1.0));
  CHECK(metrics::directional_error(ahead, truth, metrics::Axis::kLateral) ==
        doctest::Approx(0.0));

  auto right = truth;
  for (auto & p : right.points) p.y -= 1.0;  // rightward of +x motion
  CHECK(metrics::directional_error(right, truth, metrics::Axis::kLateral) ==
        doctest::Approx(1.0));
}

TEST_CASE("directional_error matches the rotation-matrix oracle")
{
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto truth = random_future(rng);
    const auto pred = random_offset(rng, truth, 2.0);
    for (const auto axis : {metrics::Axis::kLateral, metrics::Axis::kLongitudinal}) {
      const double got = metrics::directional_error(pred, truth, axis);
      const double want = oracle_directional_error(pred, truth, axis);
      CHECK(std::abs(got - want) < 1e-9);
    }
  }
}

TEST_CASE("per-frame lateral/longitudinal decomposition is orthonormal")
{
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const auto truth = random_future(rng);
    const auto pred = random_offset(rng, truth, 3.0);
    const auto lat = metrics::directional_errors_per_frame(pred, truth, metrics::Axis::kLateral);
    const auto lon =
      metrics::directional_errors_per_frame(pred, truth, metrics::Axis::kLongitudinal);
    for (int i = 0; i < pred.size(); ++i) {
      const double d2 = dot(pred[i] - truth[i], pred[i] - truth[i]);
      const double sum = lat[static_cast<std::size_t>(i)] * lat[static_cast<std::size_t>(i)] +
                         lon[static_cast<std::size_t>(i)] * lon[static_cast<std::size_t>(i)];
      CHECK(std::abs(sum - d2) < 1e-9);
    }
  }
}

TEST_CASE("intention_error_rate")
{
  using I = LateralIntent;
  const std::vector<I> all_fwd(20, I::kForward);
  CHECK(metrics::intention_error_rate(all_fwd, all_fwd) == doctest::Approx(0.0));

  auto two_off = all_fwd;
  two_off[3] = I::kLeft;
  two_off[11] = I::kRight;
  CHECK(metrics::intention_error_rate(two_off, all_fwd) == doctest::Approx(0.1));

  const std::vector<I> lefts(20, I::kLeft);
  CHECK(metrics::intention_error_rate(lefts, all_fwd) == doctest::Approx(1.0));

  const std::vector<I> empty;
  CHECK_THROWS_AS(metrics::intention_error_rate(empty, empty), Error);
}
