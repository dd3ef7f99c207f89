#include <cmath>
#include <random>

#include "doctest.h"
#include "soiverify/geo.hpp"

using namespace soiverify;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent oracle: spherical law of cosines. Deliberately a different
// formula than the implementation under test.
double law_of_cosines_km(const geo::GeoPoint& a, const geo::GeoPoint& b) {
  const double lat1 = a.lat_deg() * kPi / 180.0;
  const double lat2 = b.lat_deg() * kPi / 180.0;
  const double dlon = (b.lon_deg() - a.lon_deg()) * kPi / 180.0;
  double cos_c = std::sin(lat1) * std::sin(lat2) + std::cos(lat1) * std::cos(lat2) * std::cos(dlon);
  cos_c = std::clamp(cos_c, -1.0, 1.0);
  return geo::kEarthRadiusKm * std::acos(cos_c);
}

geo::GeoPoint random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double lat = std::asin(2.0 * u(rng) - 1.0) * 180.0 / kPi;
  const double lon = u(rng) * 360.0 - 180.0;
  return {lat, lon};
}

}  // namespace

TEST_CASE("GeoPoint construction validates ranges") {
  CHECK_NOTHROW(geo::GeoPoint(90.0, 180.0));
  CHECK_NOTHROW(geo::GeoPoint(-90.0, -180.0));
  CHECK_THROWS_AS(geo::GeoPoint(90.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(geo::GeoPoint(-91.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(geo::GeoPoint(0.0, 180.5), std::invalid_argument);
  CHECK_THROWS_AS(geo::GeoPoint(0.0, -181.0), std::invalid_argument);
}

TEST_CASE("haversine of identical points is exactly zero") {
  const geo::GeoPoint p(52.0, 13.0);
  CHECK(geo::haversine(p, p).value == 0.0);
}

TEST_CASE("antipodal points are half the great circle") {
  const double d = geo::haversine({0.0, 0.0}, {0.0, 180.0}).value;
  CHECK(d == doctest::Approx(kPi * geo::kEarthRadiusKm).epsilon(0.1 / 20015.0));
  CHECK(std::abs(d - 20015.1) < 0.1 + 0.05);
}

TEST_CASE("longitude -180 and +180 are the same meridian") {
  CHECK(geo::haversine({10.0, 180.0}, {10.0, -180.0}).value < 1e-9);
}

TEST_CASE("haversine matches the law-of-cosines oracle on 1000 random pairs") {
  std::mt19937_64 rng(20240501);
  for (int i = 0; i < 1000; ++i) {
    const geo::GeoPoint a = random_point(rng);
    const geo::GeoPoint b = random_point(rng);
    const double got = geo::haversine(a, b).value;
    const double want = law_of_cosines_km(a, b);
    if (want > 1.0) {
      CHECK(std::abs(got - want) / want < 1e-6);
    }
  }
}

TEST_CASE("haversine symmetry and triangle inequality") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    const geo::GeoPoint a = random_point(rng);
    const geo::GeoPoint b = random_point(rng);
    const geo::GeoPoint c = random_point(rng);
    const double ab = geo::haversine(a, b).value;
    CHECK(ab == geo::haversine(b, a).value);
    const double ac = geo::haversine(a, c).value;
    const double bc = geo::haversine(b, c).value;
    CHECK(ac <= (ab + bc) * (1.0 + 1e-9) + 1e-9);
    CHECK(ab <= kPi * geo::kEarthRadiusKm * (1.0 + 1e-12));
  }
}

TEST_CASE("mile conversion") {
  CHECK(geo::miles_from_km({0.0}) == 0.0);
  CHECK(geo::miles_from_km({1.609344}) == doctest::Approx(1.0));
  CHECK(geo::miles_from_km({1609.344}) == doctest::Approx(1000.0));
}
