#pragma once

#include <cmath>
#include <numbers>

namespace pmdroute {

// Spherical Earth. Street-scale ring radii (100 m) make ellipsoidal
// corrections irrelevant.
inline constexpr double kEarthRadiusM = 6'371'000.0;

struct GeoPoint {
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, [-180, 180]

    bool valid() const noexcept {
        return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
               lon >= -180.0 && lon <= 180.0;
    }

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline constexpr double deg2rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// Great-circle distance in meters (haversine form).
inline double haversine_m(const GeoPoint& p, const GeoPoint& q) noexcept {
    const double phi1 = deg2rad(p.lat);
    const double phi2 = deg2rad(q.lat);
    const double dphi = phi2 - phi1;
    const double dlambda = deg2rad(q.lon - p.lon);
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::fmin(1.0, std::fmax(0.0, h));
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

/// Spherical midpoint of the great-circle arc between p and q.
inline GeoPoint midpoint(const GeoPoint& p, const GeoPoint& q) noexcept {
    const double phi1 = deg2rad(p.lat);
    const double phi2 = deg2rad(q.lat);
    const double lambda1 = deg2rad(p.lon);
    const double dlambda = deg2rad(q.lon - p.lon);
    const double bx = std::cos(phi2) * std::cos(dlambda);
    const double by = std::cos(phi2) * std::sin(dlambda);
    const double phi = std::atan2(std::sin(phi1) + std::sin(phi2),
                                  std::sqrt((std::cos(phi1) + bx) * (std::cos(phi1) + bx) + by * by));
    double lambda = lambda1 + std::atan2(by, std::cos(phi1) + bx);
    double lon = rad2deg(lambda);
    if (lon > 180.0) lon -= 360.0;
    if (lon < -180.0) lon += 360.0;
    return {rad2deg(phi), lon};
}

/// Meters spanned by one degree of latitude on the spherical model.
inline constexpr double meters_per_degree_lat() noexcept {
    return kEarthRadiusM * std::numbers::pi / 180.0;
}

/// Meters spanned by one degree of longitude at the given latitude.
inline double meters_per_degree_lon(double lat_deg) noexcept {
    return meters_per_degree_lat() * std::cos(deg2rad(lat_deg));
}

/// Point displaced by (east_m, north_m) using the local tangent-plane
/// approximation. Used by synthetic fixtures, not by any metric.
inline GeoPoint offset_m(const GeoPoint& origin, double east_m, double north_m) noexcept {
    return {origin.lat + north_m / meters_per_degree_lat(),
            origin.lon + east_m / meters_per_degree_lon(origin.lat)};
}

}  // namespace pmdroute
