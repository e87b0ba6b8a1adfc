#pragma once

#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "mapmeta/common.hpp"
#include "mapmeta/sheet.hpp"

namespace mapmeta {

// Mean earth radius in kilometers.
inline constexpr double kEarthRadiusKm = 6371.0088;

// Great-circle distance between two (lat, lng) points in degrees.
inline double haversine_km(const LatLngDeg& g, const LatLngDeg& p) {
    constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
    double lat1 = g.lat * kDegToRad, lat2 = p.lat * kDegToRad;
    double dlat = (g.lat - p.lat) * kDegToRad;
    double dlng = (g.lng - p.lng) * kDegToRad;
    double sl = std::sin(dlat / 2), sg = std::sin(dlng / 2);
    double h = sl * sl + std::cos(lat1) * std::cos(lat2) * sg * sg;
    h = std::min(1.0, std::max(0.0, h));
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

struct GeoCandidate {
    std::string source_text;
    LatLngDeg point;
    int rank = 0;

    void validate() const {
        if (point.lat < -90.0 || point.lat > 90.0 || point.lng < -180.0 || point.lng > 180.0)
            throw validation_error("coordinate out of range for '" + source_text + "'");
    }
};

struct DbscanResult {
    std::vector<std::vector<int>> clusters;  // indices into the input, in formation order
    std::vector<int> noise;
};

// Textbook DBSCAN with haversine distances. Core points have at least
// min_pts neighbors within eps (counting themselves); border points join
// the first cluster that reaches them in scan (input) order.
inline DbscanResult dbscan(const std::vector<LatLngDeg>& points, double eps_km, int min_pts) {
    if (!(eps_km > 0.0)) throw contract_error("dbscan: eps_km must be positive");
    if (min_pts < 1) throw contract_error("dbscan: min_pts must be >= 1");
    int n = static_cast<int>(points.size());
    std::vector<std::vector<int>> neighbors(n);
    for (int i = 0; i < n; ++i) {
        neighbors[i].push_back(i);
        for (int j = i + 1; j < n; ++j) {
            if (haversine_km(points[i], points[j]) <= eps_km) {
                neighbors[i].push_back(j);
                neighbors[j].push_back(i);
            }
        }
    }
    for (auto& nb : neighbors) std::sort(nb.begin(), nb.end());

    constexpr int kUnvisited = -2, kNoise = -1;
    std::vector<int> label(n, kUnvisited);
    DbscanResult result;
    for (int i = 0; i < n; ++i) {
        if (label[i] != kUnvisited) continue;
        if (static_cast<int>(neighbors[i].size()) < min_pts) {
            label[i] = kNoise;
            continue;
        }
        int cluster = static_cast<int>(result.clusters.size());
        result.clusters.emplace_back();
        label[i] = cluster;
        result.clusters[cluster].push_back(i);
        std::deque<int> frontier(neighbors[i].begin(), neighbors[i].end());
        while (!frontier.empty()) {
            int q = frontier.front();
            frontier.pop_front();
            if (label[q] == kNoise) {  // border point rescued by this cluster
                label[q] = cluster;
                result.clusters[cluster].push_back(q);
                continue;
            }
            if (label[q] != kUnvisited) continue;
            label[q] = cluster;
            result.clusters[cluster].push_back(q);
            if (static_cast<int>(neighbors[q].size()) >= min_pts)
                frontier.insert(frontier.end(), neighbors[q].begin(), neighbors[q].end());
        }
        std::sort(result.clusters[cluster].begin(), result.clusters[cluster].end());
    }
    for (int i = 0; i < n; ++i)
        if (label[i] == kNoise) result.noise.push_back(i);
    return result;
}

struct GeoEstimate {
    LatLngDeg point;
    int cluster_size = 0;
    int total_candidates = 0;
    bool degraded = false;  // no valid cluster; point is the mean of everything
};

namespace detail {

inline LatLngDeg mean_point(const std::vector<LatLngDeg>& points, const std::vector<int>& idx) {
    LatLngDeg m;
    for (int i : idx) {
        m.lat += points[i].lat;
        m.lng += points[i].lng;
    }
    m.lat /= static_cast<double>(idx.size());
    m.lng /= static_cast<double>(idx.size());
    return m;
}

}  // namespace detail

// Centroid of the largest DBSCAN cluster; size ties prefer the tighter
// cluster (smaller mean distance to its own centroid), then the one
// formed first. All-noise inputs degrade to the mean of all candidates.
inline GeoEstimate estimate_location(const std::vector<GeoCandidate>& candidates, double eps_km,
                                     int min_pts) {
    if (candidates.empty()) throw contract_error("estimate_location: no candidates");
    for (const auto& c : candidates) c.validate();
    std::vector<LatLngDeg> points;
    points.reserve(candidates.size());
    for (const auto& c : candidates) points.push_back(c.point);

    auto clustering = dbscan(points, eps_km, min_pts);
    GeoEstimate est;
    est.total_candidates = static_cast<int>(candidates.size());
    if (clustering.clusters.empty()) {
        std::vector<int> all(points.size());
        for (size_t i = 0; i < points.size(); ++i) all[i] = static_cast<int>(i);
        est.point = detail::mean_point(points, all);
        est.cluster_size = 0;
        est.degraded = true;
        return est;
    }

    int best = 0;
    double best_spread = -1.0;
    auto spread_of = [&](const std::vector<int>& members) {
        LatLngDeg c = detail::mean_point(points, members);
        double total = 0.0;
        for (int i : members) total += haversine_km(c, points[i]);
        return total / static_cast<double>(members.size());
    };
    for (size_t k = 0; k < clustering.clusters.size(); ++k) {
        const auto& members = clustering.clusters[k];
        if (members.size() > clustering.clusters[best].size()) {
            best = static_cast<int>(k);
            best_spread = -1.0;
        } else if (members.size() == clustering.clusters[best].size() &&
                   static_cast<int>(k) != best) {
            if (best_spread < 0) best_spread = spread_of(clustering.clusters[best]);
            double s = spread_of(members);
            if (s < best_spread) {
                best = static_cast<int>(k);
                best_spread = s;
            }
        }
    }
    est.point = detail::mean_point(points, clustering.clusters[best]);
    est.cluster_size = static_cast<int>(clustering.clusters[best].size());
    return est;
}

// Geo estimate file: `estimate <lat> <lng> <cluster_size> <total> <degraded>`
// or the single record `no-estimate` when geocoding produced nothing.
inline std::string emit_estimate(const GeoEstimate& est) {
    return "estimate " + format_double(est.point.lat) + " " + format_double(est.point.lng) + " " +
           std::to_string(est.cluster_size) + " " + std::to_string(est.total_candidates) + " " +
           std::string(est.degraded ? "1" : "0") + "\n";
}

inline std::optional<GeoEstimate> parse_estimate(std::string_view content,
                                                 const std::string& source = "<string>") {
    for (const auto& raw : split_on(content, '\n')) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line == "no-estimate") return std::nullopt;
        auto tokens = split_ws(line);
        if (tokens.size() != 6 || tokens[0] != "estimate")
            throw parse_error(source + ": bad estimate record");
        GeoEstimate est;
        est.point.lat = parse_double(tokens[1], "lat");
        est.point.lng = parse_double(tokens[2], "lng");
        est.cluster_size = static_cast<int>(parse_int(tokens[3], "cluster_size"));
        est.total_candidates = static_cast<int>(parse_int(tokens[4], "total"));
        est.degraded = tokens[5] == "1";
        return est;
    }
    throw parse_error(source + ": empty estimate file");
}

}  // namespace mapmeta
