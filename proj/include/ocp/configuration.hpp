#pragma once

// Pinned-charge clusters: lattice generation, admissibility checks
// (spacing, per-point energy residual, cluster separation) and the pinned
// Hamiltonian with its disk reference value. JSON round-trip for cluster files.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "ocp/kernel.hpp"
#include "ocp/numerics.hpp"

namespace ocp {

struct TooFewPointsError : Error {
    using Error::Error;
};

/// A cluster of pinned unit charges: reference positions plus a rigid
/// translation. Effective positions are points + translation.
struct PointCluster {
    std::vector<Complex> points;
    Complex translation{0.0, 0.0};

    std::size_t count() const { return points.size(); }

    std::vector<Complex> effective() const {
        std::vector<Complex> out(points.size());
        for (std::size_t k = 0; k < points.size(); ++k) out[k] = points[k] + translation;
        return out;
    }

    Complex centroid() const {
        Complex s = 0.0;
        for (const auto& p : points) s += p + translation;
        return points.empty() ? Complex(0.0) : s / double(points.size());
    }
};

/// Disk specialization of a screening region: the disk of area pi*M/N whose
/// uniform charge reproduces the cluster's potential outside itself.
struct HoleModel {
    Complex center{0.0, 0.0};
    double radius = 0.0;
    double area = 0.0;

    static HoleModel disk(Complex center, double radius) {
        return {center, radius, M_PI * radius * radius};
    }
    static HoleModel for_cluster(const PointCluster& cluster, BackgroundScale scale) {
        return disk(cluster.centroid(), std::sqrt(double(cluster.count()) / scale.n));
    }
};

/// Triangular-lattice constant giving point density N/pi.
inline double lattice_constant(BackgroundScale scale) {
    return std::sqrt(2.0 * M_PI / (std::sqrt(3.0) * scale.n));
}

/// The M triangular-lattice sites (density N/pi) closest to the requested
/// center, as a cluster translated to sit at that center. Deterministic
/// order: sorted by (distance, re, im).
inline PointCluster generate_lattice_disk(BackgroundScale scale, long long m, Complex center) {
    if (m < 1) throw Error("generate_lattice_disk: M must be >= 1");
    const double ell = lattice_constant(scale);
    const long long k = (long long)std::ceil(std::sqrt(double(m))) + 2;
    std::vector<Complex> sites;
    sites.reserve(std::size_t((2 * k + 1) * (2 * k + 1)));
    for (long long i = -k; i <= k; ++i)
        for (long long j = -k; j <= k; ++j)
            sites.emplace_back(ell * (double(i) + 0.5 * double(j)),
                               ell * (std::sqrt(3.0) / 2.0) * double(j));
    std::sort(sites.begin(), sites.end(), [](Complex a, Complex b) {
        return std::make_tuple(std::abs(a), a.real(), a.imag()) <
               std::make_tuple(std::abs(b), b.real(), b.imag());
    });
    PointCluster cluster;
    cluster.points.assign(sites.begin(), sites.begin() + std::size_t(m));
    Complex centroid = 0.0;
    for (const auto& p : cluster.points) centroid += p;
    centroid /= double(m);
    for (auto& p : cluster.points) p -= centroid;  // center the hole exactly
    cluster.translation = center;
    return cluster;
}

/// Exact min and max over points of the distance to the nearest neighbor.
inline std::pair<double, double> nearest_neighbor_stats(const PointCluster& cluster) {
    const auto w = cluster.effective();
    if (w.size() < 2) throw TooFewPointsError("nearest_neighbor_stats: need at least 2 points");
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        double nn = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < w.size(); ++j)
            if (j != i) nn = std::min(nn, std::abs(w[i] - w[j]));
        mn = std::min(mn, nn);
        mx = std::max(mx, nn);
    }
    return {mn, mx};
}

/// H_N(w) = (N/2) sum |w_k|^2 - sum_{k<l} log|w_k - w_l| at effective
/// positions. Exact O(M^2) double sum.
inline double pinned_hamiltonian(const PointCluster& cluster, BackgroundScale scale) {
    const auto w = cluster.effective();
    double quad = 0.0;
    for (const auto& z : w) quad += std::norm(z);
    double logs = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = i + 1; j < w.size(); ++j) {
            double d = std::abs(w[i] - w[j]);
            if (d < 1e-14) throw DuplicatePointsError("pinned_hamiltonian: coincident points");
            logs += std::log(d);
        }
    return 0.5 * scale.n * quad - logs;
}

/// Reference value of the pinned Hamiltonian for a uniform disk charge:
/// (N^2/2pi) int_H |x|^2 + (N^2/2pi^2) D(1_H,1_H) - (M/2) log M,
/// with int_{D(z0,r)} |x|^2 = pi r^2 (|z0|^2 + r^2/2) and the
/// center-independent self-energy D = pi^2 r^4 / 4 - pi^2 r^4 log r.
inline double hamiltonian_disk_reference(const HoleModel& hole, long long m,
                                         BackgroundScale scale) {
    const double n = scale.n, r = hole.radius;
    double quad = M_PI * r * r * (std::norm(hole.center) + 0.5 * r * r);
    double self = M_PI * M_PI * std::pow(r, 4) * (0.25 - std::log(r));
    return (n * n / (2.0 * M_PI)) * quad + (n * n / (2.0 * M_PI * M_PI)) * self -
           0.5 * double(m) * std::log(double(m));
}

struct AssumptionsReport {
    bool spacing_ok = false;
    double min_nn = 0.0;
    double max_nn = 0.0;
    double energy_residual = 0.0;  // max over clusters of |H - H_ref| / M
    bool separation_ok = false;
    double max_cluster_radius = 0.0;
    double min_pair_distance = std::numeric_limits<double>::infinity();
    double min_boundary_distance = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;

    bool ok() const { return spacing_ok && separation_ok; }
};

/// Checks the admissibility chain R_j <= r1 * min pair distance
/// <= r1 r2 * distance to the outer boundary circle of radius sqrt(1 + c),
/// plus lattice-scale spacing (within [c1,c2] times the lattice constant)
/// and the per-point energy residual against the disk reference.
inline AssumptionsReport separation_check(const std::vector<PointCluster>& clusters,
                                          BackgroundScale scale, double r1 = 0.1,
                                          double r2 = 0.1, double spacing_c1 = 0.5,
                                          double spacing_c2 = 1.5) {
    if (clusters.empty()) throw Error("separation_check: need at least one cluster");
    AssumptionsReport rep;
    rep.r1 = r1;
    rep.r2 = r2;

    double c_total = 0.0;
    for (const auto& cl : clusters) c_total += double(cl.count()) / scale.n;
    const double outer = std::sqrt(1.0 + c_total);

    const double ell = lattice_constant(scale);
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    bool any_pair = false;
    rep.min_boundary_distance = std::numeric_limits<double>::infinity();
    std::vector<Complex> centers;
    std::vector<double> radii;
    for (const auto& cl : clusters) {
        const HoleModel hole = HoleModel::for_cluster(cl, scale);
        double rad = hole.radius;
        for (const auto& w : cl.effective()) rad = std::max(rad, std::abs(w - hole.center));
        centers.push_back(hole.center);
        radii.push_back(rad);
        rep.max_cluster_radius = std::max(rep.max_cluster_radius, rad);
        rep.min_boundary_distance =
            std::min(rep.min_boundary_distance, outer - (std::abs(hole.center) + rad));
        double h = pinned_hamiltonian(cl, scale);
        double h_ref = hamiltonian_disk_reference(hole, (long long)cl.count(), scale);
        rep.energy_residual =
            std::max(rep.energy_residual, std::abs(h - h_ref) / double(cl.count()));
        if (cl.count() >= 2) {
            auto [a, b] = nearest_neighbor_stats(cl);
            mn = std::min(mn, a);
            mx = std::max(mx, b);
            any_pair = true;
        }
    }
    rep.min_nn = any_pair ? mn : 0.0;
    rep.max_nn = any_pair ? mx : 0.0;
    rep.spacing_ok = !any_pair || (mn >= spacing_c1 * ell && mx <= spacing_c2 * ell);

    // distance between enclosing disks, not between their centers
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (std::size_t j = i + 1; j < centers.size(); ++j)
            rep.min_pair_distance =
                std::min(rep.min_pair_distance,
                         std::abs(centers[i] - centers[j]) - radii[i] - radii[j]);

    bool boundary_pos = rep.min_boundary_distance > 0.0;
    if (centers.size() >= 2) {
        rep.separation_ok = boundary_pos &&
                            rep.max_cluster_radius <= r1 * rep.min_pair_distance &&
                            rep.min_pair_distance <= r2 * rep.min_boundary_distance;
    } else {
        // single cluster: the chain collapses to the boundary condition
        rep.separation_ok =
            boundary_pos && rep.max_cluster_radius <= r1 * r2 * rep.min_boundary_distance;
    }
    return rep;
}

// ---- cluster file round-trip: {points: [[re, im], ...], translation: [re, im]}

inline nlohmann::json cluster_to_json(const PointCluster& cluster) {
    nlohmann::json j;
    j["points"] = nlohmann::json::array();
    for (const auto& p : cluster.points) j["points"].push_back({p.real(), p.imag()});
    j["translation"] = {cluster.translation.real(), cluster.translation.imag()};
    return j;
}

inline PointCluster cluster_from_json(const nlohmann::json& j) {
    PointCluster cluster;
    if (!j.contains("points") || !j["points"].is_array())
        throw Error("cluster_from_json: missing points array");
    for (const auto& p : j["points"]) {
        if (!p.is_array() || p.size() != 2)
            throw Error("cluster_from_json: point must be [re, im]");
        cluster.points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    if (j.contains("translation")) {
        const auto& t = j["translation"];
        if (!t.is_array() || t.size() != 2)
            throw Error("cluster_from_json: translation must be [re, im]");
        cluster.translation = {t[0].get<double>(), t[1].get<double>()};
    }
    return cluster;
}

inline void save_cluster(const PointCluster& cluster, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("save_cluster: cannot open " + path);
    out << cluster_to_json(cluster).dump(2) << "\n";
}

inline PointCluster load_cluster(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_cluster: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return cluster_from_json(j);
}

}  // namespace ocp
