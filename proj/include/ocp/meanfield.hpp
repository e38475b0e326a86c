#pragma once

// Closed-form equilibrium measures and mean-field energies for a disk droplet
// punctured by disjoint disk holes, the translation gradient, the
// cluster-splitting difference and its scale-free algebraic identity.

#include <cmath>
#include <string>
#include <vector>

#include "ocp/configuration.hpp"
#include "ocp/kernel.hpp"
#include "ocp/numerics.hpp"

namespace ocp {

struct OverlappingHolesError : Error {
    using Error::Error;
};
struct HoleOutsideDropletError : Error {
    using Error::Error;
};

/// Tolerance by which disjoint hole centers must exceed the sum of radii.
inline constexpr double kHoleDisjointSlack = 1e-9;

/// Potential of the uniform unit-density disk: -(1/pi)(log|.| * 1_{D(0,R)})(x).
inline double newton_potential_disk(Complex x, double r) {
    if (!(r > 0.0)) throw Error("newton_potential_disk: R must be positive");
    double ax = std::abs(x);
    if (ax >= r) return -r * r * std::log(ax);
    return -0.5 * ax * ax + 0.5 * r * r - r * r * std::log(r);
}

/// D(1_{D(0,R)}, 1_{D(0,R)}) = pi^2 R^4 / 4 - pi^2 R^4 log R.
inline double disk_self_energy(double r) {
    if (!(r > 0.0)) throw Error("disk_self_energy: R must be positive");
    return M_PI * M_PI * std::pow(r, 4) * (0.25 - std::log(r));
}

/// C_R = N J R^2 - 2 N J R^2 log R.
inline double c_r_constant(double n, double j, double r) {
    if (!(n > 0.0 && j > 0.0 && r > 0.0)) throw Error("c_r_constant: arguments must be positive");
    return n * j * r * r * (1.0 - 2.0 * std::log(r));
}

/// Mobile charge J in background scale N with pinned clusters and their disk
/// screening regions. Droplet radius R = sqrt((J + M)/N).
struct MeanFieldProblem {
    BackgroundScale scale;
    double charge_j;
    std::vector<PointCluster> clusters;
    std::vector<HoleModel> holes;

    static MeanFieldProblem make(BackgroundScale scale, double charge_j,
                                 std::vector<PointCluster> clusters) {
        MeanFieldProblem p{scale, charge_j, std::move(clusters), {}};
        if (!(charge_j > 0.0)) throw Error("MeanFieldProblem: J must be positive");
        for (const auto& cl : p.clusters) p.holes.push_back(HoleModel::for_cluster(cl, scale));
        return p;
    }

    double total_pinned() const {
        double m = 0.0;
        for (const auto& cl : clusters) m += double(cl.count());
        return m;
    }
    double droplet_radius() const { return std::sqrt((charge_j + total_pinned()) / scale.n); }
};

struct MeanFieldResult {
    double energy = 0.0;  // E^MF in the scale-N^2 internal convention
    double c_r = 0.0;
    double droplet_radius = 0.0;
    // D(1_{D \ H}, 1_{D \ H}) decomposition
    double disk_self = 0.0;
    double disk_hole_cross = 0.0;  // sum_j D(1_D, 1_{H_j})
    double hole_self = 0.0;        // sum_j D(1_{H_j}, 1_{H_j})
    double hole_hole_cross = 0.0;  // 2 sum_{i<j} D(1_{H_i}, 1_{H_j})
    double d_total = 0.0;

    double normalized() const { return energy; }  // reported per problem convention
};

namespace detail {

inline void check_hole_geometry(const MeanFieldProblem& p) {
    const double r = p.droplet_radius();
    for (const auto& h : p.holes)
        if (std::abs(h.center) + h.radius > r + 1e-12)
            throw HoleOutsideDropletError("mean field: hole extends outside the droplet");
    for (std::size_t i = 0; i < p.holes.size(); ++i)
        for (std::size_t j = i + 1; j < p.holes.size(); ++j) {
            double gap = std::abs(p.holes[i].center - p.holes[j].center) -
                         (p.holes[i].radius + p.holes[j].radius);
            if (gap < kHoleDisjointSlack)
                throw OverlappingHolesError("mean field: holes are not disjoint");
        }
}

// D(1_{D(0,R)}, 1_{D(z0,r)}) for a hole strictly inside the droplet: the
// droplet potential is -|x|^2/2 + R^2/2 - R^2 log R there.
inline double disk_hole_cross_energy(double r_droplet, const HoleModel& hole) {
    double quad = M_PI * hole.radius * hole.radius *
                  (std::norm(hole.center) + 0.5 * hole.radius * hole.radius);
    return M_PI * (-0.5 * quad +
                   hole.area * (0.5 * r_droplet * r_droplet -
                                r_droplet * r_droplet * std::log(r_droplet)));
}

// D(1_{H_i}, 1_{H_j}) for disjoint holes via the screening identity: the
// uniform hole charge acts, outside itself, like its pinned point charges.
inline double hole_pair_cross_energy(const PointCluster& a, const PointCluster& b, double n) {
    double s = 0.0;
    for (const auto& wa : a.effective())
        for (const auto& wb : b.effective()) s += std::log(std::abs(wa - wb));
    return -(M_PI * M_PI / (n * n)) * s;
}

}  // namespace detail

/// E^MF = C_R / 2 - (N^2 / 2 pi^2) D(1_{D(0,R) \ H}, 1_{D(0,R) \ H}),
/// assembled from closed forms only.
inline MeanFieldResult emf_energy(const MeanFieldProblem& p) {
    detail::check_hole_geometry(p);
    const double n = p.scale.n;
    MeanFieldResult res;
    res.droplet_radius = p.droplet_radius();
    res.c_r = c_r_constant(n, p.charge_j, res.droplet_radius);
    res.disk_self = disk_self_energy(res.droplet_radius);
    for (const auto& h : p.holes) {
        res.disk_hole_cross += detail::disk_hole_cross_energy(res.droplet_radius, h);
        res.hole_self += disk_self_energy(h.radius);
    }
    for (std::size_t i = 0; i < p.clusters.size(); ++i)
        for (std::size_t j = i + 1; j < p.clusters.size(); ++j)
            res.hole_hole_cross +=
                2.0 * detail::hole_pair_cross_energy(p.clusters[i], p.clusters[j], n);
    res.d_total = res.disk_self - 2.0 * res.disk_hole_cross + res.hole_self + res.hole_hole_cross;
    res.energy = 0.5 * res.c_r - (n * n / (2.0 * M_PI * M_PI)) * res.d_total;
    return res;
}

/// Gradient of E^MF in the indexed cluster's translation:
/// -N sum_k (w_k + a), returned as a complex 2-vector.
inline Complex emf_gradient(const MeanFieldProblem& p, std::size_t cluster_index) {
    if (cluster_index >= p.clusters.size()) throw Error("emf_gradient: bad cluster index");
    detail::check_hole_geometry(p);
    Complex s = 0.0;
    for (const auto& w : p.clusters[cluster_index].effective()) s += w;
    return -p.scale.n * s;
}

/// Closed form for E^MF_12 - E^MF_1 - E^MF_2 at mobile charge J, evaluated
/// term by term (C_R differences, pinned interaction sum, R^4 bracket and
/// the two boundary-annulus terms).
inline double emf_split_difference(BackgroundScale scale, const PointCluster& cluster1,
                                   const PointCluster& cluster2, double charge_j) {
    const double n = scale.n;
    const double m1 = double(cluster1.count()), m2 = double(cluster2.count());
    const HoleModel h1 = HoleModel::for_cluster(cluster1, scale);
    const HoleModel h2 = HoleModel::for_cluster(cluster2, scale);
    if (std::abs(h1.center - h2.center) - (h1.radius + h2.radius) < kHoleDisjointSlack)
        throw OverlappingHolesError("emf_split_difference: holes are not disjoint");

    const double r12 = std::sqrt((charge_j + m1 + m2) / n);
    const double r1 = std::sqrt((charge_j + m1) / n);
    const double r2 = std::sqrt((charge_j + m2) / n);

    double total = 0.5 * (c_r_constant(n, charge_j, r12) - c_r_constant(n, charge_j, r1) -
                          c_r_constant(n, charge_j, r2));
    for (const auto& wa : cluster1.effective())
        for (const auto& wb : cluster2.effective()) total += std::log(std::abs(wa - wb));
    auto quart = [](double r) { return std::pow(r, 4) * (0.25 - std::log(r)); };
    total -= 0.5 * n * n * (quart(r12) - quart(r1) - quart(r2));
    auto annulus = [](double r_big, double r_small) {
        return r_big * r_big * (std::log(r_big) - 0.5) -
               r_small * r_small * (std::log(r_small) - 0.5);
    };
    total -= m1 * n * annulus(r12, r1);
    total -= m2 * n * annulus(r12, r2);
    return total;
}

/// Scale-free residual of the algebraic identity behind the splitting
/// formula: LHS (the 3/8-and-log bracket) minus RHS (C_R, R^4 and annulus
/// terms at N = 1). Must vanish to rounding for c1, c2 in (0, 1).
inline double mf_identity_check(double c1, double c2) {
    if (!(c1 > 0.0 && c1 < 1.0 && c2 > 0.0 && c2 < 1.0))
        throw Error("mf_identity_check: c1, c2 must lie in (0, 1)");
    const double c = c1 + c2;
    auto sq = [](double x) { return x * x; };
    double lhs = -3.0 / 8.0 + (3.0 / 8.0) * c * c - (3.0 / 8.0) * (c1 * c1 + c2 * c2) -
                 0.25 * sq(1.0 + c) * std::log(1.0 + c) +
                 0.25 * (sq(1.0 + c1) * std::log(1.0 + c1) + sq(1.0 + c2) * std::log(1.0 + c2));

    const double r12 = std::sqrt(1.0 + c), r1 = std::sqrt(1.0 + c1), r2 = std::sqrt(1.0 + c2);
    auto cr = [](double r) { return r * r * (1.0 - 2.0 * std::log(r)); };  // C_R/N^2 at J=N
    auto quart = [](double r) { return std::pow(r, 4) * (0.25 - std::log(r)); };
    auto annulus = [](double rb, double rs) {
        return rb * rb * (std::log(rb) - 0.5) - rs * rs * (std::log(rs) - 0.5);
    };
    double rhs = 0.5 * (cr(r12) - cr(r1) - cr(r2)) - 0.5 * (quart(r12) - quart(r1) - quart(r2)) -
                 c1 * annulus(r12, r1) - c2 * annulus(r12, r2);
    return lhs - rhs;
}

}  // namespace ocp
