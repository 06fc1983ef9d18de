#include "pqstrip/metrics.hpp"

#include <Eigen/Geometry>
#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace pqstrip {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

double quad_planarity(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                      const Eigen::Vector3d& d) {
    const Eigen::Vector3d u = c - a, v = d - b;
    const double lu = u.norm(), lv = v.norm();
    if (lu == 0.0 || lv == 0.0) return std::numeric_limits<double>::quiet_NaN();
    const Eigen::Vector3d n = u.cross(v);
    double dist;
    if (n.norm() <= 1e-12 * lu * lv)
        dist = (b - a).cross(u).norm() / lu;  // parallel diagonals
    else
        dist = std::abs((b - a).dot(n)) / n.norm();
    return 100.0 * dist / (0.5 * (lu + lv));
}

double polygon_planarity(const std::vector<Eigen::Vector3d>& polygon) {
    std::vector<Eigen::Vector3d> p;
    for (const auto& x : polygon)
        if (p.empty() || (x - p.back()).norm() > 0.0) p.push_back(x);
    while (p.size() > 1 && (p.front() - p.back()).norm() == 0.0) p.pop_back();
    if (polygon.size() < 3) throw std::invalid_argument("polygon_planarity: fewer than 3 corners");
    const size_t n = p.size();
    if (n < 4) return 0.0;
    double sum = 0.0;
    int count = 0;
    for (size_t i = 0; i < n; ++i) {
        const double q = quad_planarity(p[i], p[(i + 1) % n], p[(i + 2) % n], p[(i + 3) % n]);
        if (std::isnan(q)) continue;
        sum += q * q;
        ++count;
    }
    return count ? std::sqrt(sum / count) : 0.0;
}

PlanarityStats planarity(const Eigen::MatrixX3d& V, const std::vector<std::vector<int>>& faces) {
    PlanarityStats s;
    double sum = 0.0;
    for (const auto& f : faces) {
        std::vector<Eigen::Vector3d> poly;
        for (int v : f) poly.push_back(V.row(v));
        const double p = polygon_planarity(poly);
        s.max = std::max(s.max, p);
        sum += p;
        ++s.faces;
    }
    s.mean = s.faces ? sum / s.faces : 0.0;
    return s;
}

std::vector<Eigen::Vector3i> triangulate_polygon(const std::vector<Eigen::Vector3d>& polygon, int max_dp) {
    const int n = static_cast<int>(polygon.size());
    std::vector<Eigen::Vector3i> out;
    if (n < 3) return out;
    if (n > max_dp) {
        for (int i = 0; i < n; ++i) out.emplace_back(-1, i, (i + 1) % n);
        return out;
    }
    auto area = [&](int i, int j, int k) {
        return 0.5 * (polygon[j] - polygon[i]).cross(polygon[k] - polygon[i]).norm();
    };
    // cost(i, j): best triangulation of the sub-polygon i..j
    std::vector<double> cost(static_cast<size_t>(n) * n, 0.0);
    std::vector<int> split(static_cast<size_t>(n) * n, -1);
    auto at = [n](int i, int j) { return static_cast<size_t>(i) * n + j; };
    for (int len = 2; len < n; ++len)
        for (int i = 0; i + len < n; ++i) {
            const int j = i + len;
            double best = std::numeric_limits<double>::infinity();
            for (int k = i + 1; k < j; ++k) {
                const double c = cost[at(i, k)] + cost[at(k, j)] + area(i, k, j);
                if (c < best) {
                    best = c;
                    split[at(i, j)] = k;
                }
            }
            cost[at(i, j)] = best;
        }
    std::vector<std::pair<int, int>> stack{{0, n - 1}};
    while (!stack.empty()) {
        auto [i, j] = stack.back();
        stack.pop_back();
        if (j - i < 2) continue;
        const int k = split[at(i, j)];
        out.emplace_back(i, k, j);
        stack.emplace_back(i, k);
        stack.emplace_back(k, j);
    }
    return out;
}

double TriangleSoup::area() const {
    double s = 0.0;
    for (int i = 0; i < size(); ++i) s += 0.5 * (b[i] - a[i]).cross(c[i] - a[i]).norm();
    return s;
}

TriangleSoup soup_of(const Eigen::MatrixX3d& V, const Eigen::MatrixX3i& F) {
    TriangleSoup s;
    for (int f = 0; f < F.rows(); ++f) {
        s.a.push_back(V.row(F(f, 0)));
        s.b.push_back(V.row(F(f, 1)));
        s.c.push_back(V.row(F(f, 2)));
    }
    return s;
}

TriangleSoup soup_of(const Eigen::MatrixX3d& V, const std::vector<std::vector<int>>& faces) {
    TriangleSoup s;
    for (const auto& f : faces) {
        std::vector<Eigen::Vector3d> poly;
        for (int v : f) poly.push_back(V.row(v));
        Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
        for (const auto& p : poly) centroid += p;
        centroid /= static_cast<double>(poly.size());
        auto pt = [&](int i) { return i < 0 ? centroid : poly[i]; };
        for (const auto& t : triangulate_polygon(poly)) {
            s.a.push_back(pt(t(0)));
            s.b.push_back(pt(t(1)));
            s.c.push_back(pt(t(2)));
        }
    }
    return s;
}

Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
    // Voronoi region classification (Ericson, Real-Time Collision Detection)
    const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) return a;
    const Eigen::Vector3d bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + d1 / (d1 - d3) * ab;
    const Eigen::Vector3d cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + d2 / (d2 - d6) * ac;
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b);
    const double denom = va + vb + vc;
    if (denom == 0.0) {
        // degenerate triangle: nearest of its edges
        Eigen::Vector3d best = a;
        for (auto [s, t] : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}}) {
            const Eigen::Vector3d e = t - s;
            const double l = e.squaredNorm();
            const double x = l > 0 ? std::clamp((p - s).dot(e) / l, 0.0, 1.0) : 0.0;
            const Eigen::Vector3d q = s + x * e;
            if ((q - p).squaredNorm() < (best - p).squaredNorm()) best = q;
        }
        return best;
    }
    return a + (vb / denom) * ab + (vc / denom) * ac;
}

namespace {

using BPoint = bg::model::point<double, 3, bg::cs::cartesian>;
using BBox = bg::model::box<BPoint>;
using Entry = std::pair<BBox, int>;

class TriangleIndex {
public:
    explicit TriangleIndex(const TriangleSoup& soup) : soup_(soup) {
        std::vector<Entry> entries;
        for (int i = 0; i < soup.size(); ++i) {
            const Eigen::Vector3d lo = soup.a[i].cwiseMin(soup.b[i]).cwiseMin(soup.c[i]);
            const Eigen::Vector3d hi = soup.a[i].cwiseMax(soup.b[i]).cwiseMax(soup.c[i]);
            entries.emplace_back(BBox(BPoint(lo.x(), lo.y(), lo.z()), BPoint(hi.x(), hi.y(), hi.z())), i);
        }
        tree_ = bgi::rtree<Entry, bgi::rstar<16>>(entries.begin(), entries.end());
    }

    double distance(const Eigen::Vector3d& p) const {
        const BPoint q(p.x(), p.y(), p.z());
        double best = std::numeric_limits<double>::infinity();
        for (auto it = tree_.qbegin(bgi::nearest(q, static_cast<unsigned>(tree_.size()))); it != tree_.qend(); ++it) {
            if (bg::distance(q, it->first) >= best) break;
            const int i = it->second;
            best = std::min(best, (closest_point_on_triangle(p, soup_.a[i], soup_.b[i], soup_.c[i]) - p).norm());
        }
        return best;
    }

private:
    const TriangleSoup& soup_;
    bgi::rtree<Entry, bgi::rstar<16>> tree_;
};

std::vector<Eigen::Vector3d> sample_soup(const TriangleSoup& soup, int samples, std::mt19937& rng) {
    std::vector<Eigen::Vector3d> pts;
    const double total = soup.area();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < soup.size(); ++i) {
        pts.push_back(soup.a[i]);
        pts.push_back(soup.b[i]);
        pts.push_back(soup.c[i]);
        const double area = 0.5 * (soup.b[i] - soup.a[i]).cross(soup.c[i] - soup.a[i]).norm();
        const double expect = total > 0 ? samples * area / total : 0.0;
        int n = static_cast<int>(expect);
        if (uni(rng) < expect - n) ++n;
        for (int k = 0; k < n; ++k) {
            double r1 = uni(rng), r2 = uni(rng);
            if (r1 + r2 > 1.0) {
                r1 = 1.0 - r1;
                r2 = 1.0 - r2;
            }
            pts.push_back(soup.a[i] + r1 * (soup.b[i] - soup.a[i]) + r2 * (soup.c[i] - soup.a[i]));
        }
    }
    return pts;
}

double one_sided(const std::vector<Eigen::Vector3d>& pts, const TriangleIndex& index) {
    double h = 0.0;
    for (const auto& p : pts) h = std::max(h, index.distance(p));
    return h;
}

}  // namespace

HausdorffResult hausdorff_relative(const TriangleSoup& A, const TriangleSoup& B, double diagonal, int samples,
                                   unsigned seed) {
    if (A.size() == 0 || B.size() == 0) throw std::invalid_argument("hausdorff: empty mesh");
    if (!(diagonal > 0)) throw std::invalid_argument("hausdorff: diagonal must be positive");
    std::mt19937 rng(seed);
    const auto pa = sample_soup(A, samples, rng);
    const auto pb = sample_soup(B, samples, rng);
    const TriangleIndex ia(A), ib(B);
    HausdorffResult r;
    r.a_to_b = one_sided(pa, ib);
    r.b_to_a = one_sided(pb, ia);
    r.absolute = std::max(r.a_to_b, r.b_to_a);
    r.h = 100.0 * r.absolute / diagonal;
    r.samples = samples;
    return r;
}

AngularError angular_error(const Eigen::MatrixX3d& field, const Eigen::MatrixX3d& reference,
                           const Eigen::VectorXd& areas) {
    if (field.rows() != reference.rows() || field.rows() != areas.size())
        throw std::invalid_argument("angular_error: size mismatch");
    AngularError e;
    double wsum = 0.0, sum = 0.0;
    for (Eigen::Index f = 0; f < field.rows(); ++f) {
        const Eigen::Vector3d a = field.row(f), b = reference.row(f);
        if (a.norm() == 0.0 || b.norm() == 0.0) continue;
        const double c = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
        const double deg = std::acos(c) * 180.0 / std::numbers::pi;
        e.max_deg = std::max(e.max_deg, deg);
        sum += areas(f) * deg;
        wsum += areas(f);
    }
    e.mean_deg = wsum > 0 ? sum / wsum : 0.0;
    return e;
}

std::string QualityReport::to_json() const {
    nlohmann::json j;
    j["p_max"] = p_max;
    j["p_mean"] = p_mean;
    j["h"] = h;
    j["hausdorff_samples"] = hausdorff_samples;
    if (has_angular) {
        j["angular_max"] = angular_max;
        j["angular_mean"] = angular_mean;
    }
    j["iterations"] = iterations;
    j["converged"] = converged;
    j["stop_reason"] = stop_reason;
    j["faces"] = faces;
    j["vertices"] = vertices;
    j["strip_faces"] = strip_faces;
    j["planar_faces"] = planar_faces;
    j["singular_vertices"] = singular_vertices;
    j["chord_deviation"] = chord_deviation;
    j["chord_crossings"] = chord_crossings;
    j["config"] = config;
    return j.dump(2);
}

void write_report(const std::filesystem::path& path, const QualityReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << report.to_json() << '\n';
}

}  // namespace pqstrip
