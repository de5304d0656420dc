#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

namespace roadmesh::detail {

namespace bgi = boost::geometry::index;

/// 2-D point index over boost's R-tree. Query results are sorted by
/// (distance, index) so callers see a deterministic order.
class PointIndex2d {
  using Point = boost::geometry::model::point<double, 2, boost::geometry::cs::cartesian>;
  using Box = boost::geometry::model::box<Point>;
  using Entry = std::pair<Point, int>;
  using Tree = bgi::rtree<Entry, bgi::quadratic<16>>;

 public:
  explicit PointIndex2d(const Eigen::Matrix2Xd& points) {
    std::vector<Entry> entries;
    entries.reserve(points.cols());
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
      entries.emplace_back(Point(points(0, i), points(1, i)), static_cast<int>(i));
    }
    tree_ = Tree(entries.begin(), entries.end());
  }

  /// Up to k nearest points as (distance, index).
  std::vector<std::pair<double, int>> nearest(double x, double y, int k) const {
    std::vector<Entry> hits;
    tree_.query(bgi::nearest(Point(x, y), static_cast<unsigned>(k)), std::back_inserter(hits));
    return sorted(hits, x, y);
  }

  /// All points with distance <= radius, as (distance, index).
  std::vector<std::pair<double, int>> within(double x, double y, double radius) const {
    std::vector<Entry> hits;
    const Box box(Point(x - radius, y - radius), Point(x + radius, y + radius));
    tree_.query(bgi::intersects(box), std::back_inserter(hits));
    auto out = sorted(hits, x, y);
    std::erase_if(out, [radius](const auto& h) { return h.first > radius; });
    return out;
  }

 private:
  static std::vector<std::pair<double, int>> sorted(const std::vector<Entry>& hits, double x,
                                                    double y) {
    std::vector<std::pair<double, int>> out;
    out.reserve(hits.size());
    for (const auto& [p, idx] : hits) {
      const double dx = p.get<0>() - x;
      const double dy = p.get<1>() - y;
      out.emplace_back(std::sqrt(dx * dx + dy * dy), idx);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  Tree tree_;
};

}  // namespace roadmesh::detail
