#pragma once

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace slipstokes {

/// Uniform tensor grid on the unit square.
///
/// Scalars (stream function, vorticity) live on the n x n interior nodes and
/// vanish on the boundary. Velocity component 1 lives on y-edges (vertical
/// node pairs), component 2 on x-edges (horizontal node pairs); each edge set
/// holds n * (n + 1) values.
///
/// Index conventions:
///   node (i, j)        -> j * n + i,         at ((i+1)h, (j+1)h)
///   comp1 edge (i, m)  -> m * n + i,         at ((i+1)h, (m+1/2)h), m in [0, n]
///   comp2 edge (m, j)  -> j * (n + 1) + m,   at ((m+1/2)h, (j+1)h), m in [0, n]
struct Grid {
  int n = 0;
  double h = 0.0;

  int node_count() const { return n * n; }
  int edge_count() const { return n * (n + 1); }

  int node_index(int i, int j) const { return j * n + i; }
  int comp1_index(int i, int m) const { return m * n + i; }
  int comp2_index(int m, int j) const { return j * (n + 1) + m; }

  /// Coordinate of the k-th grid line (k = 0 and k = n + 1 are the walls).
  /// Computed as k / (n + 1) so the walls sit exactly at 0 and 1.
  double line(int k) const { return static_cast<double>(k) / static_cast<double>(n + 1); }
  /// Coordinate halfway between grid lines k and k + 1.
  double mid(int k) const { return (2.0 * k + 1.0) / (2.0 * static_cast<double>(n + 1)); }

  std::pair<double, double> node_coord(int index) const;
  std::pair<double, double> comp1_coord(int index) const;
  std::pair<double, double> comp2_coord(int index) const;

  friend bool operator==(const Grid& a, const Grid& b) { return a.n == b.n; }
};

/// Throws ErrorKind::Size unless 2 <= n <= 256.
Grid build_grid(int n);

/// Scalar on interior nodes.
struct NodeField {
  Grid grid;
  Eigen::VectorXd values;

  static NodeField zeros(const Grid& grid);
};

/// Two staggered velocity components.
struct VelocityField {
  Grid grid;
  Eigen::VectorXd comp1;
  Eigen::VectorXd comp2;

  static VelocityField zeros(const Grid& grid);
};

struct Rectangle {
  double x0, x1, y0, y1;
  friend bool operator==(const Rectangle&, const Rectangle&) = default;
};

struct Disk {
  double cx, cy, radius;
  friend bool operator==(const Disk&, const Disk&) = default;
};

using RegionShape = std::variant<Rectangle, Disk>;

bool contains(const RegionShape& shape, double x, double y);

/// Observation / control region restricted to the grid.
struct RegionMask {
  Grid grid;
  std::vector<char> node_mask;
  std::vector<char> comp1_mask;
  std::vector<char> comp2_mask;
  /// Empty for derived masks (complements, full-domain helpers).
  std::optional<RegionShape> shape;

  int node_count() const;
  int edge_count() const;

  /// Mask of all dofs not in this one.
  RegionMask complement() const;
};

/// Populates node and edge-midpoint masks; throws DegenerateRegion when no
/// node falls inside the shape.
RegionMask build_region_mask(const Grid& grid, const RegionShape& shape);

/// Mask selecting every dof.
RegionMask full_region(const Grid& grid);

/// Finite union of closed intervals inside [0, T].
class TimeSet {
 public:
  using Interval = std::pair<double, double>;

  TimeSet() = default;

  const std::vector<Interval>& intervals() const { return intervals_; }
  double horizon() const { return horizon_; }
  double measure() const;
  double sup() const { return intervals_.back().second; }
  bool contains(double t) const;

  friend bool operator==(const TimeSet&, const TimeSet&) = default;

 private:
  friend TimeSet build_time_set(std::vector<Interval> intervals, double horizon);
  std::vector<Interval> intervals_;
  double horizon_ = 0.0;
};

/// Sorts and merges overlapping intervals. Throws InvalidInput for pairs
/// outside [0, T] or reversed, DegenerateTimeSet for zero total measure.
TimeSet build_time_set(std::vector<TimeSet::Interval> intervals, double horizon);

double inner(const NodeField& a, const NodeField& b);
double inner(const VelocityField& a, const VelocityField& b);

/// sqrt(h^2 * sum of squares over masked dofs); mask == nullptr means all dofs.
double masked_l2_norm(const NodeField& field, const RegionMask* mask = nullptr);
double masked_l2_norm(const VelocityField& field, const RegionMask* mask = nullptr);

/// Zeroes all dofs outside the mask.
VelocityField restrict_to(const VelocityField& field, const RegionMask& mask);

void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace slipstokes
