#include "slipstokes/geometry.hpp"

#include "slipstokes/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace slipstokes {

std::pair<double, double> Grid::node_coord(int index) const {
  return {line(index % n + 1), line(index / n + 1)};
}

std::pair<double, double> Grid::comp1_coord(int index) const {
  return {line(index % n + 1), mid(index / n)};
}

std::pair<double, double> Grid::comp2_coord(int index) const {
  return {mid(index % (n + 1)), line(index / (n + 1) + 1)};
}

Grid build_grid(int n) {
  if (n < 2 || n > 256) {
    throw Error(ErrorKind::Size,
                "grid size n=" + std::to_string(n) + " outside [2, 256]");
  }
  return Grid{n, 1.0 / static_cast<double>(n + 1)};
}

NodeField NodeField::zeros(const Grid& grid) {
  return NodeField{grid, Eigen::VectorXd::Zero(grid.node_count())};
}

VelocityField VelocityField::zeros(const Grid& grid) {
  return VelocityField{grid, Eigen::VectorXd::Zero(grid.edge_count()),
                       Eigen::VectorXd::Zero(grid.edge_count())};
}

bool contains(const RegionShape& shape, double x, double y) {
  return std::visit(
      [&](const auto& s) -> bool {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Rectangle>) {
          return x >= s.x0 && x <= s.x1 && y >= s.y0 && y <= s.y1;
        } else {
          const double dx = x - s.cx;
          const double dy = y - s.cy;
          return dx * dx + dy * dy <= s.radius * s.radius;
        }
      },
      shape);
}

int RegionMask::node_count() const {
  return static_cast<int>(std::count(node_mask.begin(), node_mask.end(), 1));
}

int RegionMask::edge_count() const {
  return static_cast<int>(std::count(comp1_mask.begin(), comp1_mask.end(), 1) +
                          std::count(comp2_mask.begin(), comp2_mask.end(), 1));
}

RegionMask RegionMask::complement() const {
  RegionMask out{grid, node_mask, comp1_mask, comp2_mask, std::nullopt};
  for (auto* v : {&out.node_mask, &out.comp1_mask, &out.comp2_mask}) {
    for (char& c : *v) c = c ? 0 : 1;
  }
  return out;
}

RegionMask build_region_mask(const Grid& grid, const RegionShape& shape) {
  const bool valid = std::visit(
      [](const auto& s) -> bool {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Rectangle>) {
          return s.x0 < s.x1 && s.y0 < s.y1 && s.x1 > 0.0 && s.x0 < 1.0 &&
                 s.y1 > 0.0 && s.y0 < 1.0;
        } else {
          return s.radius > 0.0 && std::isfinite(s.cx) && std::isfinite(s.cy);
        }
      },
      shape);
  if (!valid) {
    throw Error(ErrorKind::DegenerateRegion,
                "region shape is empty or misses the open unit square");
  }

  RegionMask mask;
  mask.grid = grid;
  mask.shape = shape;
  mask.node_mask.resize(grid.node_count());
  mask.comp1_mask.resize(grid.edge_count());
  mask.comp2_mask.resize(grid.edge_count());
  for (int k = 0; k < grid.node_count(); ++k) {
    const auto [x, y] = grid.node_coord(k);
    mask.node_mask[k] = contains(shape, x, y) ? 1 : 0;
  }
  for (int k = 0; k < grid.edge_count(); ++k) {
    const auto [x1, y1] = grid.comp1_coord(k);
    mask.comp1_mask[k] = contains(shape, x1, y1) ? 1 : 0;
    const auto [x2, y2] = grid.comp2_coord(k);
    mask.comp2_mask[k] = contains(shape, x2, y2) ? 1 : 0;
  }
  if (mask.node_count() == 0) {
    throw Error(ErrorKind::DegenerateRegion,
                "region contains no grid node at n=" + std::to_string(grid.n));
  }
  return mask;
}

RegionMask full_region(const Grid& grid) {
  return build_region_mask(grid, Rectangle{0.0, 1.0, 0.0, 1.0});
}

double TimeSet::measure() const {
  double total = 0.0;
  for (const auto& [a, b] : intervals_) total += b - a;
  return total;
}

bool TimeSet::contains(double t) const {
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [t](const Interval& iv) { return t >= iv.first && t <= iv.second; });
}

TimeSet build_time_set(std::vector<TimeSet::Interval> intervals, double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorKind::InvalidInput, "time horizon must be positive and finite");
  }
  for (const auto& [a, b] : intervals) {
    if (!(a >= 0.0) || !(b <= horizon) || !(a <= b)) {
      throw Error(ErrorKind::InvalidInput,
                  "time interval (" + std::to_string(a) + ", " + std::to_string(b) +
                      ") not inside [0, " + std::to_string(horizon) + "]");
    }
  }
  std::erase_if(intervals, [](const TimeSet::Interval& iv) { return iv.first == iv.second; });
  std::sort(intervals.begin(), intervals.end());

  TimeSet out;
  out.horizon_ = horizon;
  for (const auto& iv : intervals) {
    if (!out.intervals_.empty() && iv.first <= out.intervals_.back().second) {
      out.intervals_.back().second = std::max(out.intervals_.back().second, iv.second);
    } else {
      out.intervals_.push_back(iv);
    }
  }
  if (out.intervals_.empty()) {
    throw Error(ErrorKind::DegenerateTimeSet, "time set has zero measure");
  }
  return out;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorKind::Shape, std::string(what) + ": grid mismatch (n=" +
                                      std::to_string(a.n) + " vs n=" + std::to_string(b.n) + ")");
  }
}

namespace {

void check_sizes(const NodeField& f) {
  if (f.values.size() != f.grid.node_count()) {
    throw Error(ErrorKind::Shape, "node field length does not match its grid");
  }
}

void check_sizes(const VelocityField& f) {
  if (f.comp1.size() != f.grid.edge_count() || f.comp2.size() != f.grid.edge_count()) {
    throw Error(ErrorKind::Shape, "velocity field length does not match its grid");
  }
}

double masked_sum_squares(const Eigen::VectorXd& v, const std::vector<char>* mask) {
  if (mask == nullptr) return v.squaredNorm();
  double s = 0.0;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if ((*mask)[k]) s += v[k] * v[k];
  }
  return s;
}

}  // namespace

double inner(const NodeField& a, const NodeField& b) {
  require_same_grid(a.grid, b.grid, "inner");
  check_sizes(a);
  check_sizes(b);
  return a.grid.h * a.grid.h * a.values.dot(b.values);
}

double inner(const VelocityField& a, const VelocityField& b) {
  require_same_grid(a.grid, b.grid, "inner");
  check_sizes(a);
  check_sizes(b);
  return a.grid.h * a.grid.h * (a.comp1.dot(b.comp1) + a.comp2.dot(b.comp2));
}

double masked_l2_norm(const NodeField& field, const RegionMask* mask) {
  check_sizes(field);
  if (mask) require_same_grid(field.grid, mask->grid, "masked_l2_norm");
  const double h = field.grid.h;
  return h * std::sqrt(masked_sum_squares(field.values, mask ? &mask->node_mask : nullptr));
}

double masked_l2_norm(const VelocityField& field, const RegionMask* mask) {
  check_sizes(field);
  if (mask) require_same_grid(field.grid, mask->grid, "masked_l2_norm");
  const double h = field.grid.h;
  const double s = masked_sum_squares(field.comp1, mask ? &mask->comp1_mask : nullptr) +
                   masked_sum_squares(field.comp2, mask ? &mask->comp2_mask : nullptr);
  return h * std::sqrt(s);
}

VelocityField restrict_to(const VelocityField& field, const RegionMask& mask) {
  require_same_grid(field.grid, mask.grid, "restrict_to");
  check_sizes(field);
  VelocityField out = field;
  for (int k = 0; k < field.grid.edge_count(); ++k) {
    if (!mask.comp1_mask[k]) out.comp1[k] = 0.0;
    if (!mask.comp2_mask[k]) out.comp2[k] = 0.0;
  }
  return out;
}

}  // namespace slipstokes
