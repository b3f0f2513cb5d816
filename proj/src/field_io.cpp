#include "slipstokes/field_io.hpp"

#include "slipstokes/errors.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <istream>
#include <ostream>

namespace slipstokes {
namespace {

constexpr std::array<char, 4> kMagic{'S', 'S', 'L', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xffu);
  out.write(b.data(), 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b{};
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xffu);
  out.write(b.data(), 8);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw Error(ErrorKind::InvalidInput, "truncated field dump header");
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
  return v;
}

double get_f64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (!in) throw Error(ErrorKind::InvalidInput, "truncated field dump payload");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return std::bit_cast<double>(v);
}

void write_header(std::ostream& out, const Grid& grid, FieldKind kind, std::uint32_t count) {
  out.write(kMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(grid.n));
  put_u32(out, static_cast<std::uint32_t>(kind));
  put_u32(out, count);
}

void write_row(std::ostream& out, int index, double x, double y, double value) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", index, x, y, value);
  out << buf;
}

}  // namespace

void write_binary(std::ostream& out, const NodeField& field) {
  write_header(out, field.grid, FieldKind::Node, static_cast<std::uint32_t>(field.values.size()));
  for (double v : field.values) put_f64(out, v);
}

void write_binary(std::ostream& out, const VelocityField& field) {
  write_header(out, field.grid, FieldKind::Velocity,
               static_cast<std::uint32_t>(field.comp1.size() + field.comp2.size()));
  for (double v : field.comp1) put_f64(out, v);
  for (double v : field.comp2) put_f64(out, v);
}

std::variant<NodeField, VelocityField> read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || magic != kMagic) throw Error(ErrorKind::InvalidInput, "not an SSL1 field dump");
  const auto n = static_cast<int>(get_u32(in));
  const auto kind = get_u32(in);
  const auto count = get_u32(in);
  const Grid grid = build_grid(n);
  if (kind == static_cast<std::uint32_t>(FieldKind::Node)) {
    if (count != static_cast<std::uint32_t>(grid.node_count())) {
      throw Error(ErrorKind::InvalidInput, "node dump has wrong value count");
    }
    NodeField f = NodeField::zeros(grid);
    for (auto& v : f.values) v = get_f64(in);
    return f;
  }
  if (kind == static_cast<std::uint32_t>(FieldKind::Velocity)) {
    if (count != static_cast<std::uint32_t>(2 * grid.edge_count())) {
      throw Error(ErrorKind::InvalidInput, "velocity dump has wrong value count");
    }
    VelocityField f = VelocityField::zeros(grid);
    for (auto& v : f.comp1) v = get_f64(in);
    for (auto& v : f.comp2) v = get_f64(in);
    return f;
  }
  throw Error(ErrorKind::InvalidInput, "unknown field kind tag " + std::to_string(kind));
}

void write_csv(std::ostream& out, const NodeField& field) {
  out << "index,x,y,value\n";
  for (int k = 0; k < field.grid.node_count(); ++k) {
    const auto [x, y] = field.grid.node_coord(k);
    write_row(out, k, x, y, field.values[k]);
  }
}

void write_csv(std::ostream& out, const VelocityField& field) {
  out << "index,x,y,value\n";
  const int edges = field.grid.edge_count();
  for (int k = 0; k < edges; ++k) {
    const auto [x, y] = field.grid.comp1_coord(k);
    write_row(out, k, x, y, field.comp1[k]);
  }
  for (int k = 0; k < edges; ++k) {
    const auto [x, y] = field.grid.comp2_coord(k);
    write_row(out, edges + k, x, y, field.comp2[k]);
  }
}

}  // namespace slipstokes
