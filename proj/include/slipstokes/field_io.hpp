#pragma once

#include "slipstokes/geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <variant>

namespace slipstokes {

/// Binary dump layout (little endian):
///   bytes 0-3   magic "SSL1"
///   bytes 4-7   n (uint32)
///   bytes 8-11  kind tag (uint32): 1 = node field, 2 = velocity field
///   bytes 12-15 number of float64 values that follow (uint32)
/// then the values; velocity dumps store comp1 followed by comp2.
enum class FieldKind : std::uint32_t { Node = 1, Velocity = 2 };

void write_binary(std::ostream& out, const NodeField& field);
void write_binary(std::ostream& out, const VelocityField& field);
std::variant<NodeField, VelocityField> read_binary(std::istream& in);

/// One dof per row: index,x,y,value. Velocity rows list comp1 then comp2
/// with a running index.
void write_csv(std::ostream& out, const NodeField& field);
void write_csv(std::ostream& out, const VelocityField& field);

}  // namespace slipstokes
