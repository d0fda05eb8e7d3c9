#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "weldplan/geometry.hpp"

namespace weldplan {

// ASCII PLY 1.0. Vertex x/y/z are required; nx/ny/nz are picked up when all
// three are present; other scalar properties are skipped. Face elements with a
// vertex_indices (or vertex_index) list are triangulated as fans.
PointCloud read_ply_cloud(std::istream& in);
PointCloud read_ply_cloud(const std::filesystem::path& path);
TriangleMesh read_ply_mesh(std::istream& in);
TriangleMesh read_ply_mesh(const std::filesystem::path& path);

void write_ply_cloud(std::ostream& out, const PointCloud& cloud);
void write_ply_cloud(const std::filesystem::path& path, const PointCloud& cloud);
void write_ply_mesh(std::ostream& out, const TriangleMesh& mesh);
void write_ply_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);

// ASCII STL; coincident vertices are welded exactly.
TriangleMesh read_stl_mesh(std::istream& in);
TriangleMesh read_stl_mesh(const std::filesystem::path& path);

// Dispatch on extension (.ply / .stl).
TriangleMesh read_mesh(const std::filesystem::path& path);

// Shortest round-trip decimal representation used by every text writer.
std::string format_double(double v);

} // namespace weldplan
