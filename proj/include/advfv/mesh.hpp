#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace advfv {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Edge shared by two control volumes. The normal points from cell_a to cell_b.
struct InteriorEdge {
    std::size_t cell_a = 0;
    std::size_t cell_b = 0;
    std::array<std::size_t, 2> nodes{};
    double measure = 0.0;          // m(sigma)
    double center_distance = 0.0;  // d_{K|L} = |x_b - x_a|
    double transmissibility = 0.0; // m(sigma) / d_{K|L}
    Point normal;
    double diamond_area = 0.0;
};

/// Edge on the domain boundary. Zero-flux, so only the geometry is kept.
struct BoundaryEdge {
    std::size_t cell = 0;
    std::array<std::size_t, 2> nodes{};
    double measure = 0.0;
};

enum class CenterRule { Circumcenter, Centroid };

/// Immutable two-point-flux mesh: polygonal cells, their centers, and the
/// interior edges with transmissibilities.
class Mesh {
public:
    std::size_t n_cells() const noexcept { return cell_area_.size(); }
    std::size_t n_interior_edges() const noexcept { return edges_.size(); }
    std::size_t n_nodes() const noexcept { return nodes_.size(); }

    std::span<const double> cell_area() const noexcept { return cell_area_; }
    std::span<const Point> cell_center() const noexcept { return cell_center_; }
    std::span<const InteriorEdge> edges() const noexcept { return edges_; }
    std::span<const BoundaryEdge> boundary_edges() const noexcept { return boundary_edges_; }
    std::span<const Point> nodes() const noexcept { return nodes_; }

    /// Node indices of a cell, counter-clockwise.
    std::span<const std::size_t> cell_nodes(std::size_t cell) const;
    /// Interior edge indices incident to a cell.
    std::span<const std::size_t> cell_edges(std::size_t cell) const;
    /// Neighbour across interior edge `edge` as seen from `cell`.
    std::size_t neighbor(std::size_t cell, std::size_t edge) const;

    /// Maximum cell diameter.
    double h() const noexcept { return h_; }
    double domain_area() const noexcept;
    bool all_triangles() const noexcept;

    /// Axis-aligned bounding box of the nodes as {min, max}.
    std::array<Point, 2> bounding_box() const noexcept;

    friend Mesh build_structured_rect(std::size_t, std::size_t, double, double);
    friend Mesh build_from_cells(std::vector<Point>, std::vector<std::vector<std::size_t>>,
                                 std::vector<Point>);

private:
    std::vector<Point> nodes_;
    std::vector<std::size_t> cell_node_offsets_;
    std::vector<std::size_t> cell_node_ids_;
    std::vector<double> cell_area_;
    std::vector<Point> cell_center_;
    std::vector<InteriorEdge> edges_;
    std::vector<BoundaryEdge> boundary_edges_;
    std::vector<std::size_t> cell_edge_offsets_;
    std::vector<std::size_t> cell_edge_ids_;
    double h_ = 0.0;
};

/// nx * ny rectangles on [0, Lx] x [0, Ly]; centers are the centroids.
Mesh build_structured_rect(std::size_t nx, std::size_t ny, double Lx, double Ly);

/// Generic polygon mesh with caller-provided centers. Cells must be convex
/// and listed counter-clockwise (clockwise input is reoriented).
/// Throws DegenerateMeshError when two neighbouring centers nearly coincide.
Mesh build_from_cells(std::vector<Point> nodes, std::vector<std::vector<std::size_t>> cells,
                      std::vector<Point> centers);

Mesh build_from_triangles(std::vector<Point> nodes,
                          const std::vector<std::array<std::size_t, 3>>& triangles,
                          CenterRule rule = CenterRule::Circumcenter);

Point circumcenter(const Point& a, const Point& b, const Point& c);

struct AdmissibilityReport {
    bool ok = true;
    /// max |cos| of the angle between x_L - x_K and the edge tangent.
    double worst_cos = 0.0;
    /// Same quantity as an angle deviation from 90 degrees, in radians.
    double worst_angle_deviation = 0.0;
    std::vector<std::size_t> offending_edges;
    /// Edges where x_L - x_K points against the a->b normal (the two
    /// centers sit on the wrong sides of the edge; non-Delaunay pair).
    std::vector<std::size_t> misoriented_edges;
};

inline constexpr double kDefaultAdmissibilityTol = 1e-8;

AdmissibilityReport validate_admissibility(const Mesh& mesh, double tol = kDefaultAdmissibilityTol);

/// ASCII MSH 2.2. Triangles (element type 2) become cells; point and line
/// elements are skipped; any other element type is a FormatError. Centers
/// are circumcenters, and the result must pass validate_admissibility(tol).
Mesh read_msh(std::istream& in, double tol = kDefaultAdmissibilityTol);
Mesh load_msh(const std::filesystem::path& path, double tol = kDefaultAdmissibilityTol);

void write_msh(const Mesh& mesh, std::ostream& out);
void write_msh(const Mesh& mesh, const std::filesystem::path& path);

}  // namespace advfv
