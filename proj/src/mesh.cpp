#include "advfv/mesh.hpp"

#include "advfv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>

namespace advfv {

namespace {

double cross(const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

double distance(const Point& a, const Point& b) { return std::hypot(b.x - a.x, b.y - a.y); }

double polygon_area_signed(const std::vector<Point>& nodes, const std::vector<std::size_t>& ids) {
    double twice = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const Point& p = nodes[ids[i]];
        const Point& q = nodes[ids[(i + 1) % ids.size()]];
        twice += p.x * q.y - q.x * p.y;
    }
    return 0.5 * twice;
}

std::uint64_t edge_key(std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

void build_cell_edge_adjacency(std::size_t n_cells, const std::vector<InteriorEdge>& edges,
                               std::vector<std::size_t>& offsets, std::vector<std::size_t>& ids) {
    offsets.assign(n_cells + 1, 0);
    for (const auto& e : edges) {
        ++offsets[e.cell_a + 1];
        ++offsets[e.cell_b + 1];
    }
    for (std::size_t k = 0; k < n_cells; ++k) offsets[k + 1] += offsets[k];
    ids.assign(offsets.back(), 0);
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        ids[fill[edges[i].cell_a]++] = i;
        ids[fill[edges[i].cell_b]++] = i;
    }
}

}  // namespace

std::span<const std::size_t> Mesh::cell_nodes(std::size_t cell) const {
    return {cell_node_ids_.data() + cell_node_offsets_.at(cell),
            cell_node_offsets_.at(cell + 1) - cell_node_offsets_[cell]};
}

std::span<const std::size_t> Mesh::cell_edges(std::size_t cell) const {
    return {cell_edge_ids_.data() + cell_edge_offsets_.at(cell),
            cell_edge_offsets_.at(cell + 1) - cell_edge_offsets_[cell]};
}

std::size_t Mesh::neighbor(std::size_t cell, std::size_t edge) const {
    const auto& e = edges_.at(edge);
    if (e.cell_a == cell) return e.cell_b;
    if (e.cell_b == cell) return e.cell_a;
    throw InvalidArgument("edge " + std::to_string(edge) + " is not incident to cell " +
                          std::to_string(cell));
}

double Mesh::domain_area() const noexcept {
    double sum = 0.0;
    for (double a : cell_area_) sum += a;
    return sum;
}

bool Mesh::all_triangles() const noexcept {
    for (std::size_t k = 0; k < n_cells(); ++k)
        if (cell_node_offsets_[k + 1] - cell_node_offsets_[k] != 3) return false;
    return true;
}

std::array<Point, 2> Mesh::bounding_box() const noexcept {
    Point lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Point hi{-lo.x, -lo.y};
    for (const auto& p : nodes_) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    return {lo, hi};
}

Mesh build_structured_rect(std::size_t nx, std::size_t ny, double Lx, double Ly) {
    if (nx == 0 || ny == 0) throw InvalidArgument("structured mesh needs nx, ny >= 1");
    if (!(Lx > 0.0) || !(Ly > 0.0) || !std::isfinite(Lx) || !std::isfinite(Ly))
        throw InvalidArgument("structured mesh needs Lx, Ly > 0");

    const double dx = Lx / static_cast<double>(nx);
    const double dy = Ly / static_cast<double>(ny);
    Mesh m;
    const auto node_id = [nx](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
    const auto cell_id = [nx](std::size_t i, std::size_t j) { return j * nx + i; };

    m.nodes_.reserve((nx + 1) * (ny + 1));
    for (std::size_t j = 0; j <= ny; ++j)
        for (std::size_t i = 0; i <= nx; ++i)
            m.nodes_.push_back({static_cast<double>(i) * dx, static_cast<double>(j) * dy});

    m.cell_node_offsets_.push_back(0);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            for (auto id : {node_id(i, j), node_id(i + 1, j), node_id(i + 1, j + 1), node_id(i, j + 1)})
                m.cell_node_ids_.push_back(id);
            m.cell_node_offsets_.push_back(m.cell_node_ids_.size());
            m.cell_area_.push_back(dx * dy);
            m.cell_center_.push_back(
                {(static_cast<double>(i) + 0.5) * dx, (static_cast<double>(j) + 0.5) * dy});
        }
    }

    // Vertical faces between horizontal neighbours, then horizontal faces.
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            InteriorEdge e;
            e.cell_a = cell_id(i, j);
            e.cell_b = cell_id(i + 1, j);
            e.nodes = {node_id(i + 1, j), node_id(i + 1, j + 1)};
            e.measure = dy;
            e.center_distance = dx;
            e.transmissibility = dy / dx;
            e.normal = {1.0, 0.0};
            e.diamond_area = 0.5 * dy * dx;
            m.edges_.push_back(e);
        }
    }
    for (std::size_t j = 0; j + 1 < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            InteriorEdge e;
            e.cell_a = cell_id(i, j);
            e.cell_b = cell_id(i, j + 1);
            e.nodes = {node_id(i, j + 1), node_id(i + 1, j + 1)};
            e.measure = dx;
            e.center_distance = dy;
            e.transmissibility = dx / dy;
            e.normal = {0.0, 1.0};
            e.diamond_area = 0.5 * dx * dy;
            m.edges_.push_back(e);
        }
    }
    for (std::size_t i = 0; i < nx; ++i) {
        m.boundary_edges_.push_back({cell_id(i, 0), {node_id(i, 0), node_id(i + 1, 0)}, dx});
        m.boundary_edges_.push_back({cell_id(i, ny - 1), {node_id(i + 1, ny), node_id(i, ny)}, dx});
    }
    for (std::size_t j = 0; j < ny; ++j) {
        m.boundary_edges_.push_back({cell_id(0, j), {node_id(0, j + 1), node_id(0, j)}, dy});
        m.boundary_edges_.push_back({cell_id(nx - 1, j), {node_id(nx, j), node_id(nx, j + 1)}, dy});
    }

    build_cell_edge_adjacency(m.n_cells(), m.edges_, m.cell_edge_offsets_, m.cell_edge_ids_);
    m.h_ = std::hypot(dx, dy);
    return m;
}

Mesh build_from_cells(std::vector<Point> nodes, std::vector<std::vector<std::size_t>> cells,
                      std::vector<Point> centers) {
    if (cells.empty()) throw InvalidArgument("mesh has no cells");
    if (centers.size() != cells.size())
        throw InvalidArgument("one center per cell is required");

    Mesh m;
    m.nodes_ = std::move(nodes);
    m.cell_center_ = std::move(centers);
    m.cell_node_offsets_.push_back(0);

    for (auto& ids : cells) {
        if (ids.size() < 3) throw InvalidArgument("cell with fewer than 3 nodes");
        for (auto id : ids)
            if (id >= m.nodes_.size()) throw InvalidArgument("cell references unknown node");
        double area = polygon_area_signed(m.nodes_, ids);
        if (area < 0.0) {
            std::reverse(ids.begin(), ids.end());
            area = -area;
        }
        if (!(area > 0.0)) throw DegenerateMeshError("cell with zero area");
        m.cell_area_.push_back(area);
        m.cell_node_ids_.insert(m.cell_node_ids_.end(), ids.begin(), ids.end());
        m.cell_node_offsets_.push_back(m.cell_node_ids_.size());

        double diam = 0.0;
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = i + 1; j < ids.size(); ++j)
                diam = std::max(diam, distance(m.nodes_[ids[i]], m.nodes_[ids[j]]));
        m.h_ = std::max(m.h_, diam);
    }

    struct Half {
        std::size_t cell;
        std::size_t p;
        std::size_t q;
    };
    std::unordered_map<std::uint64_t, std::vector<Half>> faces;
    std::vector<std::uint64_t> order;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto& ids = cells[k];
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const std::size_t p = ids[i];
            const std::size_t q = ids[(i + 1) % ids.size()];
            const auto key = edge_key(p, q);
            auto& list = faces[key];
            if (list.empty()) order.push_back(key);
            list.push_back({k, p, q});
        }
    }

    for (auto key : order) {
        const auto& list = faces[key];
        if (list.size() > 2) throw FormatError("edge shared by more than two cells");
        const Half& first = list.front();
        const Point& p = m.nodes_[first.p];
        const Point& q = m.nodes_[first.q];
        const double measure = distance(p, q);
        if (list.size() == 1) {
            m.boundary_edges_.push_back({first.cell, {first.p, first.q}, measure});
            continue;
        }
        const Half& second = list.back();
        InteriorEdge e;
        e.cell_a = std::min(first.cell, second.cell);
        e.cell_b = std::max(first.cell, second.cell);
        // Outward normal of a counter-clockwise cell along p->q is (dy, -dx).
        const Half& from_a = (first.cell == e.cell_a) ? first : second;
        const Point& pa = m.nodes_[from_a.p];
        const Point& qa = m.nodes_[from_a.q];
        e.nodes = {from_a.p, from_a.q};
        e.normal = {(qa.y - pa.y) / measure, -(qa.x - pa.x) / measure};
        e.measure = measure;
        const Point& xa = m.cell_center_[e.cell_a];
        const Point& xb = m.cell_center_[e.cell_b];
        e.center_distance = distance(xa, xb);
        if (!(e.center_distance > 1e-12 * m.h_)) {
            std::ostringstream msg;
            msg << "cells " << e.cell_a << " and " << e.cell_b
                << " have (nearly) coincident centers, d = " << e.center_distance;
            throw DegenerateMeshError(msg.str());
        }
        e.transmissibility = e.measure / e.center_distance;
        const double normal_gap = (xb.x - xa.x) * e.normal.x + (xb.y - xa.y) * e.normal.y;
        e.diamond_area = 0.5 * e.measure * std::abs(normal_gap);
        m.edges_.push_back(e);
    }

    build_cell_edge_adjacency(m.n_cells(), m.edges_, m.cell_edge_offsets_, m.cell_edge_ids_);
    return m;
}

Point circumcenter(const Point& a, const Point& b, const Point& c) {
    const double bx = b.x - a.x, by = b.y - a.y;
    const double cx = c.x - a.x, cy = c.y - a.y;
    const double det = 2.0 * (bx * cy - by * cx);
    if (det == 0.0) throw DegenerateMeshError("collinear triangle has no circumcenter");
    const double b2 = bx * bx + by * by;
    const double c2 = cx * cx + cy * cy;
    return {a.x + (cy * b2 - by * c2) / det, a.y + (bx * c2 - cx * b2) / det};
}

Mesh build_from_triangles(std::vector<Point> nodes,
                          const std::vector<std::array<std::size_t, 3>>& triangles,
                          CenterRule rule) {
    std::vector<std::vector<std::size_t>> cells;
    std::vector<Point> centers;
    cells.reserve(triangles.size());
    centers.reserve(triangles.size());
    for (const auto& t : triangles) {
        for (auto id : t)
            if (id >= nodes.size()) throw InvalidArgument("triangle references unknown node");
        const Point& a = nodes[t[0]];
        const Point& b = nodes[t[1]];
        const Point& c = nodes[t[2]];
        if (cross(a, b, c) == 0.0) throw DegenerateMeshError("collinear triangle");
        if (rule == CenterRule::Circumcenter)
            centers.push_back(circumcenter(a, b, c));
        else
            centers.push_back({(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0});
        cells.push_back({t[0], t[1], t[2]});
    }
    return build_from_cells(std::move(nodes), std::move(cells), std::move(centers));
}

AdmissibilityReport validate_admissibility(const Mesh& mesh, double tol) {
    AdmissibilityReport report;
    const auto centers = mesh.cell_center();
    const auto edges = mesh.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        const double gx = centers[e.cell_b].x - centers[e.cell_a].x;
        const double gy = centers[e.cell_b].y - centers[e.cell_a].y;
        const double g = std::hypot(gx, gy);
        // Tangent is the normal rotated by 90 degrees.
        const double tx = -e.normal.y;
        const double ty = e.normal.x;
        const double cos_theta = std::abs(gx * tx + gy * ty) / g;
        report.worst_cos = std::max(report.worst_cos, cos_theta);
        if (cos_theta > tol) report.offending_edges.push_back(i);
        if (gx * e.normal.x + gy * e.normal.y <= 0.0) report.misoriented_edges.push_back(i);
    }
    report.worst_angle_deviation = std::asin(std::min(1.0, report.worst_cos));
    report.ok = report.worst_cos <= tol;
    return report;
}

namespace {

void expect_token(std::istream& in, const std::string& want) {
    std::string tok;
    if (!(in >> tok) || tok != want)
        throw FormatError("MSH: expected '" + want + "', found '" + tok + "'");
}

void skip_section(std::istream& in, const std::string& name) {
    const std::string end = "$End" + name.substr(1);
    std::string tok;
    while (in >> tok)
        if (tok == end) return;
    throw FormatError("MSH: unterminated section " + name);
}

}  // namespace

Mesh read_msh(std::istream& in, double tol) {
    std::string tok;
    bool have_format = false;
    std::vector<Point> nodes;
    std::unordered_map<long long, std::size_t> node_index;
    std::vector<std::array<std::size_t, 3>> triangles;
    bool have_elements = false;

    while (in >> tok) {
        if (tok == "$MeshFormat") {
            std::string version;
            int file_type = -1;
            int data_size = 0;
            if (!(in >> version >> file_type >> data_size))
                throw FormatError("MSH: truncated $MeshFormat");
            if (version != "2.2") throw FormatError("MSH: unsupported version " + version);
            if (file_type != 0) throw FormatError("MSH: only ASCII files are supported");
            expect_token(in, "$EndMeshFormat");
            have_format = true;
        } else if (tok == "$Nodes") {
            if (!have_format) throw FormatError("MSH: $Nodes before $MeshFormat");
            std::size_t count = 0;
            if (!(in >> count)) throw FormatError("MSH: bad node count");
            nodes.reserve(count);
            for (std::size_t i = 0; i < count; ++i) {
                long long id = 0;
                double x = 0, y = 0, z = 0;
                if (!(in >> id >> x >> y >> z)) throw FormatError("MSH: truncated $Nodes");
                if (!node_index.emplace(id, nodes.size()).second)
                    throw FormatError("MSH: duplicate node id " + std::to_string(id));
                nodes.push_back({x, y});
            }
            expect_token(in, "$EndNodes");
        } else if (tok == "$Elements") {
            have_elements = true;
            std::size_t count = 0;
            if (!(in >> count)) throw FormatError("MSH: bad element count");
            for (std::size_t i = 0; i < count; ++i) {
                long long id = 0;
                int type = 0, ntags = 0;
                if (!(in >> id >> type >> ntags) || ntags < 0)
                    throw FormatError("MSH: truncated $Elements");
                for (int t = 0; t < ntags; ++t) {
                    long long tag;
                    if (!(in >> tag)) throw FormatError("MSH: truncated element tags");
                }
                int n_nodes = 0;
                switch (type) {
                    case 15: n_nodes = 1; break;  // point
                    case 1:  n_nodes = 2; break;  // line
                    case 8:  n_nodes = 3; break;  // 3-node line
                    case 2:  n_nodes = 3; break;  // triangle
                    default:
                        throw FormatError("MSH: unsupported element type " + std::to_string(type) +
                                          " (only 3-node triangles are accepted as cells)");
                }
                std::array<std::size_t, 3> tri{};
                for (int k = 0; k < n_nodes; ++k) {
                    long long nid;
                    if (!(in >> nid)) throw FormatError("MSH: truncated element nodes");
                    if (type == 2) {
                        auto it = node_index.find(nid);
                        if (it == node_index.end())
                            throw FormatError("MSH: element references unknown node " +
                                              std::to_string(nid));
                        tri[static_cast<std::size_t>(k)] = it->second;
                    }
                }
                if (type == 2) triangles.push_back(tri);
            }
            expect_token(in, "$EndElements");
        } else if (!tok.empty() && tok.front() == '$') {
            skip_section(in, tok);
        } else {
            throw FormatError("MSH: unexpected token '" + tok + "'");
        }
    }
    if (!have_format) throw FormatError("MSH: missing $MeshFormat");
    if (!have_elements || triangles.empty()) throw FormatError("MSH: no triangle elements");

    Mesh mesh = build_from_triangles(std::move(nodes), triangles, CenterRule::Circumcenter);
    const auto report = validate_admissibility(mesh, tol);
    if (!report.ok || !report.misoriented_edges.empty()) {
        std::vector<std::size_t> bad = report.offending_edges;
        bad.insert(bad.end(), report.misoriented_edges.begin(), report.misoriented_edges.end());
        std::sort(bad.begin(), bad.end());
        bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
        std::ostringstream msg;
        msg << "mesh is not admissible: " << bad.size() << " offending edge(s), worst |cos| = "
            << report.worst_cos << "; edges:";
        for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 20); ++i) msg << ' ' << bad[i];
        if (bad.size() > 20) msg << " ...";
        throw AdmissibilityError(msg.str(), std::move(bad));
    }
    return mesh;
}

Mesh load_msh(const std::filesystem::path& path, double tol) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file " + path.string());
    return read_msh(in, tol);
}

void write_msh(const Mesh& mesh, std::ostream& out) {
    if (!mesh.all_triangles()) throw InvalidArgument("MSH writer supports triangle meshes only");
    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
    out << "$Nodes\n" << mesh.n_nodes() << '\n';
    out << std::setprecision(17);
    const auto nodes = mesh.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i)
        out << i + 1 << ' ' << nodes[i].x << ' ' << nodes[i].y << " 0\n";
    out << "$EndNodes\n$Elements\n" << mesh.n_cells() << '\n';
    for (std::size_t k = 0; k < mesh.n_cells(); ++k) {
        const auto ids = mesh.cell_nodes(k);
        out << k + 1 << " 2 2 0 1 " << ids[0] + 1 << ' ' << ids[1] + 1 << ' ' << ids[2] + 1 << '\n';
    }
    out << "$EndElements\n";
}

void write_msh(const Mesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write mesh file " + path.string());
    write_msh(mesh, out);
    if (!out) throw IoError("error while writing " + path.string());
}

}  // namespace advfv
