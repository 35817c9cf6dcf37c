#pragma once

#include "advfv/fv_solver.hpp"
#include "advfv/mesh.hpp"
#include "advfv/model.hpp"
#include "advfv/sh_dynamics.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace advfv {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    /// Uniform on [0, 1) from the top 53 bits.
    double uniform();

private:
    std::uint64_t state_;
};

/// Seed of the per-species stream: the i-th output of SplitMix64(seed).
std::uint64_t species_seed(std::uint64_t seed, std::size_t species);

enum class RunMode { Pde, ShNsfd, ShEuler };

struct StructuredMeshSpec {
    std::size_t nx = 16;
    std::size_t ny = 16;
    double Lx = 1.0;
    double Ly = 1.0;
};

struct MshMeshSpec {
    std::string path;
    double tol = kDefaultAdmissibilityTol;
};

using MeshSpec = std::variant<StructuredMeshSpec, MshMeshSpec>;

struct ConstantRecipe {
    double value = 0.0;
};
/// base + amplitude (1 - 2 r_K)
struct UniformPerturbedRecipe {
    double base = 0.0;
    double amplitude = 0.0;
};
/// base + sum_j amplitude exp(-|x_K - x_j|^2 / width). Empty centers mean
/// the two default points at +-25% of the bounding-box diagonal.
struct GaussianPeaksRecipe {
    double base = 0.0;
    double amplitude = 0.0;
    double width = 1.0;
    std::vector<Point> centers;
};
/// equilibrium value + amplitude (1 - 2 r_K)
struct EquilibriumPerturbedRecipe {
    double equilibrium = 0.0;
    double amplitude = 0.0;
};

using SpeciesRecipe =
    std::variant<ConstantRecipe, UniformPerturbedRecipe, GaussianPeaksRecipe, EquilibriumPerturbedRecipe>;

struct InitialRecipe {
    std::array<SpeciesRecipe, kSpecies> species;

    static InitialRecipe constant(const Vec5& state);
    /// Homogeneous state for the ODE modes; throws ConfigError on spatial recipes.
    Vec5 homogeneous_state() const;
};

struct TimeSpec {
    double T = 0.0;
    std::optional<double> dt;
    double cfl = 0.9;
    /// Ensemble of step sizes for the ODE modes.
    std::vector<double> dt_list;
};

enum class OutputFormat { Csv, Vtk };

struct OutputSpec {
    std::string dir = "advfv_out";
    std::vector<double> snapshot_times;
    std::size_t diagnostics_stride = 1;
    std::vector<OutputFormat> formats{OutputFormat::Csv};
};

struct SimConfig {
    std::string name;
    RunMode mode = RunMode::Pde;
    MeshSpec mesh = StructuredMeshSpec{};
    ModelParams params;
    InitialRecipe initial;
    TimeSpec time;
    OutputSpec output;
    std::uint64_t seed = 42;

    bool wants(OutputFormat f) const;
};

/// Strict JSON. A "preset" key starts from the named preset and merges the
/// remaining keys over it. Throws ConfigError naming the offending key.
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::filesystem::path& path);

std::vector<std::string> preset_names();
SimConfig preset(const std::string& name);

/// Mesh lookup order: as given, ADVFV_DATA_DIR, then the bundled data directory.
std::filesystem::path resolve_data_path(const std::string& path);
Mesh build_mesh(const MeshSpec& spec);

/// Deterministic in (recipe, mesh, seed); r_K drawn in cell order from the
/// species' own SplitMix64 stream.
StateField build_initial(const InitialRecipe& recipe, const Mesh& mesh, std::uint64_t seed);

void write_csv_diagnostics_header(std::ostream& out);
void write_csv_diagnostics_row(std::ostream& out, const StepDiagnostics& d);
void write_csv_diagnostics(const std::vector<StepDiagnostics>& series,
                           const std::filesystem::path& path);

void write_csv_trajectory(const Trajectory& traj, double dt, const std::filesystem::path& path);

void write_vtk_snapshot(const Mesh& mesh, const StateField& state, std::ostream& out);
void write_vtk_snapshot(const Mesh& mesh, const StateField& state,
                        const std::filesystem::path& path);
/// Zero-padded snapshot file name, e.g. snapshot_0003.vtk.
std::string snapshot_file_name(std::size_t index);

/// CELL_DATA scalar fields of a legacy VTK file written by write_vtk_snapshot.
std::map<std::string, std::vector<double>> read_vtk_cell_scalars(std::istream& in);

struct RunReport {
    /// PDE mode.
    std::optional<RunResult> pde;
    /// ODE modes, one per step size.
    std::vector<std::pair<double, Trajectory>> trajectories;
    std::vector<std::filesystem::path> files;
};

/// Executes a configuration and writes the requested outputs.
RunReport run_config(const SimConfig& config);

}  // namespace advfv
