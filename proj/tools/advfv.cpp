#include "advfv/cli_io.hpp"
#include "advfv/errors.hpp"
#include "advfv/log.hpp"
#include "advfv/sh_dynamics.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

advfv::SimConfig resolve(const std::string& path, const std::string& preset_name) {
    if (!path.empty()) return advfv::load_config(path);
    if (!preset_name.empty()) return advfv::preset(preset_name);
    throw advfv::ConfigError("either a config file or --preset is required");
}

void print_vec(std::ostream& out, const advfv::Vec5& v) {
    out << '(';
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
    out << ')';
}

int cmd_run(const std::string& path, const std::string& preset_name,
            std::optional<std::uint64_t> seed, const std::string& out_dir, std::optional<double> dt,
            std::optional<double> T) {
    advfv::SimConfig cfg = resolve(path, preset_name);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output.dir = out_dir;
    if (dt) {
        cfg.time.dt = *dt;
        cfg.time.dt_list.clear();
    }
    if (T) {
        cfg.time.T = *T;
        std::erase_if(cfg.output.snapshot_times, [&](double s) { return s > *T; });
    }
    const advfv::RunReport report = advfv::run_config(cfg);
    std::cout << std::setprecision(10);
    for (const auto& [step, traj] : report.trajectories) {
        std::cout << "dt=" << step << " steps=" << traj.times.size() - 1 << " final=";
        print_vec(std::cout, traj.states.back());
        std::cout << " rectangle="
                  << (traj.first_violation ? "left at step " + std::to_string(*traj.first_violation)
                                           : std::string("kept"))
                  << '\n';
    }
    if (report.pde) {
        const auto& r = *report.pde;
        const auto& last = r.diagnostics.back();
        std::cout << "steps=" << r.steps << " t=" << r.final_state.t
                  << " max_newton_iters=" << r.max_newton_iters
                  << " var_u1=" << last.spatial_variance_u1 << " rectangle="
                  << (r.first_rectangle_violation
                          ? "left at step " + std::to_string(*r.first_rectangle_violation)
                          : std::string("kept"))
                  << '\n';
    }
    for (const auto& f : report.files) std::cout << "wrote " << f.string() << '\n';
    return 0;
}

int cmd_validate(const std::string& path, double tol) {
    const advfv::Mesh mesh = advfv::load_msh(advfv::resolve_data_path(path), tol);
    const auto rep = advfv::validate_admissibility(mesh, tol);
    std::cout << "cells=" << mesh.n_cells() << " interior_edges=" << mesh.n_interior_edges()
              << " boundary_edges=" << mesh.boundary_edges().size() << " h=" << mesh.h()
              << " area=" << mesh.domain_area() << " worst_cos=" << rep.worst_cos
              << " worst_angle_deviation_rad=" << rep.worst_angle_deviation << '\n';
    std::cout << (rep.ok ? "admissible" : "NOT admissible") << '\n';
    return rep.ok ? 0 : kExitConfig;
}

int cmd_equilibria(const std::string& path, const std::string& preset_name) {
    const advfv::SimConfig cfg = resolve(path, preset_name);
    const auto& p = cfg.params;
    const advfv::RectangleBounds b = advfv::invariant_bounds(p);
    std::vector<advfv::Vec5> seeds{advfv::disease_free_equilibrium(p)};
    for (double f1 : {0.01, 0.1, 0.5, 1.0})
        for (double f3 : {0.01, 0.1, 0.5, 1.0})
            seeds.push_back({f1 * b.beta[0], f1 * b.beta[1], f3 * b.beta[2], b.beta[3], f3 * b.beta[4]});
    const auto roots = advfv::find_equilibria(p, seeds);
    std::cout << std::setprecision(12);
    for (const auto& e : roots) {
        std::cout << "equilibrium ";
        print_vec(std::cout, e);
        std::cout << " |F|=" << advfv::sup_norm(advfv::reaction_f(p, e, p.lambda_m));
        const double dt = cfg.time.dt ? *cfg.time.dt : 0.5;
        const auto mod = advfv::eigenvalue_moduli(advfv::discrete_jacobian(p, e, dt));
        std::cout << " spectral_radius(dt=" << dt << ")=" << mod.back() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-volume solver for an amyloid/microglia reaction-diffusion-chemotaxis model"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Suppress warnings");

    std::string config, preset_name, out_dir, mesh_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt, T;
    double tol = advfv::kDefaultAdmissibilityTol;

    auto* run = app.add_subcommand("run", "Run a configuration or preset");
    run->add_option("config", config, "JSON configuration file");
    run->add_option("--preset", preset_name, "Preset name")
        ->check(CLI::IsMember(advfv::preset_names()));
    run->add_option("--seed", seed, "Random seed");
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--dt", dt, "Override the time step");
    run->add_option("--T", T, "Override the final time");

    auto* validate = app.add_subcommand("validate-mesh", "Check an MSH mesh for admissibility");
    validate->add_option("path", mesh_path, "MSH 2.2 file")->required();
    validate->add_option("--tol", tol, "Orthogonality tolerance");

    auto* equilibria = app.add_subcommand("equilibria", "Find equilibria of the homogeneous model");
    equilibria->add_option("config", config, "JSON configuration file");
    equilibria->add_option("--preset", preset_name, "Preset name")
        ->check(CLI::IsMember(advfv::preset_names()));

    CLI11_PARSE(app, argc, argv);
    if (quiet) advfv::set_log_level(advfv::LogLevel::Quiet);

    try {
        if (run->parsed()) return cmd_run(config, preset_name, seed, out_dir, dt, T);
        if (validate->parsed()) return cmd_validate(mesh_path, tol);
        return cmd_equilibria(config, preset_name);
    } catch (const advfv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const advfv::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const advfv::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}
