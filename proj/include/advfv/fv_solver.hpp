#pragma once

#include "advfv/flux.hpp"
#include "advfv/mesh.hpp"
#include "advfv/model.hpp"
#include "advfv/sparse_linalg.hpp"

#include <array>
#include <optional>
#include <vector>

namespace advfv {

/// Cell-wise concentrations of the five species at time t.
struct StateField {
    std::array<std::vector<double>, kSpecies> u;
    double t = 0.0;

    std::size_t n_cells() const { return u[0].size(); }
    Vec5 at(std::size_t cell) const;
    void set(std::size_t cell, const Vec5& v);

    static StateField uniform(std::size_t n_cells, const Vec5& value, double t = 0.0);
};

struct SpeciesStats {
    double min = 0.0;
    double mean = 0.0;  // area-weighted
    double max = 0.0;
};

struct StepDiagnostics {
    std::size_t step = 0;
    double t = 0.0;
    int newton_iters = 0;
    double newton_residual = 0.0;
    std::array<SpeciesStats, kSpecies> stats{};
    bool rectangle_ok = true;
    /// sum over species 1, 3, 4, 5 and interior edges of tau (u_L - u_K)^2.
    double gradient_energy = 0.0;
    /// Area-weighted variance of u1.
    double spatial_variance_u1 = 0.0;
};

inline constexpr double kRectangleSlack = 1e-10;

/// cfl * min{1/gamma_max, 1/(r1 beta3 + tau_S), alpha2/(alpha2 + m_hat alpha1), tau2/tau1}.
double compute_dt(const ModelParams& p, const RectangleBounds& bounds, double cfl);

struct NewtonOptions {
    double tol = 1e-10;
    int max_iterations = 50;
    /// Halve the step until the mass-weighted l2 residual drops by the
    /// Armijo factor. Plain Newton steps cycle on rough data.
    bool line_search = true;
    double armijo = 1e-4;
    int max_halvings = 30;
};

struct NewtonResult {
    std::vector<double> u4;
    int iterations = 0;
    double residual = 0.0;
};

/// Semi-implicit finite-volume stepper. Species 1, 3 and 5 are linear SPD
/// solves, species 2 is pointwise, and species 4 (which is convected along
/// the gradient of u1 at the new time level) is solved by Newton.
class FvScheme {
public:
    FvScheme(const Mesh& mesh, ModelParams params);

    const Mesh& mesh() const { return mesh_; }
    const ModelParams& params() const { return p_; }
    const SparseMatrix& stiffness() const { return stiffness_; }
    const FluxKind& flux() const { return flux_; }
    /// Absent when m_hat < sup(lambda_M) / sigma.
    const std::optional<RectangleBounds>& bounds() const { return bounds_; }

    std::vector<double> step_u1(const StateField& s, double dt) const;
    std::vector<double> step_u2(const StateField& s, double dt) const;
    std::vector<double> step_u3(const StateField& s, double dt) const;
    std::vector<double> step_u5(const StateField& s, double dt) const;

    /// Mass-weighted residual of the microglia equation at candidate M.
    std::vector<double> u4_residual(const StateField& s, const std::vector<double>& u1_new,
                                    const std::vector<double>& M, double dt) const;
    SparseMatrix u4_jacobian(const StateField& s, const std::vector<double>& u1_new,
                             const std::vector<double>& M, double dt) const;
    /// sup_K |R_K| / m(K).
    double residual_norm(const std::vector<double>& r) const;

    /// Throws NewtonFailure when max_iterations is exhausted.
    NewtonResult newton_u4(const StateField& s, const std::vector<double>& u1_new, double dt,
                           const NewtonOptions& opts = {}) const;

    /// One full step. The input is never modified, so a throwing sub-step
    /// leaves the caller's state intact.
    std::pair<StateField, StepDiagnostics> advance(const StateField& s, double dt,
                                                   const NewtonOptions& opts = {}) const;

    StepDiagnostics diagnose(const StateField& s) const;
    bool in_rectangle(const StateField& s, double slack = kRectangleSlack) const;
    double gradient_energy(const std::vector<double>& u) const;

private:
    const Mesh& mesh_;
    ModelParams p_;
    SparseMatrix stiffness_;
    FluxKind flux_;
    std::optional<RectangleBounds> bounds_;
    std::vector<double> mass_;

    std::vector<double> implicit_solve(double diffusion, const std::vector<double>& rate,
                                       const std::vector<double>& rhs, double dt) const;
};

/// Receives run output as it is produced.
class RunSink {
public:
    virtual ~RunSink() = default;
    virtual void on_diagnostics(const StepDiagnostics&) {}
    virtual void on_snapshot(std::size_t /*index*/, const StateField&) {}
    virtual void flush() {}
};

struct RunOptions {
    double T = 0.0;
    double dt = 0.0;
    /// A snapshot is taken at the first step whose time reaches each entry.
    std::vector<double> snapshot_times;
    std::size_t diagnostics_stride = 1;
    NewtonOptions newton;
};

struct RunResult {
    StateField final_state;
    std::vector<StepDiagnostics> diagnostics;
    std::size_t steps = 0;
    bool initial_admissible = false;
    std::optional<std::size_t> first_rectangle_violation;
    int max_newton_iters = 0;
};

/// Fixed-step time loop over ceil(T / dt) steps.
RunResult run(const Mesh& mesh, const ModelParams& p, const StateField& initial,
              const RunOptions& opts, RunSink* sink = nullptr);

}  // namespace advfv
