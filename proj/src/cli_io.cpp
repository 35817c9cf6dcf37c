#include "advfv/cli_io.hpp"

#include "advfv/errors.hpp"
#include "advfv/log.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifndef ADVFV_BUNDLED_DATA_DIR
#define ADVFV_BUNDLED_DATA_DIR "data"
#endif

namespace advfv {

using nlohmann::json;

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t species_seed(std::uint64_t seed, std::size_t species) {
    SplitMix64 master(seed);
    std::uint64_t s = master.next();
    for (std::size_t i = 0; i < species; ++i) s = master.next();
    return s;
}

InitialRecipe InitialRecipe::constant(const Vec5& state) {
    InitialRecipe r;
    for (std::size_t i = 0; i < kSpecies; ++i) r.species[i] = ConstantRecipe{state[i]};
    return r;
}

Vec5 InitialRecipe::homogeneous_state() const {
    Vec5 v;
    for (std::size_t i = 0; i < kSpecies; ++i) {
        const auto* c = std::get_if<ConstantRecipe>(&species[i]);
        if (!c) throw ConfigError("ODE modes need a constant initial state", "initial");
        v[i] = c->value;
    }
    return v;
}

bool SimConfig::wants(OutputFormat f) const {
    return std::find(output.formats.begin(), output.formats.end(), f) != output.formats.end();
}

// ---------------------------------------------------------------------------
// Presets

namespace {

// Printed 4-digit positive equilibrium used to seed the pattern experiments.
constexpr std::array<double, 5> kRoundedEquilibrium{1.0686, 1.7739, 0.7310, 1.0, 0.5166};

json preset_json(const std::string& name) {
    if (name == "example1") {
        return {
            {"mode", "sh-nsfd"},
            {"params", {{"d", 0.15}}},
            {"initial", {{"state", {0.0004, 0.0, 0.003, 1.0, 0.4}}}},
            {"time", {{"T", 200.0}, {"dt_list", {0.5, 1.3, 2.0}}}},
        };
    }
    if (name == "example2") {
        return {
            {"mode", "pde"},
            {"mesh", {{"type", "msh"}, {"path", "ellipse_1000.msh"}}},
            {"params", {{"d", 0.15}, {"chi", {{"kind", "logistic"}, {"alpha", 24.0}}}}},
            {"initial",
             {{"species",
               {
                   {{"kind", "uniform-perturbed"}, {"base", 0.1}, {"amplitude", 0.01}},
                   {{"kind", "constant"}, {"value", 0.0}},
                   {{"kind", "constant"}, {"value", 0.1}},
                   {{"kind", "gaussian-peaks"}, {"base", 0.5}, {"amplitude", 0.05}, {"width", 40.0}},
                   {{"kind", "constant"}, {"value", 0.2}},
               }}}},
            {"time", {{"T", 50.0}, {"cfl", 0.9}}},
            {"output", {{"snapshot_times", {0.0, 1.0, 5.0, 10.0, 50.0}}, {"formats", {"csv", "vtk"}}}},
        };
    }
    if (name == "example3-stripes" || name == "example3-dots") {
        const double alpha = name == "example3-dots" ? 40.0 : 24.0;
        return {
            {"mode", "pde"},
            {"mesh", {{"type", "msh"}, {"path", "disk_2000.msh"}}},
            {"params", {{"d", 0.15}, {"chi", {{"kind", "linear"}, {"alpha", alpha}}}}},
            {"initial", {{"equilibrium", kRoundedEquilibrium}, {"amplitude", 0.001}}},
            {"time", {{"T", 2000.0}, {"cfl", 0.9}}},
            {"output",
             {{"snapshot_times", {0.0, 100.0, 500.0, 1000.0, 2000.0}},
              {"diagnostics_stride", 10},
              {"formats", {"csv", "vtk"}}}},
        };
    }
    throw ConfigError("unknown preset '" + name + "'", "preset");
}

// ---------------------------------------------------------------------------
// Strict JSON readers

class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + " must be an object", path_);
    }

    void allow(std::initializer_list<const char*> keys) const {
        for (const auto& [k, v] : j_.items()) {
            (void)v;
            if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
                throw ConfigError("unknown key '" + key(k) + "'", key(k));
        }
    }

    bool has(const char* k) const { return j_.contains(k); }
    const json& at(const char* k) const {
        if (!j_.contains(k)) throw ConfigError("missing required key '" + key(k) + "'", key(k));
        return j_.at(k);
    }

    double number(const char* k) const {
        const json& v = at(k);
        if (!v.is_number()) throw ConfigError("'" + key(k) + "' must be a number", key(k));
        return v.get<double>();
    }
    double number(const char* k, double def) const { return has(k) ? number(k) : def; }

    std::uint64_t unsigned_int(const char* k) const {
        const json& v = at(k);
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            throw ConfigError("'" + key(k) + "' must be a non-negative integer", key(k));
        return v.get<std::uint64_t>();
    }

    std::string string(const char* k) const {
        const json& v = at(k);
        if (!v.is_string()) throw ConfigError("'" + key(k) + "' must be a string", key(k));
        return v.get<std::string>();
    }

    std::vector<double> numbers(const char* k) const {
        const json& v = at(k);
        if (!v.is_array()) throw ConfigError("'" + key(k) + "' must be an array", key(k));
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError("'" + key(k) + "' must hold numbers", key(k));
            out.push_back(x.get<double>());
        }
        return out;
    }

    ObjectReader child(const char* k) const { return {at(k), key(k)}; }
    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
};

Vec5 five(const std::vector<double>& v, const std::string& key) {
    if (v.size() != kSpecies) throw ConfigError("'" + key + "' must have 5 entries", key);
    return {v[0], v[1], v[2], v[3], v[4]};
}

RunMode parse_mode(const std::string& s) {
    if (s == "pde") return RunMode::Pde;
    if (s == "sh-nsfd") return RunMode::ShNsfd;
    if (s == "sh-euler") return RunMode::ShEuler;
    throw ConfigError("mode must be one of pde, sh-nsfd, sh-euler", "mode");
}

MeshSpec parse_mesh(const ObjectReader& r) {
    const std::string type = r.string("type");
    if (type == "structured") {
        r.allow({"type", "nx", "ny", "Lx", "Ly"});
        StructuredMeshSpec s;
        s.nx = static_cast<std::size_t>(r.unsigned_int("nx"));
        s.ny = static_cast<std::size_t>(r.unsigned_int("ny"));
        s.Lx = r.number("Lx", 1.0);
        s.Ly = r.number("Ly", 1.0);
        if (s.nx == 0 || s.ny == 0 || !(s.Lx > 0.0) || !(s.Ly > 0.0))
            throw ConfigError("structured mesh needs nx, ny >= 1 and positive lengths", r.key("nx"));
        return s;
    }
    if (type == "msh") {
        r.allow({"type", "path", "tol"});
        return MshMeshSpec{r.string("path"), r.number("tol", kDefaultAdmissibilityTol)};
    }
    throw ConfigError("mesh type must be 'structured' or 'msh'", r.key("type"));
}

void parse_params(const ObjectReader& r, ModelParams& p) {
    r.allow({"r1", "r2", "d", "tau0", "tau1", "tau2", "tau3", "tau_p", "tau_s", "C", "nu",
             "alpha1", "alpha2", "sigma", "m_hat", "lambda_m", "d1", "d3", "d4", "d5", "gamma",
             "chi"});
    if (!r.has("d")) throw ConfigError("params.d must be given explicitly", r.key("d"));
    const std::pair<const char*, double*> fields[] = {
        {"r1", &p.r1},         {"r2", &p.r2},         {"d", &p.d},          {"tau0", &p.tau0},
        {"tau1", &p.tau1},     {"tau2", &p.tau2},     {"tau3", &p.tau3},    {"tau_p", &p.tau_p},
        {"tau_s", &p.tau_s},   {"C", &p.C},           {"nu", &p.nu},        {"alpha1", &p.alpha1},
        {"alpha2", &p.alpha2}, {"sigma", &p.sigma},   {"m_hat", &p.m_hat},  {"lambda_m", &p.lambda_m},
        {"d1", &p.d1},         {"d3", &p.d3},         {"d4", &p.d4},        {"d5", &p.d5},
    };
    for (const auto& [k, dst] : fields)
        if (r.has(k)) *dst = r.number(k);

    if (r.has("gamma")) {
        const ObjectReader g = r.child("gamma");
        const std::string kind = g.string("kind");
        if (kind == "constant") {
            g.allow({"kind", "gamma0"});
            p.gamma = GammaConstant{g.number("gamma0", GammaConstant{}.gamma0)};
        } else if (kind == "michaelis-menten") {
            g.allow({"kind", "gamma0", "gamma1", "gamma2"});
            const GammaMichaelisMenten def;
            p.gamma = GammaMichaelisMenten{g.number("gamma0", def.gamma0), g.number("gamma1", def.gamma1),
                                           g.number("gamma2", def.gamma2)};
        } else {
            throw ConfigError("gamma kind must be 'constant' or 'michaelis-menten'", g.key("kind"));
        }
    }
    if (r.has("chi")) {
        const ObjectReader c = r.child("chi");
        c.allow({"kind", "alpha"});
        const std::string kind = c.string("kind");
        if (kind == "logistic")
            p.chi_kind = ChiKind::Logistic;
        else if (kind == "linear")
            p.chi_kind = ChiKind::Linear;
        else
            throw ConfigError("chi kind must be 'logistic' or 'linear'", c.key("kind"));
        p.chi_alpha = c.number("alpha", p.chi_alpha);
    }
    try {
        p.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what(), r.path());
    }
}

SpeciesRecipe parse_recipe(const ObjectReader& r) {
    const std::string kind = r.string("kind");
    if (kind == "constant") {
        r.allow({"kind", "value"});
        return ConstantRecipe{r.number("value")};
    }
    if (kind == "uniform-perturbed") {
        r.allow({"kind", "base", "amplitude"});
        return UniformPerturbedRecipe{r.number("base"), r.number("amplitude")};
    }
    if (kind == "gaussian-peaks") {
        r.allow({"kind", "base", "amplitude", "width", "centers"});
        GaussianPeaksRecipe g{r.number("base"), r.number("amplitude"), r.number("width"), {}};
        if (!(g.width > 0.0)) throw ConfigError("gaussian width must be positive", r.key("width"));
        if (r.has("centers")) {
            const json& cs = r.at("centers");
            if (!cs.is_array()) throw ConfigError("centers must be an array", r.key("centers"));
            for (const auto& c : cs) {
                if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
                    throw ConfigError("each center must be [x, y]", r.key("centers"));
                g.centers.push_back({c[0].get<double>(), c[1].get<double>()});
            }
        }
        return g;
    }
    if (kind == "equilibrium-perturbed") {
        r.allow({"kind", "equilibrium", "amplitude"});
        return EquilibriumPerturbedRecipe{r.number("equilibrium"), r.number("amplitude")};
    }
    throw ConfigError("unknown initial recipe kind '" + kind + "'", r.key("kind"));
}

InitialRecipe parse_initial(const ObjectReader& r) {
    InitialRecipe out;
    if (r.has("state")) {
        r.allow({"state"});
        return InitialRecipe::constant(five(r.numbers("state"), r.key("state")));
    }
    if (r.has("equilibrium")) {
        r.allow({"equilibrium", "amplitude"});
        const Vec5 e = five(r.numbers("equilibrium"), r.key("equilibrium"));
        const double a = r.number("amplitude");
        for (std::size_t i = 0; i < kSpecies; ++i) out.species[i] = EquilibriumPerturbedRecipe{e[i], a};
        return out;
    }
    r.allow({"species"});
    const json& list = r.at("species");
    if (!list.is_array() || list.size() != kSpecies)
        throw ConfigError("initial.species must list 5 recipes", r.key("species"));
    for (std::size_t i = 0; i < kSpecies; ++i)
        out.species[i] = parse_recipe(ObjectReader(list[i], r.key("species") + "[" + std::to_string(i) + "]"));
    return out;
}

TimeSpec parse_time(const ObjectReader& r) {
    r.allow({"T", "dt", "cfl", "dt_list"});
    TimeSpec t;
    t.T = r.number("T");
    if (!(t.T >= 0.0) || !std::isfinite(t.T)) throw ConfigError("time.T must be >= 0", r.key("T"));
    if (r.has("dt")) {
        t.dt = r.number("dt");
        if (!(*t.dt > 0.0)) throw ConfigError("time.dt must be positive", r.key("dt"));
    }
    t.cfl = r.number("cfl", t.cfl);
    if (!(t.cfl > 0.0 && t.cfl <= 1.0)) throw ConfigError("time.cfl must lie in (0, 1]", r.key("cfl"));
    if (r.has("dt_list")) {
        t.dt_list = r.numbers("dt_list");
        for (double dt : t.dt_list)
            if (!(dt > 0.0)) throw ConfigError("time.dt_list entries must be positive", r.key("dt_list"));
    }
    return t;
}

OutputSpec parse_output(const ObjectReader& r) {
    r.allow({"dir", "snapshot_times", "diagnostics_stride", "formats"});
    OutputSpec o;
    if (r.has("dir")) o.dir = r.string("dir");
    if (r.has("snapshot_times")) o.snapshot_times = r.numbers("snapshot_times");
    if (r.has("diagnostics_stride")) {
        o.diagnostics_stride = static_cast<std::size_t>(r.unsigned_int("diagnostics_stride"));
        if (o.diagnostics_stride == 0)
            throw ConfigError("diagnostics_stride must be >= 1", r.key("diagnostics_stride"));
    }
    if (r.has("formats")) {
        const json& f = r.at("formats");
        if (!f.is_array()) throw ConfigError("output.formats must be an array", r.key("formats"));
        o.formats.clear();
        for (const auto& x : f) {
            const std::string s = x.is_string() ? x.get<std::string>() : "";
            if (s == "csv")
                o.formats.push_back(OutputFormat::Csv);
            else if (s == "vtk")
                o.formats.push_back(OutputFormat::Vtk);
            else
                throw ConfigError("output formats must be 'csv' or 'vtk'", r.key("formats"));
        }
    }
    return o;
}

SimConfig parse_document(const json& doc, const std::string& name) {
    const ObjectReader r(doc, "");
    r.allow({"name", "mode", "mesh", "params", "initial", "time", "output", "seed"});
    SimConfig c;
    c.name = r.has("name") ? r.string("name") : name;
    c.mode = parse_mode(r.has("mode") ? r.string("mode") : "pde");
    if (r.has("mesh")) c.mesh = parse_mesh(r.child("mesh"));
    if (!r.has("params")) throw ConfigError("params.d must be given explicitly", "params.d");
    parse_params(r.child("params"), c.params);
    c.initial = parse_initial(r.child("initial"));
    c.time = parse_time(r.child("time"));
    if (r.has("output")) c.output = parse_output(r.child("output"));
    for (double s : c.output.snapshot_times)
        if (!(s >= 0.0 && s <= c.time.T))
            throw ConfigError("snapshot times must lie in [0, T]", "output.snapshot_times");
    if (r.has("seed")) c.seed = r.unsigned_int("seed");
    if (c.mode != RunMode::Pde) (void)c.initial.homogeneous_state();
    return c;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"example1", "example2", "example3-stripes", "example3-dots"};
}

SimConfig preset(const std::string& name) { return parse_document(preset_json(name), name); }

SimConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << "config parse error at line " << line << ", column " << col << ": " << e.what();
        throw ConfigError(msg.str());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    std::string name = "custom";
    if (doc.contains("preset")) {
        if (!doc["preset"].is_string()) throw ConfigError("'preset' must be a string", "preset");
        name = doc["preset"].get<std::string>();
        json base = preset_json(name);
        doc.erase("preset");
        base.merge_patch(doc);
        doc = std::move(base);
    }
    return parse_document(doc, name);
}

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Mesh and initial data

std::filesystem::path resolve_data_path(const std::string& path) {
    namespace fs = std::filesystem;
    const fs::path p(path);
    if (fs::exists(p)) return p;
    if (p.is_relative()) {
        if (const char* env = std::getenv("ADVFV_DATA_DIR")) {
            const fs::path candidate = fs::path(env) / p;
            if (fs::exists(candidate)) return candidate;
        }
        const fs::path bundled = fs::path(ADVFV_BUNDLED_DATA_DIR) / p;
        if (fs::exists(bundled)) return bundled;
    }
    throw IoError("mesh file not found: " + path);
}

Mesh build_mesh(const MeshSpec& spec) {
    if (const auto* s = std::get_if<StructuredMeshSpec>(&spec))
        return build_structured_rect(s->nx, s->ny, s->Lx, s->Ly);
    const auto& m = std::get<MshMeshSpec>(spec);
    return load_msh(resolve_data_path(m.path), m.tol);
}

namespace {

std::vector<Point> default_centers(const Mesh& mesh) {
    const auto box = mesh.bounding_box();
    double cx = 0.0, cy = 0.0, area = 0.0;
    for (std::size_t k = 0; k < mesh.n_cells(); ++k) {
        const double m = mesh.cell_area()[k];
        cx += m * mesh.cell_center()[k].x;
        cy += m * mesh.cell_center()[k].y;
        area += m;
    }
    cx /= area;
    cy /= area;
    const double dx = 0.25 * (box[1].x - box[0].x);
    const double dy = 0.25 * (box[1].y - box[0].y);
    return {{cx - dx, cy - dy}, {cx + dx, cy + dy}};
}

}  // namespace

StateField build_initial(const InitialRecipe& recipe, const Mesh& mesh, std::uint64_t seed) {
    const std::size_t n = mesh.n_cells();
    StateField s;
    for (std::size_t i = 0; i < kSpecies; ++i) {
        SplitMix64 rng(species_seed(seed, i));
        auto& f = s.u[i];
        f.resize(n);
        std::visit(
            [&](const auto& r) {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, ConstantRecipe>) {
                    std::fill(f.begin(), f.end(), r.value);
                } else if constexpr (std::is_same_v<R, UniformPerturbedRecipe>) {
                    for (auto& v : f) v = r.base + r.amplitude * (1.0 - 2.0 * rng.uniform());
                } else if constexpr (std::is_same_v<R, EquilibriumPerturbedRecipe>) {
                    for (auto& v : f) v = r.equilibrium + r.amplitude * (1.0 - 2.0 * rng.uniform());
                } else {
                    const std::vector<Point> centers = r.centers.empty() ? default_centers(mesh) : r.centers;
                    for (std::size_t k = 0; k < n; ++k) {
                        const Point x = mesh.cell_center()[k];
                        double v = r.base;
                        for (const auto& c : centers) {
                            const double d2 = (x.x - c.x) * (x.x - c.x) + (x.y - c.y) * (x.y - c.y);
                            v += r.amplitude * std::exp(-d2 / r.width);
                        }
                        f[k] = v;
                    }
                }
            },
            recipe.species[i]);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Writers

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << std::setprecision(17);
    return f;
}

void check_written(const std::ostream& f, const std::filesystem::path& path) {
    if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace

void write_csv_diagnostics_header(std::ostream& out) {
    out << "step,t";
    for (std::size_t i = 1; i <= kSpecies; ++i)
        out << ",u" << i << "_min,u" << i << "_mean,u" << i << "_max";
    out << ",newton_iters,newton_residual,gradient_energy,spatial_variance_u1,rectangle_ok\n";
}

void write_csv_diagnostics_row(std::ostream& out, const StepDiagnostics& d) {
    out << d.step << ',' << d.t;
    for (const auto& s : d.stats) out << ',' << s.min << ',' << s.mean << ',' << s.max;
    out << ',' << d.newton_iters << ',' << d.newton_residual << ',' << d.gradient_energy << ','
        << d.spatial_variance_u1 << ',' << (d.rectangle_ok ? 1 : 0) << '\n';
}

void write_csv_diagnostics(const std::vector<StepDiagnostics>& series,
                           const std::filesystem::path& path) {
    std::ofstream f = open_out(path);
    write_csv_diagnostics_header(f);
    for (const auto& d : series) write_csv_diagnostics_row(f, d);
    f.flush();
    check_written(f, path);
}

void write_csv_trajectory(const Trajectory& traj, double dt, const std::filesystem::path& path) {
    std::ofstream f = open_out(path);
    f << "step,t,u1,u2,u3,u4,u5,in_rectangle\n";
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        f << static_cast<std::size_t>(std::llround(traj.times[n] / dt)) << ',' << traj.times[n];
        for (double v : traj.states[n]) f << ',' << v;
        f << ',' << (traj.in_rectangle[n] ? 1 : 0) << '\n';
    }
    f.flush();
    check_written(f, path);
}

void write_vtk_snapshot(const Mesh& mesh, const StateField& state, std::ostream& out) {
    const auto prec = out.precision(17);
    out << "# vtk DataFile Version 3.0\n";
    out << "advfv snapshot t=" << state.t << "\n";
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.n_nodes() << " double\n";
    for (const auto& p : mesh.nodes()) out << p.x << ' ' << p.y << " 0\n";
    std::size_t total = 0;
    for (std::size_t k = 0; k < mesh.n_cells(); ++k) total += mesh.cell_nodes(k).size() + 1;
    out << "CELLS " << mesh.n_cells() << ' ' << total << '\n';
    for (std::size_t k = 0; k < mesh.n_cells(); ++k) {
        const auto nodes = mesh.cell_nodes(k);
        out << nodes.size();
        for (std::size_t v : nodes) out << ' ' << v;
        out << '\n';
    }
    out << "CELL_TYPES " << mesh.n_cells() << '\n';
    for (std::size_t k = 0; k < mesh.n_cells(); ++k) {
        const std::size_t nv = mesh.cell_nodes(k).size();
        out << (nv == 3 ? 5 : nv == 4 ? 9 : 7) << '\n';
    }
    out << "CELL_DATA " << mesh.n_cells() << '\n';
    for (std::size_t i = 0; i < kSpecies; ++i) {
        out << "SCALARS u" << i + 1 << " double 1\nLOOKUP_TABLE default\n";
        for (double v : state.u[i]) out << v << '\n';
    }
    out.precision(prec);
}

void write_vtk_snapshot(const Mesh& mesh, const StateField& state,
                        const std::filesystem::path& path) {
    std::ofstream f = open_out(path);
    write_vtk_snapshot(mesh, state, f);
    f.flush();
    check_written(f, path);
}

std::string snapshot_file_name(std::size_t index) {
    std::ostringstream s;
    s << "snapshot_" << std::setw(4) << std::setfill('0') << index << ".vtk";
    return s.str();
}

std::map<std::string, std::vector<double>> read_vtk_cell_scalars(std::istream& in) {
    std::map<std::string, std::vector<double>> out;
    std::string token;
    std::size_t n = 0;
    bool in_cell_data = false;
    while (in >> token) {
        if (token == "CELL_DATA") {
            if (!(in >> n)) throw FormatError("VTK: bad CELL_DATA count");
            in_cell_data = true;
        } else if (token == "POINT_DATA") {
            in_cell_data = false;
        } else if (token == "SCALARS" && in_cell_data) {
            std::string name, type, lookup, table;
            std::string rest;
            if (!(in >> name >> type)) throw FormatError("VTK: bad SCALARS header");
            std::getline(in, rest);
            if (!(in >> lookup >> table) || lookup != "LOOKUP_TABLE")
                throw FormatError("VTK: SCALARS without LOOKUP_TABLE");
            std::vector<double> values(n);
            for (auto& v : values) {
                std::string s;
                if (!(in >> s)) throw FormatError("VTK: truncated SCALARS " + name);
                v = std::strtod(s.c_str(), nullptr);
            }
            out[name] = std::move(values);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Driver

namespace {

class FileSink : public RunSink {
public:
    FileSink(const SimConfig& c, const Mesh& mesh, RunReport& report)
        : cfg_(c), mesh_(mesh), report_(report), dir_(c.output.dir) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
        if (cfg_.wants(OutputFormat::Csv)) {
            csv_path_ = dir_ / "diagnostics.csv";
            csv_ = open_out(csv_path_);
            write_csv_diagnostics_header(csv_);
            report_.files.push_back(csv_path_);
        }
        if (cfg_.wants(OutputFormat::Vtk)) {
            index_path_ = dir_ / "snapshots.csv";
            index_ = open_out(index_path_);
            index_ << "index,t,file\n";
            report_.files.push_back(index_path_);
        }
    }

    void on_diagnostics(const StepDiagnostics& d) override {
        if (csv_.is_open()) write_csv_diagnostics_row(csv_, d);
    }

    void on_snapshot(std::size_t index, const StateField& s) override {
        if (!index_.is_open()) return;
        const auto path = dir_ / snapshot_file_name(index);
        write_vtk_snapshot(mesh_, s, path);
        index_ << index << ',' << s.t << ',' << path.filename().string() << '\n';
        index_.flush();
        csv_.flush();
        report_.files.push_back(path);
    }

    void flush() override {
        if (csv_.is_open()) {
            csv_.flush();
            check_written(csv_, csv_path_);
        }
        if (index_.is_open()) index_.flush();
    }

private:
    const SimConfig& cfg_;
    const Mesh& mesh_;
    RunReport& report_;
    std::filesystem::path dir_;
    std::filesystem::path csv_path_, index_path_;
    std::ofstream csv_, index_;
};

std::string dt_tag(double dt) {
    std::ostringstream s;
    s << dt;
    return s.str();
}

}  // namespace

RunReport run_config(const SimConfig& c) {
    RunReport report;
    if (c.mode != RunMode::Pde) {
        const Vec5 u0 = c.initial.homogeneous_state();
        std::vector<double> dts = c.time.dt_list;
        if (dts.empty()) {
            dts.push_back(c.time.dt ? *c.time.dt
                                    : compute_dt(c.params, invariant_bounds(c.params), c.time.cfl));
        }
        const OdeScheme scheme = c.mode == RunMode::ShNsfd ? OdeScheme::Nsfd : OdeScheme::Euler;
        IntegrateOptions opts;
        opts.stride = c.output.diagnostics_stride;
        for (double dt : dts) {
            Trajectory traj = integrate(c.params, scheme, u0, dt, c.time.T, opts);
            if (c.wants(OutputFormat::Csv)) {
                const auto path = std::filesystem::path(c.output.dir) / ("trajectory_dt" + dt_tag(dt) + ".csv");
                write_csv_trajectory(traj, dt, path);
                report.files.push_back(path);
            }
            report.trajectories.emplace_back(dt, std::move(traj));
        }
        return report;
    }

    const Mesh mesh = build_mesh(c.mesh);
    RunOptions opts;
    opts.T = c.time.T;
    if (c.time.dt) {
        opts.dt = *c.time.dt;
    } else {
        try {
            opts.dt = compute_dt(c.params, invariant_bounds(c.params), c.time.cfl);
        } catch (const PreconditionError& e) {
            throw ConfigError(std::string("cannot derive dt from cfl: ") + e.what(), "time.dt");
        }
    }
    opts.snapshot_times = c.output.snapshot_times;
    opts.diagnostics_stride = c.output.diagnostics_stride;
    const StateField init = build_initial(c.initial, mesh, c.seed);
    FileSink sink(c, mesh, report);
    report.pde = run(mesh, c.params, init, opts, &sink);
    return report;
}

}  // namespace advfv
