#include "semiflow/job.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <system_error>

#include "semiflow/generator_class.hpp"
#include "semiflow/halfplane.hpp"
#include "semiflow/semiflow.hpp"

namespace semiflow::job {

using nlohmann::json;

const char* tool_version() {
#ifdef SEMIFLOW_VERSION
    return SEMIFLOW_VERSION;
#else
    return "0.0.0";
#endif
}

std::string to_string(Command c) {
    switch (c) {
    case Command::Classify: return "classify";
    case Command::Flow: return "flow";
    case Command::Matrix: return "matrix";
    case Command::HalfPlane: return "halfplane";
    case Command::ReportAll: return "report-all";
    case Command::ListExamples: return "list-examples";
    }
    return "classify";
}

Command parse_command(const std::string& s) {
    for (Command c : {Command::Classify, Command::Flow, Command::Matrix, Command::HalfPlane, Command::ReportAll,
                      Command::ListExamples})
        if (to_string(c) == s) return c;
    throw JobError("unknown command '" + s + "'");
}

json number(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    return v;
}

namespace {

json complex_json(cplx v) { return {{"re", number(v.real())}, {"im", number(v.imag())}}; }

Space parse_space(const std::string& s) {
    if (s == "disc") return Space::Disc;
    if (s == "halfplane") return Space::HalfPlane;
    throw JobError("unknown space '" + s + "'");
}

bool needs_symbol(Command c) { return c != Command::ReportAll && c != Command::ListExamples; }

std::string format_t(double t) {
    std::ostringstream os;
    os << t;
    return os.str();
}

} // namespace

void JobSpec::validate() const {
    const bool has_expr = expression.has_value(), has_ex = example.has_value();
    if (needs_symbol(command)) {
        if (has_expr == has_ex) throw JobError("exactly one of expression and example is required");
    } else if (has_expr || has_ex) {
        throw JobError(to_string(command) + " takes no expression or example");
    }
    if (has_ex) lookup(*example);  // out_of_range is reported by run()
    if (expression_is_map && !has_expr) throw JobError("the map flag applies to expressions only");
    for (double t : times)
        if (!(t >= 0.0) || !std::isfinite(t)) throw JobError("t-values must be finite and non-negative");
    if (times.empty() && (command == Command::Flow || command == Command::Matrix))
        throw JobError("at least one t-value is required");
    if (N < 1 || N > 512) throw JobError("N must lie in [1, 512]");
    if (grid < 1 || grid > 200) throw JobError("grid must lie in [1, 200]");
    if (samples < 16) throw JobError("samples must be at least 16");
    if (sup_samples < 16) throw JobError("sup_samples must be at least 16");
    if (weight == WeightKind::Custom) throw JobError("custom weights are not available from job files");
    for (double v : {tol.flow_abs, tol.flow_rel, tol.alias, tol.sign})
        if (!(v > 0.0) || !std::isfinite(v)) throw JobError("tolerances must be positive");
}

json JobSpec::to_json() const {
    json j;
    j["command"] = to_string(command);
    j["expression"] = expression ? json(*expression) : json(nullptr);
    j["example"] = example ? json(*example) : json(nullptr);
    j["map"] = expression_is_map;
    j["space"] = space ? json(semiflow::to_string(*space)) : json(nullptr);
    j["weight"] = semiflow::to_string(weight);
    j["N"] = N;
    j["t"] = times;
    j["grid"] = grid;
    j["samples"] = samples;
    j["sup_samples"] = sup_samples;
    j["tolerances"] = {{"flow_abs", tol.flow_abs}, {"flow_rel", tol.flow_rel}, {"alias", tol.alias}, {"sign", tol.sign}};
    j["output"] = {{"report", report_path ? json(report_path->string()) : json(nullptr)},
                   {"csv_dir", csv_dir ? json(csv_dir->string()) : json(nullptr)}};
    return j;
}

JobSpec JobSpec::from_json(const json& j) {
    if (!j.is_object()) throw JobError("job must be a JSON object");
    static const std::set<std::string> known{"command", "expression", "example", "map",     "space",
                                             "weight",  "N",          "t",       "grid",    "samples",
                                             "sup_samples", "tolerances", "output"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw JobError("unknown job key '" + key + "'");
    JobSpec s;
    try {
        if (!j.contains("command")) throw JobError("job needs a command");
        s.command = parse_command(j.at("command").get<std::string>());
        auto opt_string = [&](const char* key) -> std::optional<std::string> {
            if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
            return j.at(key).get<std::string>();
        };
        s.expression = opt_string("expression");
        s.example = opt_string("example");
        if (auto sp = opt_string("space")) s.space = parse_space(*sp);
        if (auto w = opt_string("weight")) s.weight = parse_weight_kind(*w);
        if (j.contains("map")) s.expression_is_map = j.at("map").get<bool>();
        auto count = [&](const char* key, std::size_t& out) {
            if (!j.contains(key)) return;
            const auto& v = j.at(key);
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
                throw JobError(std::string(key) + " must be a non-negative integer");
            out = v.get<std::size_t>();
        };
        count("N", s.N);
        count("grid", s.grid);
        count("samples", s.samples);
        count("sup_samples", s.sup_samples);
        if (j.contains("t")) {
            const auto& t = j.at("t");
            s.times = t.is_array() ? t.get<std::vector<double>>() : std::vector<double>{t.get<double>()};
        }
        if (j.contains("tolerances")) {
            const auto& t = j.at("tolerances");
            for (const auto& [key, v] : t.items()) {
                double x = v.get<double>();
                if (key == "flow_abs") s.tol.flow_abs = x;
                else if (key == "flow_rel") s.tol.flow_rel = x;
                else if (key == "alias") s.tol.alias = x;
                else if (key == "sign") s.tol.sign = x;
                else throw JobError("unknown tolerance '" + key + "'");
            }
        }
        if (j.contains("output")) {
            for (const auto& [key, v] : j.at("output").items()) {
                if (v.is_null()) continue;
                if (key == "report") s.report_path = v.get<std::string>();
                else if (key == "csv_dir") s.csv_dir = v.get<std::string>();
                else throw JobError("unknown output key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw JobError(std::string("ill-typed job: ") + e.what());
    } catch (const std::invalid_argument& e) {
        if (dynamic_cast<const JobError*>(&e)) throw;
        throw JobError(e.what());
    }
    return s;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os << content;
        os.flush();
        if (!os) throw std::runtime_error("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string());
    }
}

namespace {

struct Symbol {
    std::string label;
    Space space = Space::Disc;
    Expr G;
    Expr map;
    const ExampleCase* example = nullptr;
};

struct Context {
    explicit Context(const JobSpec& s) : spec(s) {}

    const JobSpec& spec;
    json errors = json::array();
    json files = json::array();
    json timing = json::array();
    std::string file_prefix;
    std::string op_prefix;

    FlowConfig flow_config() const {
        FlowConfig cfg;
        cfg.abs_tol = spec.tol.flow_abs;
        cfg.rel_tol = spec.tol.flow_rel;
        return cfg;
    }

    std::vector<cplx> disc_points() const { return disc_grid(spec.grid, spec.grid, 0.9); }
    std::vector<cplx> halfplane_points() const { return halfplane_log_grid(spec.grid, spec.grid, 0.05, 5.0); }

    void csv(const std::string& name, const std::string& content) {
        if (!spec.csv_dir) return;
        std::string file = file_prefix + name;
        std::filesystem::create_directories(*spec.csv_dir);
        write_file_atomic(*spec.csv_dir / file, content);
        files.push_back(file);
    }

    // Runs one operation, recording its duration and any failure.
    void op(const std::string& name, json& slot, const std::function<json()>& body) {
        auto start = std::chrono::steady_clock::now();
        try {
            slot = body();
        } catch (const std::exception& e) {
            slot = nullptr;
            errors.push_back({{"operation", op_prefix + name}, {"message", e.what()}});
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        timing.push_back({{"operation", op_prefix + name}, {"seconds", secs}});
    }
};

json dw_json(const DenjoyWolff& dw) {
    return {{"point", complex_json(dw.point)}, {"boundary", dw.boundary}, {"determined", dw.determined}, {"method", dw.method}};
}

json classification(Context& ctx, const Symbol& s) {
    if (s.space != Space::Disc) throw std::invalid_argument("classify operates on disc generators");
    if (s.G.empty()) throw std::invalid_argument("classify needs a generator, not a static map");
    ClassificationOptions opts;
    opts.samples = ctx.spec.samples;
    opts.tol = ctx.spec.tol.sign;
    opts.flow = ctx.flow_config();
    auto rep = classify(s.G, opts);

    json j;
    j["s0"] = number(rep.s0);
    j["generates_semigroup"] = rep.generates_semigroup;
    j["is_group"] = rep.is_group;
    j["theta_max"] = number(rep.theta_max);
    j["imm_compact_sufficient"] = rep.imm_compact_sufficient;
    if (rep.imm_witness) {
        const auto& w = *rep.imm_witness;
        j["imm_witness"] = {{"holds", w.holds}, {"delta", number(w.delta)}, {"eps", number(w.eps)},
                            {"max_re", number(w.max_re)}, {"excluded", w.excluded}};
    } else {
        j["imm_witness"] = nullptr;
    }
    json cc = json::array();
    std::map<std::string, int> tally;
    for (const auto& c : rep.compact_criterion) {
        cc.push_back({{"xi", complex_json(c.xi)},
                      {"radial", to_string(c.radial.verdict)},
                      {"oblique_plus", to_string(c.oblique_plus.verdict)},
                      {"oblique_minus", to_string(c.oblique_minus.verdict)}});
        ++tally[to_string(c.radial.verdict)];
    }
    j["compact_criterion"] = {{"points", cc}, {"radial_tally", tally}};
    j["bp_min_reF"] = rep.bp_min_reF ? number(*rep.bp_min_reF) : json(nullptr);
    j["dw"] = rep.dw ? dw_json(*rep.dw) : json(nullptr);
    j["profile"] = {{"radius", rep.profile.radius}, {"samples", rep.profile.values.size()},
                    {"excluded", rep.profile.excluded}};

    std::ostringstream os;
    os.precision(17);
    os << "theta,re,im\n";
    for (std::size_t k = 0; k < rep.profile.values.size(); ++k)
        os << rep.profile.thetas[k] << ',' << rep.profile.values[k].real() << ',' << rep.profile.values[k].imag()
           << '\n';
    ctx.csv("profile.csv", os.str());
    return j;
}

json flow_results(Context& ctx, const Symbol& s) {
    if (s.G.empty()) throw std::invalid_argument("flow needs a generator, not a static map");
    const auto cfg = ctx.flow_config();
    const bool disc = s.space == Space::Disc;
    const auto points = disc ? ctx.disc_points() : ctx.halfplane_points();
    auto phi = [&](cplx z, double t) { return disc ? flow(s.G, z, t, cfg) : halfplane_flow(s.G, z, t, cfg); };

    json j;
    if (disc) {
        auto fa = analyze_flow(s.G, ctx.spec.times, ctx.spec.sup_samples, points, cfg);
        j["dw"] = dw_json(fa.dw);
        json sup = json::array();
        for (auto [t, v] : fa.sup_norm_curve) sup.push_back({{"t", t}, {"value", number(v)}});
        j["sup_norm"] = sup;
        j["semiflow_defect"] = number(fa.semiflow_defect);
    }

    const std::optional<Expr>* closed = s.example ? &s.example->closed_form_flow : nullptr;
    json cf = json::array(), md = json::array();
    for (double t : ctx.spec.times) {
        if (closed && *closed) {
            double worst = 0.0;
            for (cplx z : points)
                worst = std::max(worst, std::abs(phi(z, t) - (*closed)->eval(z, t)) / std::max(1.0, std::abs(z)));
            cf.push_back({{"t", t}, {"defect", number(worst)}});
        }
        if (s.example && s.example->model)
            md.push_back({{"t", t}, {"defect", number(model_defect(s.G, *s.example->model, points, t, cfg))}});
    }
    j["closed_form_defect"] = closed && *closed ? cf : json(nullptr);
    j["model_defect"] = s.example && s.example->model ? md : json(nullptr);

    // Trajectories on a uniform time mesh plus the requested times.
    double tmax = 0.0;
    for (double t : ctx.spec.times) tmax = std::max(tmax, t);
    std::set<double> mesh(ctx.spec.times.begin(), ctx.spec.times.end());
    for (int k = 0; k <= 20; ++k) mesh.insert(tmax * k / 20.0);
    std::ostringstream os;
    os.precision(17);
    os << "point,z_re,z_im,t,w_re,w_im\n";
    for (std::size_t p = 0; p < points.size(); ++p)
        for (double t : mesh) {
            cplx w = phi(points[p], t);
            os << p << ',' << points[p].real() << ',' << points[p].imag() << ',' << t << ',' << w.real() << ','
               << w.imag() << '\n';
        }
    ctx.csv("trajectories.csv", os.str());
    j["trajectory_points"] = points.size();
    j["trajectory_times"] = mesh.size();
    return j;
}

json spectrum_json(const std::vector<double>& sigma) {
    double sum = 0.0;
    for (double v : sigma) sum += v;
    return {{"sigma_max", number(sigma.empty() ? 0.0 : sigma.front())}, {"sigma_sum", number(sum)},
            {"singular_values", [&] {
                 json a = json::array();
                 for (double v : sigma) a.push_back(number(v));
                 return a;
             }()}};
}

json matrix_results(Context& ctx, const Symbol& s) {
    if (s.space != Space::Disc) throw std::invalid_argument("matrices are available on the disc only");
    const auto beta = WeightSequence::make(ctx.spec.weight, ctx.spec.N);
    MatrixOptions opts;
    opts.alias_tol = ctx.spec.tol.alias;
    const auto cfg = ctx.flow_config();

    auto export_matrix = [&](const OperatorMatrix& T, const std::vector<double>& sigma, const std::string& tag) {
        std::ostringstream m, sp;
        write_matrix_csv(m, T);
        write_spectrum_csv(sp, sigma);
        ctx.csv("matrix" + tag + ".csv", m.str());
        ctx.csv("spectrum" + tag + ".csv", sp.str());
    };

    json j;
    j["weight"] = semiflow::to_string(ctx.spec.weight);
    j["N"] = ctx.spec.N;
    if (s.G.empty()) {
        const Expr& phi = s.map;
        auto T = composition_matrix(phi, beta, ctx.spec.N, opts);
        auto sigma = singular_values(T);
        json m = spectrum_json(sigma);
        m["entry_error"] = number(T.entry_error);
        m["characterization_defect"] = number(characterization_defect(T));
        m["hs_norm_matrix"] = number(hs_norm_matrix(T));
        export_matrix(T, sigma, "");
        j["map"] = m;
        auto hs = [](const HsIntegral& h) {
            return json{{"value", number(h.value)}, {"diverges", h.diverges}, {"reason", h.reason}};
        };
        if (ctx.spec.weight == WeightKind::Hardy) {
            j["hs_integral"] = hs(hs_integral_hardy(phi));
            j["hs_integral_square"] = hs(hs_integral_hardy([&](cplx z) { return phi(phi(z)); }));
        }
        auto tc = trace_class_flag(phi);
        j["trace_class"] = {{"flag", tc.flag}, {"sup", number(tc.sup)}, {"sup_outer", number(tc.sup_outer)}};
        return j;
    }

    auto A = generator_matrix(s.G, beta, ctx.spec.N, opts);
    json per_t = json::array();
    for (double t : ctx.spec.times) {
        auto T = composition_matrix([&](cplx z) { return flow(s.G, z, t, cfg); }, beta, ctx.spec.N, opts);
        auto sigma = singular_values(T);
        json m = spectrum_json(sigma);
        m["t"] = t;
        m["entry_error"] = number(T.entry_error);
        m["characterization_defect"] = number(characterization_defect(T));
        m["hs_norm_matrix"] = number(hs_norm_matrix(T));
        m["expm_defect"] = number(expm_compare(A, t, T, std::max<std::size_t>(1, ctx.spec.N / 2)));
        if (t > 0.0) {
            auto tc = trace_class_flag([&](cplx z) { return flow(s.G, z, t, cfg); });
            m["trace_class"] = {{"flag", tc.flag}, {"sup", number(tc.sup)}, {"sup_outer", number(tc.sup_outer)}};
        } else {
            m["trace_class"] = nullptr;
        }
        export_matrix(T, sigma, "_t" + format_t(t));
        per_t.push_back(m);
    }
    j["flows"] = per_t;
    return j;
}

json halfplane_report(Context& ctx, const Symbol& s) {
    if (s.space != Space::HalfPlane) throw std::invalid_argument("halfplane needs a half-plane generator");
    if (s.G.empty()) throw std::invalid_argument("halfplane needs a generator");
    auto rep = analyze_halfplane(s.G, ctx.spec.times);
    json j;
    j["bp_violation"] = number(rep.bp_violation);
    j["delta"] = rep.delta ? number(*rep.delta) : json(nullptr);
    json norms = json::array();
    for (auto [t, v] : rep.norm_at) norms.push_back({{"t", t}, {"value", number(v)}});
    j["norm_at"] = rep.delta ? norms : json(nullptr);
    j["kernel"] = {{"inf", number(rep.kernel.inf)}, {"inf_inner", number(rep.kernel.inf_inner)},
                   {"contractive", rep.kernel.contractive}, {"bounded_below", rep.kernel.bounded_below}};
    j["group"] = rep.group ? json{{"p", rep.group->p}, {"q", rep.group->q}} : json(nullptr);
    json rot = json::array();
    for (auto [th, v] : rep.rotated_bp) rot.push_back({{"theta", th}, {"violation", number(v)}});
    j["rotated_bp"] = rot;
    return j;
}

Symbol resolve(const JobSpec& spec) {
    Symbol s;
    if (spec.example) {
        const auto& ex = lookup(*spec.example);
        s.label = ex.name;
        s.space = ex.space;
        s.G = ex.G;
        s.map = ex.static_map;
        s.example = &ex;
        if (spec.space && *spec.space != ex.space)
            throw JobError("example '" + ex.name + "' lives on the " + semiflow::to_string(ex.space));
    } else {
        s.label = *spec.expression;
        s.space = spec.space.value_or(Space::Disc);
        Expr e = Expr::parse(*spec.expression);
        (spec.expression_is_map ? s.map : s.G) = std::move(e);
    }
    return s;
}

json list_examples() {
    json a = json::array();
    for (const auto& ex : builtin_examples())
        a.push_back({{"name", ex.name},
                     {"space", semiflow::to_string(ex.space)},
                     {"description", ex.description},
                     {"kind", ex.is_static() ? "map" : "generator"},
                     {"expression", ex.is_static() ? ex.static_map.to_string() : ex.G.to_string()},
                     {"closed_form_flow", ex.closed_form_flow ? json(ex.closed_form_flow->to_string()) : json(nullptr)}});
    return a;
}

json run_symbol(Context& ctx, const Symbol& s, Command c) {
    json r;
    r["symbol"] = {{"label", s.label}, {"space", semiflow::to_string(s.space)},
                   {"kind", s.G.empty() ? "map" : "generator"}};
    switch (c) {
    case Command::Classify: ctx.op("classification", r["classification"], [&] { return classification(ctx, s); }); break;
    case Command::Flow: ctx.op("flow", r["flow"], [&] { return flow_results(ctx, s); }); break;
    case Command::Matrix: ctx.op("matrix", r["matrix"], [&] { return matrix_results(ctx, s); }); break;
    case Command::HalfPlane: ctx.op("halfplane", r["halfplane"], [&] { return halfplane_report(ctx, s); }); break;
    default: break;
    }
    return r;
}

json provenance(const JobSpec& spec) {
    return {{"tool", "semiflow_lab"},
            {"version", tool_version()},
            {"tolerances",
             {{"flow_abs", spec.tol.flow_abs},
              {"flow_rel", spec.tol.flow_rel},
              {"alias", spec.tol.alias},
              {"sign", spec.tol.sign}}},
            {"grids",
             {{"disc", {{"radii", spec.grid}, {"angles", spec.grid}, {"rmax", 0.9}}},
              {"halfplane", {{"nx", spec.grid}, {"ny", spec.grid}, {"xmin", 0.05}, {"xmax", 5.0}}},
              {"berkson_porta", {{"nx", 32}, {"ny", 32}, {"xmin", 1e-2}, {"xmax", 10.0}}},
              {"boundary_samples", spec.samples},
              {"sup_samples", spec.sup_samples},
              {"matrix_order", spec.N}}}};
}

} // namespace

Outcome run(const JobSpec& spec) {
    auto start = std::chrono::steady_clock::now();
    Context ctx{spec};
    Outcome out;
    json& rep = out.report;
    rep["schema"] = kSchemaVersion;
    rep["job"] = spec.to_json();
    rep["provenance"] = provenance(spec);
    rep["results"] = nullptr;

    bool invalid = false;
    try {
        spec.validate();
        switch (spec.command) {
        case Command::ListExamples: rep["results"] = {{"examples", list_examples()}}; break;
        case Command::ReportAll: {
            json all = json::array();
            for (const auto& ex : builtin_examples()) {
                JobSpec one = spec;
                one.example = ex.name;
                Symbol s = resolve(one);
                ctx.file_prefix = ex.name + "_";
                ctx.op_prefix = ex.name + ":";
                json r;
                if (ex.is_static()) {
                    r = run_symbol(ctx, s, Command::Matrix);
                } else if (ex.space == Space::Disc) {
                    r = run_symbol(ctx, s, Command::Classify);
                    r["flow"] = run_symbol(ctx, s, Command::Flow)["flow"];
                } else {
                    r = run_symbol(ctx, s, Command::HalfPlane);
                    r["flow"] = run_symbol(ctx, s, Command::Flow)["flow"];
                }
                all.push_back(r);
            }
            ctx.file_prefix.clear();
            ctx.op_prefix.clear();
            rep["results"] = {{"examples", all}};
            break;
        }
        default: rep["results"] = run_symbol(ctx, resolve(spec), spec.command); break;
        }
    } catch (const JobError& e) {
        invalid = true;
        ctx.errors.push_back({{"operation", "job"}, {"message", e.what()}});
    } catch (const ParseError& e) {
        invalid = true;
        ctx.errors.push_back({{"operation", "parse"}, {"message", e.what()}, {"position", e.position()}});
    } catch (const std::out_of_range& e) {
        invalid = true;
        ctx.errors.push_back({{"operation", "lookup"}, {"message", e.what()}});
    } catch (const std::exception& e) {
        ctx.errors.push_back({{"operation", "run"}, {"message", e.what()}});
    }

    rep["errors"] = ctx.errors;
    rep["files"] = ctx.files;
    out.exit_code = invalid ? 2 : (ctx.errors.empty() ? 0 : 1);
    double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep["timing"] = {{"total_seconds", total}, {"operations", ctx.timing}};
    if (spec.report_path) {
        try {
            write_file_atomic(*spec.report_path, rep.dump(2) + "\n");
        } catch (const std::exception& e) {
            rep["errors"].push_back({{"operation", "write-report"}, {"message", e.what()}});
            if (out.exit_code == 0) out.exit_code = 1;
        }
    }
    return out;
}

} // namespace semiflow::job
