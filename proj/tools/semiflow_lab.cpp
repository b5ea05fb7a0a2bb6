#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "semiflow/job.hpp"

using namespace semiflow;
using nlohmann::json;

namespace {

struct Flags {
    std::string expression, example, space, beta = "hardy", out, csv_dir;
    bool map = false;
    std::size_t N = 32, grid = 10, samples = 4096, sup_samples = 512;
    std::vector<double> t{0.5, 1.0};
    job::Tolerances tol;
};

void add_symbol_options(CLI::App* cmd, Flags& f) {
    cmd->add_option("--G", f.expression, "generator (or map with --map) as an expression in z");
    cmd->add_option("--example", f.example, "built-in example name");
    cmd->add_flag("--map", f.map, "treat --G as a self-map phi");
    cmd->add_option("--space", f.space, "disc or halfplane")->check(CLI::IsMember({"disc", "halfplane"}));
}

void add_common_options(CLI::App* cmd, Flags& f) {
    cmd->add_option("--t", f.t, "time values")->expected(1, -1);
    cmd->add_option("--grid", f.grid, "grid size per axis");
    cmd->add_option("--samples", f.samples, "boundary samples");
    cmd->add_option("--sup-samples", f.sup_samples, "circle samples for sup norms");
    cmd->add_option("--beta", f.beta, "weight: hardy, dirichlet or bergman");
    cmd->add_option("--N", f.N, "truncation order");
    cmd->add_option("--abs-tol", f.tol.flow_abs, "flow absolute tolerance");
    cmd->add_option("--rel-tol", f.tol.flow_rel, "flow relative tolerance");
    cmd->add_option("--alias-tol", f.tol.alias, "Taylor aliasing tolerance");
    cmd->add_option("--sign-tol", f.tol.sign, "sign-test tolerance");
    cmd->add_option("--out", f.out, "report path (stdout when absent)");
    cmd->add_option("--csv-dir", f.csv_dir, "directory for CSV plot data");
}

job::JobSpec from_flags(const std::string& command, const Flags& f) {
    job::JobSpec s;
    s.command = job::parse_command(command);
    if (!f.expression.empty()) s.expression = f.expression;
    if (!f.example.empty()) s.example = f.example;
    if (f.space == "disc") s.space = Space::Disc;
    if (f.space == "halfplane") s.space = Space::HalfPlane;
    s.expression_is_map = f.map;
    s.weight = parse_weight_kind(f.beta);
    s.N = f.N;
    s.times = f.t;
    s.grid = f.grid;
    s.samples = f.samples;
    s.sup_samples = f.sup_samples;
    s.tol = f.tol;
    if (!f.out.empty()) s.report_path = f.out;
    if (!f.csv_dir.empty()) s.csv_dir = f.csv_dir;
    return s;
}

int emit(const job::Outcome& o, bool to_stdout) {
    if (to_stdout) std::cout << o.report.dump(2) << "\n";
    for (const auto& e : o.report["errors"])
        std::cerr << "error [" << e["operation"].get<std::string>() << "]: " << e["message"].get<std::string>() << "\n";
    return o.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Composition-operator semigroups on Hardy spaces of the disc and the half-plane"};
    app.set_version_flag("--version", job::tool_version());
    std::string job_file;
    app.add_option("--job", job_file, "JSON job file (replaces subcommand flags)");
    app.require_subcommand(0, 1);

    Flags f;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"classify", "generator classification on the disc"},
        {"flow", "flows, Denjoy-Wolff point, sup norms and trajectories"},
        {"matrix", "composition and generator matrices, spectra"},
        {"halfplane", "half-plane generation, norms and groups"},
        {"report-all", "run every built-in example"},
        {"list-examples", "list the built-in examples"}};
    std::vector<CLI::App*> subs;
    for (auto [name, desc] : commands) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        if (std::string(name) != "list-examples" && std::string(name) != "report-all") add_symbol_options(cmd, f);
        if (std::string(name) != "list-examples") add_common_options(cmd, f);
        else cmd->add_option("--out", f.out, "report path (stdout when absent)");
        subs.push_back(cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    job::JobSpec spec;
    try {
        if (!job_file.empty()) {
            if (!app.get_subcommands().empty()) throw job::JobError("--job cannot be combined with a subcommand");
            std::ifstream is(job_file);
            if (!is) throw job::JobError("cannot read job file " + job_file);
            json j;
            try {
                j = json::parse(is);
            } catch (const json::parse_error& e) {
                throw job::JobError(std::string("job file is not valid JSON: ") + e.what());
            }
            spec = job::JobSpec::from_json(j);
        } else {
            if (app.get_subcommands().empty()) {
                std::cerr << app.help();
                return 2;
            }
            spec = from_flags(app.get_subcommands().front()->get_name(), f);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error [job]: " << e.what() << "\n";
        return 2;
    }

    return emit(job::run(spec), !spec.report_path.has_value());
}
