#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "semiflow/operator_matrix.hpp"
#include "semiflow/registry.hpp"

namespace semiflow::job {

inline constexpr int kSchemaVersion = 1;
const char* tool_version();

enum class Command { Classify, Flow, Matrix, HalfPlane, ReportAll, ListExamples };

std::string to_string(Command c);
Command parse_command(const std::string& s);

/// Invalid job description; run() turns it into exit code 2.
class JobError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Tolerances {
    double flow_abs = 1e-10;
    double flow_rel = 1e-10;
    double alias = 1e-6;
    double sign = 1e-9;
};

struct JobSpec {
    Command command = Command::Classify;
    std::optional<std::string> expression;
    std::optional<std::string> example;
    bool expression_is_map = false;      // the expression is a self-map phi rather than a generator
    std::optional<Space> space;          // defaults to the example's space, else the disc
    WeightKind weight = WeightKind::Hardy;
    std::size_t N = 32;
    std::vector<double> times{0.5, 1.0};
    std::size_t grid = 10;               // disc: grid x grid polar points; half-plane: log grid
    std::size_t samples = 4096;          // boundary samples for classification
    std::size_t sup_samples = 512;       // circle samples for sup norms of flows
    Tolerances tol;
    std::optional<std::filesystem::path> report_path;
    std::optional<std::filesystem::path> csv_dir;

    /// Throws JobError.
    void validate() const;
    nlohmann::json to_json() const;
    /// Throws JobError on unknown keys or ill-typed values.
    static JobSpec from_json(const nlohmann::json& j);
};

struct Outcome {
    nlohmann::json report;
    int exit_code = 0;                   // 0 ok, 1 an operation failed, 2 invalid job
};

/// Runs the job and writes its side-effect files. Failures are embedded in
/// report["errors"] rather than thrown.
Outcome run(const JobSpec& spec);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// JSON for a double; non-finite values become the strings "NaN", "Infinity", "-Infinity".
nlohmann::json number(double v);

} // namespace semiflow::job
