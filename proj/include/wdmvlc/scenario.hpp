#ifndef WDMVLC_SCENARIO_HPP
#define WDMVLC_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wdmvlc/ee_problem.hpp"

namespace wdmvlc {

inline constexpr int kSchemaVersion = 1;

enum class ScenarioKind { grid, frequency_sweep, illuminance_sweep, cct_sweep };

std::string to_string(ScenarioKind k);
ScenarioKind parse_scenario_kind(const std::string& s);

/// Parsed `[section]` / `key = value` file. Keys are addressed as "section.key".
class KeyValueFile {
public:
    static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
    static KeyValueFile read(const std::filesystem::path& path);

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;
    /// Keys present in the file that no accessor has asked for.
    std::vector<std::string> unused() const;

    double number(const std::string& key, double fallback) const;
    int integer(const std::string& key, int fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string text(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;

    std::string origin;

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, int> lines_;
    mutable std::map<std::string, bool> used_;
};

struct ScenarioConfig {
    int schema_version = kSchemaVersion;
    ScenarioKind kind = ScenarioKind::grid;
    bool baseline = true;

    // Room: square floor area centred under the luminaire.
    double extent = 2.0;     // m, side length
    double height = 2.0;     // m, luminaire above the receiver plane
    double grid_step = 0.2;  // m
    double location_x = 0.0; // sweep location (m)
    double location_y = 0.0;

    std::filesystem::path data_dir;    // CIE tables live in data_dir/cie
    std::filesystem::path params_dir;  // {red,green,blue,yellow}.params
    std::filesystem::path responsivity_file;  // optional; flat responsivity otherwise

    ReceiverParams rx;
    double responsivity = 0.5;  // A/W, used when no responsivity file is given
    double fov_deg = 60.0;
    double mu = 1.5;
    double a_rec = 7.6e-6;

    double p0_dbm = 2.0;
    double noise_power = 1e-15;
    double bandwidth = 3.84e6;
    double g_min = 1.0;
    double g_max = 10.0;
    double efficacy = constants::photopic_efficacy;

    ConstraintSpec constraints;  // geometry is filled per point

    SolverOptions solver{1e-6, 1e-7, 200, false};
    int starts = 8;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency (at most 8)

    std::vector<double> sweep_f_c{5e6, 10e6, 15e6, 20e6, 25e6, 30e6};
    std::vector<int> sweep_qam{16, 32, 64};
    std::vector<double> sweep_phi{300.0, 400.0, 500.0, 600.0};
    std::vector<double> sweep_cct{3000.0, 4000.0, 5000.0};

    /// Grid coordinates along one axis, inclusive of both room edges.
    std::vector<double> axis() const;
    void validate() const;
};

/// Reads a scenario file; relative paths resolve against the file's directory.
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& origin = "<string>");

/// Loads LEDs, CIE tables and receiver for a config.
SystemModel build_model(const ScenarioConfig& cfg);

/// Link geometry for a receiver at (x, y) on the receiver plane.
LinkGeometry geometry_at(const ScenarioConfig& cfg, double x, double y);

struct ResultRow {
    int index = 0;
    std::string point;  // "grid", "center" or "sweep"
    double x = 0.0;
    double y = 0.0;
    double phi_req = 0.0;
    double cct_req = 0.0;
    double ber_req = 0.0;
    double f_c = 0.0;
    int qam = 16;
    bool feasible = false;
    std::string status;
    SystemConfig config;
    Evaluation eval;
    VectorXd g;  // scaled constraints
    int starts_converged = 0;
    bool has_baseline = false;
    SystemConfig baseline_config;
    Evaluation baseline_eval;
    double wall_time = 0.0;  // s; reported separately so result files stay reproducible
};

struct ScenarioResult {
    ScenarioKind kind = ScenarioKind::grid;
    std::vector<ResultRow> rows;
    std::optional<SystemConfig> baseline;  // grid scenarios
    std::string baseline_status;
    int feasible_rows() const;
};

/// Minimum-power configuration satisfying the constraints at the worst-case (farthest) grid point.
struct BaselineOutcome {
    bool feasible = false;
    SystemConfig config;
    std::string status;
};
BaselineOutcome solve_baseline(const SystemModel& model, const ScenarioConfig& cfg, ConstraintSpec spec);

ScenarioResult run_grid(const SystemModel& model, const ScenarioConfig& cfg);
ScenarioResult run_frequency_sweep(const SystemModel& model, const ScenarioConfig& cfg);
ScenarioResult run_illumination_sweep(const SystemModel& model, const ScenarioConfig& cfg);
ScenarioResult run_scenario(const SystemModel& model, const ScenarioConfig& cfg);

/// Frozen result-file layout.
const std::vector<std::string>& result_columns();
std::string format_results(const ScenarioResult& r);
void write_results(const ScenarioResult& r, const std::filesystem::path& path);
std::string format_timing(const ScenarioResult& r);

/// Re-evaluation through the optics/colorimetry path, independent of the solver's constraint values.
struct RowCheck {
    bool passed = false;
    double illuminance = 0.0;
    double cct = 0.0;
    std::array<double, 4> ber{};
    std::string message;
};
RowCheck verify_row(const SystemModel& model, const ScenarioConfig& cfg, double x, double y, const SystemConfig& sc,
                    const ConstraintSpec& spec);

struct VerifyReport {
    int rows = 0;
    int feasible = 0;
    int failures = 0;
    std::vector<std::string> messages;
};
/// Re-checks every feasible row of a result file against its own requirement columns.
VerifyReport verify_results(const SystemModel& model, const ScenarioConfig& cfg, const std::filesystem::path& csv);
VerifyReport verify_results(const SystemModel& model, const ScenarioConfig& cfg, const ScenarioResult& r);

/// Runs `count` independent jobs on at most `threads` workers; job i writes only slot i.
void parallel_for(int count, int threads, const std::function<void(int)>& job);

}  // namespace wdmvlc

#endif
