#include "wdmvlc/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "wdmvlc/csv.hpp"
#include "wdmvlc/error.hpp"

namespace wdmvlc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const char* kChannelSuffix[4] = {"r", "g", "b", "y"};

bool parse_bool(const std::string& v, const std::string& where) {
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ConfigError(fmt::format("{}: expected a boolean, got '{}'", where, v));
}

template <typename T>
std::array<T, 4> per_channel(const std::vector<double>& v, const std::string& key) {
    std::array<T, 4> out{};
    if (v.size() == 1) {
        out.fill(static_cast<T>(v[0]));
    } else if (v.size() == 4) {
        for (int i = 0; i < 4; ++i) out[i] = static_cast<T>(v[i]);
    } else {
        throw ConfigError(fmt::format("{}: expected 1 or 4 values, got {}", key, v.size()));
    }
    return out;
}

void check_increasing(const std::vector<double>& v, const std::string& what) {
    if (v.empty()) throw ConfigError(what + ": sweep range is empty");
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) throw ConfigError(what + ": sweep values must be strictly increasing");
}

}  // namespace

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::grid: return "grid";
        case ScenarioKind::frequency_sweep: return "frequency-sweep";
        case ScenarioKind::illuminance_sweep: return "illuminance-sweep";
        case ScenarioKind::cct_sweep: return "cct-sweep";
    }
    return "unknown";
}

ScenarioKind parse_scenario_kind(const std::string& s) {
    if (s == "grid") return ScenarioKind::grid;
    if (s == "frequency-sweep") return ScenarioKind::frequency_sweep;
    if (s == "illuminance-sweep") return ScenarioKind::illuminance_sweep;
    if (s == "cct-sweep") return ScenarioKind::cct_sweep;
    throw ConfigError(fmt::format("unknown scenario kind '{}' (grid, frequency-sweep, illuminance-sweep, cct-sweep)", s));
}

// ---------------------------------------------------------------------------------------------------------------

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
    KeyValueFile f;
    f.origin = origin;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = csv::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ConfigError(fmt::format("{}:{}: malformed section header", origin, lineno));
            section = csv::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("{}:{}: expected 'key = value'", origin, lineno));
        const std::string key = csv::trim(line.substr(0, eq));
        const std::string val = csv::trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) throw ConfigError(fmt::format("{}:{}: empty key or value", origin, lineno));
        const std::string full = section.empty() ? key : section + "." + key;
        if (f.values_.count(full)) throw ConfigError(fmt::format("{}:{}: duplicate key '{}'", origin, lineno, full));
        f.values_[full] = val;
        f.lines_[full] = lineno;
    }
    return f;
}

KeyValueFile KeyValueFile::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

bool KeyValueFile::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KeyValueFile::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(fmt::format("{}: missing key '{}'", origin, key));
    used_[key] = true;
    return it->second;
}

std::vector<std::string> KeyValueFile::unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
        if (!used_.count(k)) out.push_back(fmt::format("{} (line {})", k, lines_.at(k)));
    return out;
}

double KeyValueFile::number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return csv::to_double(get(key), origin + ": " + key);
}

int KeyValueFile::integer(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    const double v = number(key, 0.0);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(fmt::format("{}: {} must be an integer", origin, key));
    return static_cast<int>(v);
}

bool KeyValueFile::boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    return parse_bool(get(key), origin + ": " + key);
}

std::string KeyValueFile::text(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

std::vector<double> KeyValueFile::numbers(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const auto& cell : csv::split(get(key), ',')) out.push_back(csv::to_double(csv::trim(cell), origin + ": " + key));
    return out;
}

// ---------------------------------------------------------------------------------------------------------------

std::vector<double> ScenarioConfig::axis() const {
    const int n = static_cast<int>(std::lround(extent / grid_step));
    std::vector<double> xs;
    // (2i - n) is antisymmetric in i, so mirrored points are exact negatives of each other.
    for (int i = 0; i <= n; ++i) xs.push_back(extent * (2.0 * i - n) / (2.0 * n));
    return xs;
}

void ScenarioConfig::validate() const {
    if (schema_version != kSchemaVersion)
        throw ConfigError(fmt::format("unsupported schema_version {} (expected {})", schema_version, kSchemaVersion));
    if (!(extent > 0.0) || !(height > 0.0) || !(grid_step > 0.0)) throw ConfigError("room dimensions must be positive");
    const double n = extent / grid_step;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n) || std::round(n) < 1)
        throw ConfigError(fmt::format("grid step {} m does not divide the room extent {} m", grid_step, extent));
    if (std::abs(location_x) > extent / 2 || std::abs(location_y) > extent / 2)
        throw ConfigError("sweep location lies outside the room");
    if (!(fov_deg > 0.0 && fov_deg <= 90.0)) throw ConfigError("field of view must lie in (0, 90] degrees");
    if (!(mu > 0.0) || !(a_rec > 0.0)) throw ConfigError("Lambertian order and receiver area must be positive");
    if (!(noise_power > 0.0) || !(bandwidth > 0.0)) throw ConfigError("noise power and bandwidth must be positive");
    if (!(g_min > 0.0) || !(g_min < g_max)) throw ConfigError("amplifier gain window must satisfy 0 < g_min < g_max");
    if (!(efficacy > 0.0)) throw ConfigError("luminous efficacy must be positive");
    if (starts < 1) throw ConfigError("multi-start count must be at least 1");
    if (threads < 0) throw ConfigError("thread count must be non-negative");
    if (!(solver.tolerance > 0.0) || !(solver.feasibility_tolerance > 0.0) || solver.max_iterations < 1)
        throw ConfigError("solver tolerances and iteration cap must be positive");
    constraints.validate();
    rx.validate();
    check_increasing(sweep_f_c, "sweep.f_c");
    check_increasing(sweep_phi, "sweep.phi");
    check_increasing(sweep_cct, "sweep.cct");
    if (sweep_qam.empty()) throw ConfigError("sweep.qam: sweep range is empty");
    for (int m : sweep_qam)
        if (m != 4 && m != 16 && m != 32 && m != 64) throw ConfigError(fmt::format("sweep.qam: unsupported order {}", m));
    for (double f : sweep_f_c)
        if (!(f > 0.0)) throw ConfigError("sweep.f_c: frequencies must be positive");
    for (double v : sweep_phi)
        if (!(v > 0.0)) throw ConfigError("sweep.phi: illuminance must be positive");
    for (double v : sweep_cct)
        if (!(v > 0.0)) throw ConfigError("sweep.cct: CCT must be positive");
    if (!std::filesystem::is_directory(data_dir / "cie"))
        throw ConfigError("CIE table directory '" + (data_dir / "cie").string() + "' does not exist");
    for (const char* stem : {"red", "green", "blue", "yellow"}) {
        const auto p = params_dir / (std::string(stem) + ".params");
        if (!std::filesystem::is_regular_file(p)) throw ConfigError("LED parameter file '" + p.string() + "' does not exist");
    }
    if (!responsivity_file.empty() && !std::filesystem::is_regular_file(responsivity_file))
        throw ConfigError("responsivity file '" + responsivity_file.string() + "' does not exist");
}

ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir, const std::string& origin) {
    const KeyValueFile kv = KeyValueFile::parse(text, origin);
    ScenarioConfig c;
    if (!kv.has("schema_version")) throw ConfigError(origin + ": missing schema_version");
    c.schema_version = kv.integer("schema_version", 0);
    if (c.schema_version != kSchemaVersion)
        throw ConfigError(fmt::format("{}: unsupported schema_version {} (expected {})", origin, c.schema_version,
                                      kSchemaVersion));

    c.kind = parse_scenario_kind(kv.text("scenario.kind", "grid"));
    c.baseline = kv.boolean("scenario.baseline", c.baseline);
    c.location_x = kv.number("scenario.location_x", c.location_x);
    c.location_y = kv.number("scenario.location_y", c.location_y);

    c.extent = kv.number("room.extent", c.extent);
    c.height = kv.number("room.height", c.height);
    c.grid_step = kv.number("room.grid_step", c.grid_step);

    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };
    c.data_dir = kv.has("paths.data_dir") ? resolve(kv.get("paths.data_dir")) : std::filesystem::path(WDMVLC_DATA_DIR);
    c.params_dir = kv.has("paths.params_dir") ? resolve(kv.get("paths.params_dir")) : c.data_dir / "reference";
    if (kv.has("paths.responsivity")) c.responsivity_file = resolve(kv.get("paths.responsivity"));

    c.rx.g_tia = kv.number("receiver.g_tia", c.rx.g_tia);
    c.rx.g_opt = kv.number("receiver.g_opt", c.rx.g_opt);
    c.rx.filter_loss = kv.number("receiver.filter_loss", c.rx.filter_loss);
    c.rx.filter_width = per_channel<double>(kv.numbers("receiver.filter_width", {20.0}), "receiver.filter_width");
    c.rx.filter_center = per_channel<double>(
        kv.numbers("receiver.filter_center", {c.rx.filter_center[0], c.rx.filter_center[1], c.rx.filter_center[2],
                                              c.rx.filter_center[3]}),
        "receiver.filter_center");
    c.rx.crosstalk = kv.boolean("receiver.crosstalk", c.rx.crosstalk);
    c.responsivity = kv.number("receiver.responsivity", c.responsivity);
    c.fov_deg = kv.number("receiver.fov_deg", c.fov_deg);
    c.a_rec = kv.number("receiver.a_rec", c.a_rec);
    if (kv.has("receiver.semi_angle_deg") && kv.has("receiver.mu"))
        throw ConfigError(origin + ": give either receiver.mu or receiver.semi_angle_deg, not both");
    if (kv.has("receiver.semi_angle_deg"))
        c.mu = lambertian_order(kv.number("receiver.semi_angle_deg", 0.0) * constants::pi / 180.0);
    else
        c.mu = kv.number("receiver.mu", c.mu);

    c.p0_dbm = kv.number("signal.p0_dbm", c.p0_dbm);
    c.noise_power = kv.number("signal.noise_power", c.noise_power);
    c.bandwidth = kv.number("signal.bandwidth", c.bandwidth);
    c.g_min = kv.number("signal.g_min", c.g_min);
    c.g_max = kv.number("signal.g_max", c.g_max);
    c.efficacy = kv.number("signal.efficacy", c.efficacy);

    c.constraints.phi_req = kv.number("constraints.phi_req", c.constraints.phi_req);
    c.constraints.cct_req = kv.number("constraints.cct_req", c.constraints.cct_req);
    c.constraints.ber_req = kv.number("constraints.ber_req", c.constraints.ber_req);
    c.constraints.qam = per_channel<int>(kv.numbers("constraints.qam", {16.0}), "constraints.qam");
    c.constraints.f_c = per_channel<double>(kv.numbers("constraints.f_c", {10e6}), "constraints.f_c");

    c.solver.tolerance = kv.number("solver.tolerance", c.solver.tolerance);
    c.solver.feasibility_tolerance = kv.number("solver.feasibility_tolerance", c.solver.feasibility_tolerance);
    c.solver.max_iterations = kv.integer("solver.max_iterations", c.solver.max_iterations);
    c.starts = kv.integer("solver.starts", c.starts);
    const double seed = kv.number("solver.seed", static_cast<double>(c.seed));
    if (seed < 0 || seed != std::floor(seed) || seed > 9007199254740992.0)
        throw ConfigError(origin + ": solver.seed must be a non-negative integer");
    c.seed = static_cast<std::uint64_t>(seed);
    c.threads = kv.integer("solver.threads", c.threads);

    c.sweep_f_c = kv.numbers("sweep.f_c", c.sweep_f_c);
    {
        std::vector<double> q(c.sweep_qam.begin(), c.sweep_qam.end());
        q = kv.numbers("sweep.qam", q);
        c.sweep_qam.clear();
        for (double v : q) c.sweep_qam.push_back(static_cast<int>(v));
    }
    c.sweep_phi = kv.numbers("sweep.phi", c.sweep_phi);
    c.sweep_cct = kv.numbers("sweep.cct", c.sweep_cct);

    const auto extra = kv.unused();
    if (!extra.empty()) {
        std::string list;
        for (const auto& k : extra) list += (list.empty() ? "" : ", ") + k;
        throw ConfigError(origin + ": unknown key(s): " + list);
    }
    if (c.responsivity_file.empty()) c.rx.set_flat_responsivity(c.responsivity);
    else load_responsivity(c.responsivity_file, c.rx);
    return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    ScenarioConfig c = parse_scenario(ss.str(), path.parent_path(), path.string());
    return c;
}

SystemModel build_model(const ScenarioConfig& cfg) {
    SystemModel m;
    m.cie = load_cie_tables(cfg.data_dir / "cie");
    const char* stems[4] = {"red", "green", "blue", "yellow"};
    const char* ids[4] = {"R", "G", "B", "Y"};
    for (int i = 0; i < 4; ++i) {
        m.leds[i] = load_led_params(cfg.params_dir / (std::string(stems[i]) + ".params"));
        if (m.leds[i].channel != ids[i])
            throw ConfigError(fmt::format("{}.params describes channel {}, expected {}", stems[i], m.leds[i].channel, ids[i]));
    }
    m.rx = cfg.rx;
    m.efficacy = cfg.efficacy;
    m.p0 = dbm_to_watts(cfg.p0_dbm);
    m.noise.sigma2 = cfg.noise_power;
    m.bandwidth = cfg.bandwidth;
    m.g_min = cfg.g_min;
    m.g_max = cfg.g_max;
    m.refresh();
    return m;
}

LinkGeometry geometry_at(const ScenarioConfig& cfg, double x, double y) {
    return geometry_from_positions({0.0, 0.0, cfg.height}, {x, y, 0.0}, cfg.mu, cfg.fov_deg * constants::pi / 180.0,
                                   cfg.a_rec);
}

int ScenarioResult::feasible_rows() const {
    return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.feasible; }));
}

// ---------------------------------------------------------------------------------------------------------------

void parallel_for(int count, int threads, const std::function<void(int)>& job) {
    if (count <= 0) return;
    int workers = threads > 0 ? threads : static_cast<int>(std::min(8u, std::max(1u, std::thread::hardware_concurrency())));
    workers = std::min(workers, count);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    // Report the lowest-index failure so the outcome does not depend on scheduling.
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

BaselineOutcome solve_baseline(const SystemModel& model, const ScenarioConfig& cfg, ConstraintSpec spec) {
    const double corner = cfg.extent / 2.0;
    spec.geom = geometry_at(cfg, corner, corner);
    const NlpProblem prob = build_problem(model, spec, Objective::min_power);
    const MultiStartOutcome ms = multi_start(prob, cfg.starts, cfg.seed, cfg.solver);
    BaselineOutcome out;
    if (ms.best) {
        out.feasible = true;
        out.config = SystemConfig::from_vector(ms.best->x);
        out.status = to_string(ms.best->status);
    } else {
        out.status = "infeasible";
    }
    return out;
}

namespace {

ResultRow solve_point(const SystemModel& model, const ScenarioConfig& cfg, ConstraintSpec spec, double x, double y,
                      const std::optional<SystemConfig>& baseline) {
    const auto t0 = std::chrono::steady_clock::now();
    ResultRow row;
    row.x = x;
    row.y = y;
    row.phi_req = spec.phi_req;
    row.cct_req = spec.cct_req;
    row.ber_req = spec.ber_req;
    row.f_c = spec.f_c[0];
    row.qam = spec.qam[0];
    spec.geom = geometry_at(cfg, x, y);
    const NlpProblem prob = build_problem(model, spec, Objective::max_ee);
    std::vector<VectorXd> extra;
    if (baseline) extra.push_back(baseline->to_vector());
    const MultiStartOutcome ms = multi_start(prob, cfg.starts, cfg.seed, cfg.solver, extra);
    for (const auto& run : ms.runs) row.starts_converged += run.status == SolveStatus::converged;
    const SolveOutcome* pick = ms.best ? &*ms.best : nullptr;
    if (!pick) {
        for (const auto& run : ms.runs)
            if (run.x.size() == 8 && std::isfinite(run.max_violation) &&
                (!pick || run.max_violation < pick->max_violation))
                pick = &run;
    }
    row.feasible = ms.best.has_value();
    if (pick) {
        row.status = row.feasible ? to_string(pick->status) : "infeasible";
        row.config = SystemConfig::from_vector(pick->x);
        row.eval = evaluate(model, spec, row.config);
        row.g = constraint_values(row.eval, spec);
    } else {
        row.status = "failed";
        row.g = VectorXd::Constant(6, kNaN);
    }
    if (baseline) {
        row.has_baseline = true;
        row.baseline_config = *baseline;
        row.baseline_eval = evaluate(model, spec, *baseline);
    }
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

struct SweepJob {
    ConstraintSpec spec;
};

ScenarioResult run_sweep_jobs(const SystemModel& model, const ScenarioConfig& cfg, ScenarioKind kind,
                              const std::vector<SweepJob>& jobs) {
    ScenarioResult res;
    res.kind = kind;
    res.rows.resize(jobs.size());
    parallel_for(static_cast<int>(jobs.size()), cfg.threads, [&](int i) {
        const auto& job = jobs[static_cast<std::size_t>(i)];
        std::optional<SystemConfig> base;
        if (cfg.baseline) {
            const BaselineOutcome b = solve_baseline(model, cfg, job.spec);
            if (b.feasible) base = b.config;
        }
        ResultRow row = solve_point(model, cfg, job.spec, cfg.location_x, cfg.location_y, base);
        row.index = i;
        row.point = "sweep";
        res.rows[static_cast<std::size_t>(i)] = std::move(row);
    });
    res.baseline_status = cfg.baseline ? "per-row" : "off";
    return res;
}

}  // namespace

ScenarioResult run_grid(const SystemModel& model, const ScenarioConfig& cfg) {
    ScenarioResult res;
    res.kind = ScenarioKind::grid;
    if (cfg.baseline) {
        const BaselineOutcome b = solve_baseline(model, cfg, cfg.constraints);
        res.baseline_status = b.status;
        if (b.feasible) res.baseline = b.config;
    } else {
        res.baseline_status = "off";
    }
    const auto xs = cfg.axis();
    std::vector<std::pair<double, double>> pts;
    for (double y : xs)
        for (double x : xs) pts.emplace_back(x, y);
    const bool center_on_grid = std::find(xs.begin(), xs.end(), 0.0) != xs.end();
    if (!center_on_grid) pts.emplace_back(0.0, 0.0);
    res.rows.resize(pts.size());
    parallel_for(static_cast<int>(pts.size()), cfg.threads, [&](int i) {
        const auto [x, y] = pts[static_cast<std::size_t>(i)];
        ResultRow row = solve_point(model, cfg, cfg.constraints, x, y, res.baseline);
        row.index = i;
        row.point = (!center_on_grid && static_cast<std::size_t>(i) + 1 == pts.size()) ? "center" : "grid";
        res.rows[static_cast<std::size_t>(i)] = std::move(row);
    });
    return res;
}

ScenarioResult run_frequency_sweep(const SystemModel& model, const ScenarioConfig& cfg) {
    std::vector<SweepJob> jobs;
    for (int m : cfg.sweep_qam)
        for (double f : cfg.sweep_f_c) {
            SweepJob j{cfg.constraints};
            j.spec.qam.fill(m);
            j.spec.f_c.fill(f);
            jobs.push_back(j);
        }
    return run_sweep_jobs(model, cfg, ScenarioKind::frequency_sweep, jobs);
}

ScenarioResult run_illumination_sweep(const SystemModel& model, const ScenarioConfig& cfg) {
    std::vector<SweepJob> jobs;
    if (cfg.kind == ScenarioKind::illuminance_sweep) {
        for (double phi : cfg.sweep_phi) {
            SweepJob j{cfg.constraints};
            j.spec.phi_req = phi;
            jobs.push_back(j);
        }
    } else if (cfg.kind == ScenarioKind::cct_sweep) {
        for (double cct : cfg.sweep_cct) {
            SweepJob j{cfg.constraints};
            j.spec.cct_req = cct;
            jobs.push_back(j);
        }
    } else {
        throw ConfigError("illumination sweep needs kind illuminance-sweep or cct-sweep");
    }
    return run_sweep_jobs(model, cfg, cfg.kind, jobs);
}

ScenarioResult run_scenario(const SystemModel& model, const ScenarioConfig& cfg) {
    switch (cfg.kind) {
        case ScenarioKind::grid: return run_grid(model, cfg);
        case ScenarioKind::frequency_sweep: return run_frequency_sweep(model, cfg);
        case ScenarioKind::illuminance_sweep:
        case ScenarioKind::cct_sweep: return run_illumination_sweep(model, cfg);
    }
    throw ConfigError("unknown scenario kind");
}

// ---------------------------------------------------------------------------------------------------------------

const std::vector<std::string>& result_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c = {"index", "point", "x_m", "y_m", "phi_req_lx", "cct_req_k", "ber_req",
                                      "f_c_hz", "qam", "feasible", "status", "starts_converged"};
        for (auto s : kChannelSuffix) c.push_back(fmt::format("v_bias_{}_v", s));
        for (auto s : kChannelSuffix) c.push_back(fmt::format("g_amp_{}", s));
        for (const char* k : {"ee_bit_per_j", "capacity_bit_per_s", "p_ill_w", "p_com_w", "illuminance_lx", "cct_k"})
            c.push_back(k);
        for (auto s : kChannelSuffix) c.push_back(fmt::format("ber_{}", s));
        c.push_back("slack_illuminance");
        for (auto s : kChannelSuffix) c.push_back(fmt::format("slack_ber_{}", s));
        c.push_back("slack_cct");
        for (const char* k : {"baseline_ee_bit_per_j", "baseline_p_ill_w", "baseline_p_com_w", "ee_ratio"})
            c.push_back(k);
        return c;
    }();
    return cols;
}

std::string format_results(const ScenarioResult& r) {
    std::string out;
    const auto& cols = result_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += "\n";
    auto num = [](double v) { return csv::fmt_num(v); };
    for (const auto& row : r.rows) {
        std::vector<std::string> cells = {std::to_string(row.index), row.point, num(row.x), num(row.y),
                                          num(row.phi_req), num(row.cct_req), num(row.ber_req),
                                          num(row.f_c), std::to_string(row.qam), row.feasible ? "1" : "0", row.status,
                                          std::to_string(row.starts_converged)};
        const bool have = row.g.size() == 6 && std::isfinite(row.g(0));
        for (int i = 0; i < 4; ++i) cells.push_back(have ? num(row.config.v_bias[i]) : num(kNaN));
        for (int i = 0; i < 4; ++i) cells.push_back(have ? num(row.config.g_amp[i]) : num(kNaN));
        const auto& e = row.eval;
        for (double v : {e.report.ee, e.report.capacity_total, e.report.p_ill, e.report.p_com, e.illuminance, e.cct})
            cells.push_back(have ? num(v) : num(kNaN));
        for (int i = 0; i < 4; ++i) cells.push_back(have ? num(e.ber[i]) : num(kNaN));
        for (int i = 0; i < 6; ++i) cells.push_back(have ? num(-row.g(i)) : num(kNaN));
        if (row.has_baseline) {
            const auto& b = row.baseline_eval.report;
            cells.push_back(num(b.ee));
            cells.push_back(num(b.p_ill));
            cells.push_back(num(b.p_com));
            cells.push_back(have && row.feasible ? num(e.report.ee / b.ee) : num(kNaN));
        } else {
            for (int i = 0; i < 4; ++i) cells.push_back(num(kNaN));
        }
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
        out += "\n";
    }
    return out;
}

void write_results(const ScenarioResult& r, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write results to '" + path.string() + "'");
    out << format_results(r);
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string format_timing(const ScenarioResult& r) {
    std::string out = "index,wall_time_s\n";
    for (const auto& row : r.rows) out += fmt::format("{},{:.6f}\n", row.index, row.wall_time);
    return out;
}

// ---------------------------------------------------------------------------------------------------------------

RowCheck verify_row(const SystemModel& model, const ScenarioConfig& cfg, double x, double y, const SystemConfig& sc,
                    const ConstraintSpec& spec) {
    RowCheck chk;
    const LinkGeometry geom = geometry_at(cfg, x, y);
    chk.illuminance = received_illuminance(model.leds, geom, sc.v_bias, model.cie, model.efficacy);
    chk.cct = cct(chromaticity(rgby_spectrum(model.leds, sc.v_bias, model.cie.wavelength), model.cie));
    std::string msg;
    if (chk.illuminance < spec.phi_req * (1.0 - 1e-6))
        msg += fmt::format("illuminance {:.6f} lx below {:.6f} lx; ", chk.illuminance, spec.phi_req);
    if (chk.cct > spec.cct_req * (1.0 + 1e-6)) msg += fmt::format("CCT {:.3f} K above {:.3f} K; ", chk.cct, spec.cct_req);
    for (int i = 0; i < 4; ++i) {
        ReceiverParams rx = model.rx;
        const auto h = system_response(model.leds, rx, geom, sc.v_bias, spec.f_c[i]);
        const double snr = channel_snr(h[i], sc.g_amp[i], model.p0, model.noise);
        chk.ber[i] = ber(spec.qam[i], snr);
        if (chk.ber[i] > spec.ber_req * (1.0 + 1e-6))
            msg += fmt::format("BER {} = {:.6e} above {:.3e}; ", kChannelSuffix[i], chk.ber[i], spec.ber_req);
    }
    chk.passed = msg.empty();
    chk.message = msg;
    return chk;
}

namespace {

void check_bounds(const SystemModel& model, const SystemConfig& sc, std::string& msg) {
    for (int i = 0; i < 4; ++i) {
        if (sc.v_bias[i] < model.leds[i].v_th || sc.v_bias[i] > model.leds[i].v_max)
            msg += fmt::format("V_bias {} outside its window; ", kChannelSuffix[i]);
        if (sc.g_amp[i] < model.g_min || sc.g_amp[i] > model.g_max)
            msg += fmt::format("G_amp {} outside its window; ", kChannelSuffix[i]);
    }
}

}  // namespace

VerifyReport verify_results(const SystemModel& model, const ScenarioConfig& cfg, const ScenarioResult& r) {
    VerifyReport rep;
    for (const auto& row : r.rows) {
        ++rep.rows;
        if (!row.feasible) continue;
        ++rep.feasible;
        ConstraintSpec spec = cfg.constraints;
        spec.phi_req = row.phi_req;
        spec.cct_req = row.cct_req;
        spec.ber_req = row.ber_req;
        spec.qam.fill(row.qam);
        spec.f_c.fill(row.f_c);
        if (cfg.kind == ScenarioKind::grid) {
            spec.qam = cfg.constraints.qam;
            spec.f_c = cfg.constraints.f_c;
        }
        RowCheck chk = verify_row(model, cfg, row.x, row.y, row.config, spec);
        check_bounds(model, row.config, chk.message);
        if (!chk.message.empty()) {
            ++rep.failures;
            rep.messages.push_back(fmt::format("row {}: {}", row.index, chk.message));
        }
    }
    return rep;
}

VerifyReport verify_results(const SystemModel& model, const ScenarioConfig& cfg, const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto& cols = result_columns();
    if (t.header != cols) throw ConfigError("'" + path.string() + "' does not have the result-file header");
    auto col = [&](const std::vector<std::string>& row, const std::string& name) {
        return csv::to_double(row[t.column(name)], path.string() + ": " + name);
    };
    VerifyReport rep;
    for (const auto& row : t.rows) {
        ++rep.rows;
        if (row[t.column("feasible")] != "1") continue;
        ++rep.feasible;
        ConstraintSpec spec = cfg.constraints;
        spec.phi_req = col(row, "phi_req_lx");
        spec.cct_req = col(row, "cct_req_k");
        spec.ber_req = col(row, "ber_req");
        if (cfg.kind != ScenarioKind::grid) {
            spec.qam.fill(static_cast<int>(col(row, "qam")));
            spec.f_c.fill(col(row, "f_c_hz"));
        }
        SystemConfig sc;
        for (int i = 0; i < 4; ++i) {
            sc.v_bias[i] = col(row, fmt::format("v_bias_{}_v", kChannelSuffix[i]));
            sc.g_amp[i] = col(row, fmt::format("g_amp_{}", kChannelSuffix[i]));
        }
        RowCheck chk = verify_row(model, cfg, col(row, "x_m"), col(row, "y_m"), sc, spec);
        check_bounds(model, sc, chk.message);
        const double ee = col(row, "ee_bit_per_j");
        const double identity = col(row, "capacity_bit_per_s") / (col(row, "p_ill_w") + col(row, "p_com_w"));
        if (std::abs(ee - identity) > 1e-9 * std::abs(ee)) chk.message += "EE does not equal C / (P_ill + P_com); ";
        if (!chk.message.empty()) {
            ++rep.failures;
            rep.messages.push_back(fmt::format("row {}: {}", row[0], chk.message));
        }
    }
    return rep;
}

}  // namespace wdmvlc
