#include "crlbpf/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace crlbpf::experiments {

namespace {

using json = nlohmann::json;

Matrix matrix_from_json(const json& j, int rows, int cols, const std::string& name) {
    const auto flat = j.get<std::vector<double>>();
    if (static_cast<int>(flat.size()) != rows * cols)
        throw std::invalid_argument("config: field '" + name + "' must hold " +
                                    std::to_string(rows * cols) + " numbers");
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = flat[r * cols + c];
    return m;
}

ResolvedScenario scenario_from_json(const std::string& path, const ExperimentConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario config: " + path);
    json j;
    in >> j;
    const std::uint64_t master_seed =
        cfg.seed_set ? cfg.master_seed : j.value("seed", cfg.master_seed);
    const json& jm = j.at("model");
    const int dx = jm.at("dim_x").get<int>();
    const int dy = jm.at("dim_y").get<int>();
    const int dd = jm.at("dim_d").get<int>();
    const Matrix F = matrix_from_json(jm.at("F"), dx, dx, "F");
    const Matrix G = matrix_from_json(jm.at("G"), dx, dd, "G");
    const Matrix H = matrix_from_json(jm.at("H"), dy, dx, "H");
    const Matrix Q = matrix_from_json(jm.at("Q"), dx, dx, "Q");
    const Matrix R = matrix_from_json(jm.at("R"), dy, dy, "R");
    const Matrix x0m = matrix_from_json(jm.at("x0_mean"), dx, 1, "x0_mean");
    const Matrix P0 = matrix_from_json(jm.at("P0"), dx, dx, "P0");
    SystemModel model = SystemModel::constant(F, G, H, Q, R, x0m.col(0), P0);

    const json& ji = j.at("input");
    const std::string kind = ji.at("kind").get<std::string>();
    const json params = ji.value("params", json::object());
    InputSignal input = InputSignal::constant(Vector::Zero(dd));
    if (kind == "uniform") {
        input = InputSignal::uniform(dd, params.at("low").get<double>(),
                                     params.at("high").get<double>(),
                                     derive_seed(master_seed, 0x696e707574ULL));
    } else if (kind == "constant") {
        input = InputSignal::constant(
            matrix_from_json(params.at("value"), dd, 1, "input value").col(0));
    } else if (kind == "formula") {
        if (dd != 1)
            throw std::invalid_argument("config: formula input supports dim_d = 1 only");
        input = InputSignal::cosine_round(params.at("scale").get<double>(),
                                          params.at("offset").get<double>());
    } else {
        throw std::invalid_argument("config: unknown input kind '" + kind + "'");
    }

    ResolvedScenario s{std::move(model),
                       std::move(input),
                       j.value("gamma", 0.0),
                       j.value("window", 2),
                       cfg.horizon_set ? cfg.horizon : j.value("horizon", cfg.horizon),
                       master_seed};
    return s;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& dir, const std::string& name) {
        std::filesystem::create_directories(dir);
        path_ = dir + "/" + name;
        out_.open(path_, std::ios::binary | std::ios::trunc);
        if (!out_) throw std::runtime_error("cannot write " + path_);
    }
    void header(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            out_ << (i ? "," : "") << cols[i];
        out_ << '\n';
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
};

void expand_cols(std::vector<std::string>& cols, const std::string& prefix, int n) {
    for (int i = 0; i < n; ++i) cols.push_back(prefix + "_" + std::to_string(i));
}

// Runs fn(r) for r in [0, runs) on a worker pool; callers store per-run
// results by index so aggregation order never depends on scheduling.
void parallel_runs(int runs, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = std::min(threads, runs);
    if (threads <= 1) {
        for (int r = 0; r < runs; ++r) fn(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int r = next.fetch_add(1); r < runs; r = next.fetch_add(1)) fn(r);
        });
    for (auto& th : pool) th.join();
}

struct GammaSchedule {
    std::vector<StepPlan> plans;
    std::vector<Matrix> sigma_sqrt;  // per step, factored once
    std::vector<Matrix> g_pinv;      // (G^T G)^{-1} G^T per step k >= 1
};

GammaSchedule build_schedule(const SystemModel& model, const PrivacyConfig& cfg, int horizon) {
    GammaSchedule s;
    s.plans = plan_schedule(model, cfg, horizon);
    s.sigma_sqrt.reserve(s.plans.size());
    for (const auto& p : s.plans) s.sigma_sqrt.push_back(psd_sqrt(p.Sigma));
    s.g_pinv.resize(horizon + 1);
    for (int k = 1; k <= horizon; ++k) {
        const Matrix g = model.G(k - 1);
        s.g_pinv[k] = spd_solve(symmetrized(g.transpose() * g), g.transpose(), "G^T G");
    }
    return s;
}

}  // namespace

ResolvedScenario resolve_scenario(const ExperimentConfig& cfg) {
    if (cfg.scenario == "building") {
        auto [model, input] = building_occupancy_scenario();
        return {std::move(model), std::move(input), 0.5, 2, cfg.horizon, cfg.master_seed};
    }
    if (cfg.scenario == "two_dim") {
        auto [model, input] = two_dim_scenario(derive_seed(cfg.master_seed, 0x696e707574ULL));
        return {std::move(model), std::move(input), 11.0, 3, cfg.horizon, cfg.master_seed};
    }
    return scenario_from_json(cfg.scenario, cfg);
}

namespace {

PrivacyConfig privacy_config(const ExperimentConfig& cfg, const ResolvedScenario& sc,
                             double gamma, std::uint64_t seed) {
    PrivacyConfig pc;
    pc.gamma = gamma;
    pc.window = cfg.window > 0 ? cfg.window : sc.default_window;
    pc.sigma_floor = cfg.sigma_floor;
    pc.seed = seed;
    pc.oracle_check = cfg.oracle_check;
    return pc;
}

}  // namespace

void cmd_run(const ExperimentConfig& cfg) {
    const ResolvedScenario sc = resolve_scenario(cfg);
    const double gamma = cfg.gammas.empty() ? sc.default_gamma : cfg.gammas.front();
    const int dx = sc.model.dim_x, dy = sc.model.dim_y, dd = sc.model.dim_d;

    CsvWriter csv(cfg.output_dir, "run.csv");
    std::vector<std::string> cols{"run", "k"};
    expand_cols(cols, "x_true", dx);
    expand_cols(cols, "y", dy);
    expand_cols(cols, "x_umv", dx);
    expand_cols(cols, "x_priv", dx);
    expand_cols(cols, "d_true", dd);
    expand_cols(cols, "d_hat", dd);
    expand_cols(cols, "d_hat_round", dd);
    cols.push_back("trace_pcrlb");
    cols.push_back("trace_sigma");
    csv.header(cols);

    for (int r = 0; r < cfg.runs; ++r) {
        PrivacyConfig pc = privacy_config(cfg, sc, gamma, derive_seed(sc.master_seed, r));
        const PipelineRun run = run_pipeline(sc.model, sc.input, sc.horizon, pc);
        for (int k = 0; k <= sc.horizon; ++k) {
            std::vector<std::string> cells{std::to_string(r), std::to_string(k)};
            for (int i = 0; i < dx; ++i) cells.push_back(fmt(run.trajectory.states[k](i)));
            for (int i = 0; i < dy; ++i) cells.push_back(fmt(run.trajectory.measurements[k](i)));
            for (int i = 0; i < dx; ++i) cells.push_back(fmt(run.steps[k].x_hat_umv(i)));
            for (int i = 0; i < dx; ++i) cells.push_back(fmt(run.steps[k].x_hat(i)));
            Vector d_true = Vector::Zero(dd);
            Vector d_hat = Vector::Zero(dd);
            Eigen::VectorXi d_round = Eigen::VectorXi::Zero(dd);
            if (k >= 1) {
                d_true = run.trajectory.inputs[k - 1];
                const threat::InputEstimate e =
                    threat::infer_input(run.steps[k].x_hat, run.steps[k - 1].x_hat,
                                        sc.model.F(k - 1), sc.model.G(k - 1));
                d_hat = e.d_hat;
                d_round = e.d_hat_rounded;
            }
            for (int i = 0; i < dd; ++i) cells.push_back(fmt(d_true(i)));
            for (int i = 0; i < dd; ++i) cells.push_back(fmt(d_hat(i)));
            for (int i = 0; i < dd; ++i) cells.push_back(std::to_string(d_round(i)));
            cells.push_back(fmt(run.steps[k].trace_pcrlb));
            cells.push_back(fmt(run.steps[k].Sigma_k.trace()));
            csv.row(cells);
        }
    }
}

std::vector<McRow> cmd_mc(const ExperimentConfig& cfg) {
    const ResolvedScenario sc = resolve_scenario(cfg);
    std::vector<double> gammas = cfg.gammas;
    if (gammas.empty()) gammas.push_back(sc.default_gamma);
    const int dx = sc.model.dim_x;
    const int horizon = sc.horizon;

    // the input sequence is shared by every run; materialize it once
    std::vector<Vector> d_true(horizon);
    for (int k = 0; k < horizon; ++k) d_true[k] = sc.input(k);

    std::vector<McRow> rows;
    CsvWriter csv(cfg.output_dir, "mc.csv");
    csv.header({"gamma", "mse_x", "mse_d", "runs", "horizon"});
    for (const double gamma : gammas) {
        PrivacyConfig pc = privacy_config(cfg, sc, gamma, 0);
        const GammaSchedule sched = build_schedule(sc.model, pc, horizon);

        std::vector<double> sx(cfg.runs, 0.0), sd(cfg.runs, 0.0);
        parallel_runs(cfg.runs, cfg.threads, [&](int r) {
            const std::uint64_t run_seed = derive_seed(sc.master_seed, r);
            const Trajectory traj =
                simulate(sc.model, sc.input, horizon, derive_seed(run_seed, 0x73696dULL));
            Rng alpha_rng(derive_seed(run_seed, 0x616c706861ULL));
            Vector x_umv, x_pub_prev;
            double acc_x = 0.0, acc_d = 0.0;
            for (int k = 0; k <= horizon; ++k) {
                x_umv = umv_apply(sc.model, sched.plans[k], x_umv, traj.measurements[k]);
                Vector x_pub = x_umv + sched.sigma_sqrt[k] * alpha_rng.normal_vector(dx);
                if (k >= 1) {
                    acc_x += (x_pub - traj.states[k]).squaredNorm();
                    const Vector d_hat =
                        sched.g_pinv[k] * (x_pub - sc.model.F(k - 1) * x_pub_prev);
                    acc_d += (d_hat - d_true[k - 1]).squaredNorm();
                }
                x_pub_prev = std::move(x_pub);
            }
            sx[r] = acc_x;
            sd[r] = acc_d;
        });
        McRow row;
        row.gamma = gamma;
        row.runs = cfg.runs;
        row.horizon = horizon;
        double tx = 0.0, td = 0.0;
        for (int r = 0; r < cfg.runs; ++r) {
            tx += sx[r];
            td += sd[r];
        }
        row.mse_x = tx / (static_cast<double>(cfg.runs) * horizon);
        row.mse_d = td / (static_cast<double>(cfg.runs) * horizon);
        rows.push_back(row);
        csv.row({fmt(row.gamma), fmt(row.mse_x), fmt(row.mse_d), std::to_string(row.runs),
                 std::to_string(row.horizon)});
    }
    return rows;
}

double crlb_flops(int k, int dx, int dd, int ns) {
    const double km1 = k - 1, w = ns - 1;
    return std::pow(dd, 3) * std::pow(km1, 3) +
           dx * dx * dd * dd * (1.0 + w * w) * km1 * km1 +
           (std::pow(dx, 3) * dd * w * w + dx * dd) * km1 + std::pow(dx, 4) * w * w +
           3.0 * std::pow(dx, 3) * std::pow(w, 3) + 2.0 * dx * dx;
}

double pcrlb_flops(int dx, int dd, int ns) {
    const double w = ns - 1;
    return dx * dx * dd * dd * std::pow(w, 4) + std::pow(dx, 3) * dd * std::pow(w, 3) +
           std::pow(dd, 3) * std::pow(w, 3) + 3.0 * std::pow(dx, 3) * std::pow(w, 3) +
           dx * dx * dd * dd * w * w + std::pow(dx, 4) * w * w + dx * dd * w + 2.0 * dx * dx;
}

namespace {

// Stable system used for the scaling study; dimensions sized so the batch
// oracle's Fisher matrix keeps full column rank across the whole k sweep.
SystemModel bench_oracle_model(int dx) {
    Rng rng(0xbe5cULL);
    Matrix F(dx, dx);
    for (int i = 0; i < dx; ++i)
        for (int j = 0; j < dx; ++j) F(i, j) = rng.uniform(-1.0, 1.0);
    double rho = 0.0;
    for (int i = 0; i < dx; ++i) rho = std::max(rho, std::abs(F.eigenvalues()(i)));
    F *= 0.85 / rho;
    Matrix G(dx, 1);
    for (int i = 0; i < dx; ++i) G(i, 0) = rng.uniform(0.2, 1.0);
    const Matrix H = Matrix::Identity(dx, dx);
    const Matrix Q = 0.3 * Matrix::Identity(dx, dx);
    const Matrix R = 0.5 * Matrix::Identity(dx, dx);
    return SystemModel::constant(F, G, H, Q, R, Vector::Zero(dx),
                                 Matrix::Identity(dx, dx));
}

SystemModel bench_pcrlb_model() {
    Matrix F(2, 2);
    F << 0.9, 0.1, 0.0, 0.8;
    Matrix G(2, 1);
    G << 0.5, 0.5;
    return SystemModel::constant(F, G, Matrix::Identity(2, 2), 0.1 * Matrix::Identity(2, 2),
                                 0.1 * Matrix::Identity(2, 2), Vector::Zero(2),
                                 Matrix::Identity(2, 2));
}

}  // namespace

std::vector<BenchRow> cmd_bench(const ExperimentConfig& cfg) {
    using clock = std::chrono::steady_clock;
    std::vector<BenchRow> rows;

    // oracle path: batch Fisher evaluation, O(k^3)
    const int dx = 8, ns = 4;
    const SystemModel model = bench_oracle_model(dx);
    const std::vector<int> k_list{8, 12, 16, 24, 32, 48, 64};
    const int k_max = k_list.back();
    std::vector<Matrix> gains;
    Matrix s_umv;
    for (int k = 0; k <= k_max; ++k) {
        const Matrix s_pred =
            (k == 0) ? model.P0
                     : symmetrized(model.F(k - 1) * s_umv * model.F(k - 1).transpose() +
                                   model.Q(k - 1));
        gains.push_back(umv::gain(s_pred, model, k).K);
        s_umv = umv::covariance_update(s_pred, model, k);
    }
    const std::vector<Matrix> window_sigmas(
        ns, cfg.sigma_floor * Matrix::Identity(model.dim_x, model.dim_x));
    for (const int k : k_list) {
        auto time_once = [&] {
            const auto t0 = clock::now();
            volatile double sink =
                crlb::fisher_oracle(model, gains, window_sigmas, k, ns, k_max).trace();
            (void)sink;
            return std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0)
                .count();
        };
        std::vector<std::int64_t> times{time_once()};
        // ~0.2 s budget per k, at least 3 and at most 50 repetitions
        const int reps = static_cast<int>(
            std::clamp<std::int64_t>(200'000'000 / std::max<std::int64_t>(times[0], 1), 3, 50));
        for (int rep = 1; rep < reps; ++rep) times.push_back(time_once());
        std::sort(times.begin(), times.end());
        rows.push_back({k, "oracle", times[times.size() / 2], crlb_flops(k, dx, 1, ns)});
    }

    // pcrlb path: per-step cost of the windowed design, flat in k
    const SystemModel pmodel = bench_pcrlb_model();
    PrivacyConfig pc;
    pc.gamma = 1.0;
    pc.window = 3;
    pc.sigma_floor = cfg.sigma_floor;
    Planner planner(pmodel, pc);
    const int k_top = 1050;
    std::vector<std::int64_t> step_ns(k_top + 1);
    for (int k = 0; k <= k_top; ++k) {
        const auto t0 = clock::now();
        planner.advance();
        step_ns[k] =
            std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count();
    }
    for (const int k : {50, 100, 200, 400, 700, 1000}) {
        std::vector<std::int64_t> window(step_ns.begin() + k - 25, step_ns.begin() + k + 25);
        std::sort(window.begin(), window.end());
        rows.push_back({k, "pcrlb", window[window.size() / 2],
                        pcrlb_flops(pmodel.dim_x, pmodel.dim_d, pc.window)});
    }

    CsvWriter csv(cfg.output_dir, "bench.csv");
    csv.header({"k", "path", "wall_ns", "flop_est"});
    for (const auto& r : rows)
        csv.row({std::to_string(r.k), r.path, std::to_string(r.wall_ns), fmt(r.flop_est)});
    return rows;
}

std::vector<DpRow> cmd_dp_curve(const ExperimentConfig& cfg) {
    const ResolvedScenario sc = resolve_scenario(cfg);
    std::vector<double> gammas = cfg.gammas;
    if (gammas.empty()) gammas = {9, 10, 11, 12, 13};
    if (cfg.epsilon_grid.empty())
        throw std::invalid_argument("cmd_dp_curve: epsilon grid must be nonempty");

    std::vector<DpRow> rows;
    CsvWriter csv(cfg.output_dir, "dp.csv");
    csv.header({"gamma", "epsilon", "delta", "sensitivity"});
    for (const double gamma : gammas) {
        PrivacyConfig pc = privacy_config(cfg, sc, gamma, 0);
        const std::vector<StepPlan> plans = plan_schedule(sc.model, pc, sc.horizon);
        const StepPlan& last = plans.back();
        const Matrix p_hat = last.S_umv + last.Sigma;
        const double dq = threat::sensitivity(last.K, sc.model.H(last.k),
                                              sc.model.G(last.k - 1), p_hat, 1.0);
        for (const double eps : cfg.epsilon_grid) {
            const threat::DpReport rep = threat::dp_delta(eps, dq);
            rows.push_back({gamma, eps, rep.delta, dq});
            csv.row({fmt(gamma), fmt(eps), fmt(rep.delta), fmt(dq)});
        }
    }
    return rows;
}

}  // namespace crlbpf::experiments
