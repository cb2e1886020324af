#include "diter/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "diter/sim.hpp"

namespace diter::experiment {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, std::string_view key) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(line, "bad value '" + std::string(text) + "' for " + std::string(key));
    }
    return value;
}

std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

void ExperimentPlan::finish() {
    if (graph.empty()) throw std::invalid_argument("plan: graph is required");
    if (k.empty()) throw std::invalid_argument("plan: at least one k is required");
    if (strategies.empty()) strategies.push_back(Strategy::uniform);
    if (delay_proba.empty()) delay_proba.push_back(0.0);
    if (seeds.empty()) seeds.push_back(1);
    for (auto kk : k) {
        if (kk == 0) throw std::invalid_argument("plan: k must be >= 1");
    }
    for (double p : delay_proba) {
        if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("plan: delay_proba must lie in [0, 1)");
    }
}

ExperimentPlan parse_plan(std::istream& in) {
    ExperimentPlan plan;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = trim(raw);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ParseError(line, "expected key = value");
        const std::string key = trim(std::string_view(text).substr(0, eq));
        const std::string value = trim(std::string_view(text).substr(eq + 1));
        if (value.empty()) throw ParseError(line, "missing value for " + key);

        if (key == "graph") {
            plan.graph = value;
        } else if (key == "n") {
            plan.n.push_back(parse_number<NodeId>(value, line, key));
        } else if (key == "k") {
            plan.k.push_back(parse_number<std::size_t>(value, line, key));
        } else if (key == "strategy") {
            try {
                plan.strategies.push_back(parse_strategy(value));
            } catch (const std::invalid_argument& e) {
                throw ParseError(line, e.what());
            }
        } else if (key == "delay_proba") {
            plan.delay_proba.push_back(parse_number<double>(value, line, key));
        } else if (key == "seed") {
            plan.seeds.push_back(parse_number<std::uint64_t>(value, line, key));
        } else if (key == "output") {
            plan.output = value;
        } else if (key == "target_error") {
            if (value == "1/N") {
                plan.target_error.reset();
            } else {
                plan.target_error = parse_number<double>(value, line, key);
            }
        } else if (key == "pid_speed") {
            if (value == "AUTO") {
                plan.pid_speed.reset();
            } else {
                plan.pid_speed = parse_number<double>(value, line, key);
            }
        } else if (key == "max_steps") {
            plan.max_steps = parse_number<std::uint64_t>(value, line, key);
        } else if (key == "damping") {
            plan.solver.damping = parse_number<double>(value, line, key);
        } else if (key == "alpha") {
            plan.solver.alpha = parse_number<double>(value, line, key);
        } else if (key == "selection") {
            if (value == "weighted") {
                plan.solver.selection = Selection::weighted;
            } else if (value == "raw") {
                plan.solver.selection = Selection::raw;
            } else {
                throw ParseError(line, "selection must be weighted or raw");
            }
        } else {
            throw ParseError(line, "unknown key " + key);
        }
    }
    try {
        plan.finish();
    } catch (const std::invalid_argument& e) {
        throw ParseError(line, e.what());
    }
    return plan;
}

ExperimentPlan parse_plan_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open plan " + path.string());
    ExperimentPlan plan = parse_plan(in);
    const std::filesystem::path gp(plan.graph);
    if (gp.is_relative()) plan.graph = (path.parent_path() / gp).lexically_normal().string();
    return plan;
}

std::vector<SweepRow> run_sweep(const ExperimentPlan& plan, const Graph& g, std::size_t jobs, std::ostream* log) {
    std::vector<NodeId> sizes = plan.n.empty() ? std::vector<NodeId>{g.num_nodes()} : plan.n;
    std::vector<SweepRow> rows;
    for (NodeId n : sizes) {
        for (std::size_t k : plan.k) {
            for (Strategy s : plan.strategies) {
                for (double p : plan.delay_proba) {
                    for (std::uint64_t seed : plan.seeds) {
                        SweepRow row;
                        row.n = n;
                        row.k = k;
                        row.strategy = s;
                        row.delay_proba = p;
                        row.seed = seed;
                        rows.push_back(row);
                    }
                }
            }
        }
    }

    std::map<NodeId, Graph> prefixes;
    for (NodeId n : sizes) {
        if (n == 0 || n > g.num_nodes() || prefixes.count(n)) continue;
        prefixes.emplace(n, n == g.num_nodes() ? g : g.prefix(n));
    }

    std::mutex log_mutex;
    auto note = [&](const std::string& msg) {
        if (!log) return;
        std::lock_guard lock(log_mutex);
        *log << msg << '\n';
    };

    auto run_one = [&](SweepRow& row) {
        const std::string tag = "n=" + std::to_string(row.n) + " k=" + std::to_string(row.k) + " strategy=" +
                                to_string(row.strategy) + " delay=" + format_double(row.delay_proba) +
                                " seed=" + std::to_string(row.seed);
        const auto it = prefixes.find(row.n);
        if (it == prefixes.end()) {
            row.status = RowStatus::skipped;
            row.note = "n outside the graph";
        } else if (row.k > row.n) {
            row.status = RowStatus::skipped;
            row.note = "k exceeds n";
        } else if (row.strategy == Strategy::adaptive && row.k != 2) {
            row.status = RowStatus::skipped;
            row.note = "adaptive needs k = 2";
        }
        if (row.status == RowStatus::skipped) {
            note("skipped " + tag + ": " + row.note);
            return;
        }
        sim::SimConfig cfg;
        cfg.k = row.k;
        cfg.strategy = row.strategy;
        cfg.delay_proba = row.delay_proba;
        cfg.seed = row.seed;
        cfg.pid_speed = plan.pid_speed;
        cfg.max_steps = plan.max_steps;
        cfg.record_trace = false;
        cfg.solver = plan.solver;
        cfg.solver.target_error = plan.target_error;
        try {
            const sim::SimResult r = sim::run(it->second, cfg);
            row.cost = r.cost;
            row.idle_global = r.global_idle;
            note("done " + tag + " cost=" + format_double(r.cost));
        } catch (const std::exception& e) {
            row.status = RowStatus::failed;
            row.note = e.what();
            note("failed " + tag + ": " + row.note);
        }
    };

    jobs = std::max<std::size_t>(1, std::min(jobs, rows.size()));
    if (jobs == 1) {
        for (auto& row : rows) run_one(row);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < rows.size(); i = next++) run_one(rows[i]);
        });
    }
    for (auto& th : pool) th.join();
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "n,k,strategy,delay_proba,seed,cost,idle_global\n";
    for (const auto& r : rows) {
        out << r.n << ',' << r.k << ',' << to_string(r.strategy) << ',' << format_double(r.delay_proba) << ','
            << r.seed << ',';
        switch (r.status) {
            case RowStatus::ok: out << format_double(r.cost) << ',' << format_double(r.idle_global); break;
            case RowStatus::skipped: out << "skipped,"; break;
            case RowStatus::failed: out << "failed,"; break;
        }
        out << '\n';
    }
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
    std::vector<SweepRow> rows;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty()) continue;
        const auto cells = split_csv(raw);
        if (line == 1 && !cells.empty() && cells[0] == "n") continue;
        if (cells.size() != 7) throw ParseError(line, "expected 7 columns");
        SweepRow r;
        r.n = parse_number<NodeId>(cells[0], line, "n");
        r.k = parse_number<std::size_t>(cells[1], line, "k");
        try {
            r.strategy = parse_strategy(cells[2]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(line, e.what());
        }
        r.delay_proba = parse_number<double>(cells[3], line, "delay_proba");
        r.seed = parse_number<std::uint64_t>(cells[4], line, "seed");
        if (cells[5] == "skipped") {
            r.status = RowStatus::skipped;
        } else if (cells[5] == "failed") {
            r.status = RowStatus::failed;
        } else {
            r.cost = parse_number<double>(cells[5], line, "cost");
            r.idle_global = parse_number<double>(cells[6], line, "idle_global");
        }
        rows.push_back(r);
    }
    return rows;
}

std::vector<SpeedupRow> speedup_table(const std::vector<SweepRow>& rows) {
    using Key = std::tuple<NodeId, Strategy, double, std::uint64_t>;
    std::map<Key, double> base;
    for (const auto& r : rows) {
        if (r.status == RowStatus::ok && r.k == 1) base[{r.n, r.strategy, r.delay_proba, r.seed}] = r.cost;
    }
    std::vector<SpeedupRow> out;
    for (const auto& r : rows) {
        if (r.status != RowStatus::ok) continue;
        const auto it = base.find({r.n, r.strategy, r.delay_proba, r.seed});
        if (it == base.end() || r.cost <= 0.0) continue;
        out.push_back({r.n, r.k, r.strategy, r.delay_proba, r.seed, r.cost, it->second / r.cost});
    }
    return out;
}

void write_speedup_csv(std::ostream& out, const std::vector<SpeedupRow>& rows) {
    out << "n,k,strategy,delay_proba,seed,cost,speedup\n";
    for (const auto& r : rows) {
        out << r.n << ',' << r.k << ',' << to_string(r.strategy) << ',' << format_double(r.delay_proba) << ','
            << r.seed << ',' << format_double(r.cost) << ',' << format_double(r.speedup) << '\n';
    }
}

double gain_percent(double cost_uniform, double cost_cb) {
    if (!(cost_cb > 0.0)) throw std::invalid_argument("gain_percent: cb cost must be > 0");
    return 100.0 * (cost_uniform / cost_cb - 1.0);
}

std::vector<GainRow> gain_table(const std::vector<SweepRow>& rows, std::ostream* log) {
    using Key = std::tuple<NodeId, std::size_t, double, std::uint64_t>;
    std::map<Key, double> cb;
    std::map<Key, bool> cb_used;
    for (const auto& r : rows) {
        if (r.status == RowStatus::ok && r.strategy == Strategy::cost_balanced) cb[{r.n, r.k, r.delay_proba, r.seed}] = r.cost;
    }
    std::vector<GainRow> out;
    for (const auto& r : rows) {
        if (r.status != RowStatus::ok || r.strategy != Strategy::uniform) continue;
        const Key key{r.n, r.k, r.delay_proba, r.seed};
        const auto it = cb.find(key);
        if (it == cb.end()) {
            if (log) {
                *log << "gain: no cb row for n=" << r.n << " k=" << r.k << " delay=" << format_double(r.delay_proba)
                     << " seed=" << r.seed << '\n';
            }
            continue;
        }
        cb_used[key] = true;
        out.push_back({r.n, r.k, r.delay_proba, r.seed, r.cost, it->second, gain_percent(r.cost, it->second)});
    }
    if (log) {
        for (const auto& [key, cost] : cb) {
            if (cb_used.count(key)) continue;
            *log << "gain: no uniform row for n=" << std::get<0>(key) << " k=" << std::get<1>(key)
                 << " delay=" << format_double(std::get<2>(key)) << " seed=" << std::get<3>(key) << '\n';
        }
    }
    return out;
}

void write_gain_csv(std::ostream& out, const std::vector<GainRow>& rows) {
    out << "n,k,delay_proba,seed,cost_uniform,cost_cb,gain_pct\n";
    for (const auto& r : rows) {
        out << r.n << ',' << r.k << ',' << format_double(r.delay_proba) << ',' << r.seed << ','
            << format_double(r.cost_uniform) << ',' << format_double(r.cost_cb) << ',' << format_double(r.gain_pct)
            << '\n';
    }
}

}  // namespace diter::experiment
