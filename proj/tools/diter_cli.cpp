#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "diter/experiment.hpp"
#include "diter/generate.hpp"
#include "diter/graph.hpp"
#include "diter/oracle.hpp"
#include "diter/partition.hpp"
#include "diter/sim.hpp"
#include "diter/solver.hpp"

using namespace diter;

namespace {

constexpr int exit_max_steps = 2;

struct GraphArgs {
    std::string path;
    std::optional<NodeId> max_node;
};

void add_graph_options(CLI::App* cmd, GraphArgs& args) {
    cmd->add_option("--graph", args.path, "Edge list, plain or gzip")->required()->check(CLI::ExistingFile);
    cmd->add_option("--max-node", args.max_node, "Keep the subgraph induced by the first N nodes");
}

Graph load(const GraphArgs& args) { return load_edge_list_file(args.path, args.max_node); }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    return out;
}

std::optional<double> parse_target(const std::string& text) {
    if (text.empty() || text == "1/N") return std::nullopt;
    return std::stod(text);
}

void write_scores(std::ostream& out, const std::vector<double>& h) {
    out << "node,score\n";
    for (std::size_t i = 0; i < h.size(); ++i) out << i << ',' << h[i] << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"D-iteration solver and distributed-computation simulator"};
    app.require_subcommand(1);
    std::cout.precision(10);

    // graph stats
    GraphArgs stats_graph;
    auto* graph_cmd = app.add_subcommand("graph", "Graph utilities");
    graph_cmd->require_subcommand(1);
    auto* stats_cmd = graph_cmd->add_subcommand("stats", "Print n,edges,avg_degree,dangling,dangling_pct");
    add_graph_options(stats_cmd, stats_graph);
    stats_cmd->callback([&] {
        const GraphStats s = stats(load(stats_graph));
        std::cout << "n,edges,avg_degree,dangling,dangling_pct\n"
                  << s.n << ',' << s.edge_count << ',' << s.avg_degree << ',' << s.dangling_count << ','
                  << 100.0 * s.dangling_fraction << '\n';
    });

    // partition
    GraphArgs part_graph;
    std::string part_strategy = "uniform";
    std::size_t part_k = 2;
    auto* part_cmd = app.add_subcommand("partition", "Print the intervals of a K-way partition");
    add_graph_options(part_cmd, part_graph);
    part_cmd->add_option("--strategy", part_strategy, "uniform or cb")->check(CLI::IsMember({"uniform", "cb"}));
    part_cmd->add_option("--k", part_k, "Number of parts")->check(CLI::PositiveNumber);
    part_cmd->callback([&] {
        const Graph g = load(part_graph);
        const Partition p = parse_strategy(part_strategy) == Strategy::cost_balanced
                                ? cost_balanced_partition(g, part_k)
                                : uniform_partition(g.num_nodes(), part_k);
        std::cout << "part,begin,end,cost\n";
        for (std::size_t k = 0; k < p.parts(); ++k) {
            const NodeRange r = p.range(k);
            std::uint64_t cost = 0;
            for (NodeId j = r.begin; j < r.end; ++j) cost += node_cost(g, j);
            std::cout << k << ',' << r.begin << ',' << r.end << ',' << cost << '\n';
        }
    });

    // solve
    GraphArgs solve_graph;
    SolverConfig solve_cfg;
    std::string solve_target;
    std::string solve_selection = "weighted";
    std::string solve_out = "scores.csv";
    auto* solve_cmd = app.add_subcommand("solve", "Single-partition D-iteration");
    add_graph_options(solve_cmd, solve_graph);
    solve_cmd->add_option("--damping", solve_cfg.damping, "Damping factor d")->capture_default_str();
    solve_cmd->add_option("--alpha", solve_cfg.alpha, "Threshold decrease factor")->capture_default_str();
    solve_cmd->add_option("--target-error", solve_target, "Target error bound, number or 1/N (default)");
    solve_cmd->add_option("--selection", solve_selection, "weighted or raw")
        ->check(CLI::IsMember({"weighted", "raw"}))
        ->capture_default_str();
    solve_cmd->add_option("--out", solve_out, "node,score CSV")->capture_default_str();
    solve_cmd->callback([&] {
        const Graph g = load(solve_graph);
        solve_cfg.target_error = parse_target(solve_target);
        solve_cfg.selection = solve_selection == "raw" ? Selection::raw : Selection::weighted;
        const SolveResult r = solve_single(g, solve_cfg);
        auto out = open_out(solve_out);
        write_scores(out, r.h);
        std::cout << "normalized_cost,ops,error_bound\n"
                  << r.normalized_cost << ',' << r.ops << ',' << r.residual / (1.0 - solve_cfg.damping) << '\n';
    });

    // oracle
    GraphArgs oracle_graph;
    double oracle_damping = 0.85;
    double oracle_tol = 1e-14;
    std::string oracle_out = "oracle.csv";
    auto* oracle_cmd = app.add_subcommand("oracle", "Reference power iteration");
    add_graph_options(oracle_cmd, oracle_graph);
    oracle_cmd->add_option("--damping", oracle_damping, "Damping factor d")->capture_default_str();
    oracle_cmd->add_option("--tol", oracle_tol, "L1 change between iterates at which to stop")->capture_default_str();
    oracle_cmd->add_option("--out", oracle_out, "node,score CSV")->capture_default_str();
    oracle_cmd->callback([&] {
        const Graph g = load(oracle_graph);
        const auto r = oracle::power_iteration(g, oracle_damping, {}, oracle_tol);
        auto out = open_out(oracle_out);
        write_scores(out, r.x);
        std::cout << "iterations\n" << r.iterations << '\n';
    });

    // sim
    GraphArgs sim_graph;
    sim::SimConfig sim_cfg;
    std::string sim_strategy = "uniform";
    std::string sim_speed = "AUTO";
    std::string sim_target;
    std::string sim_trace;
    std::string sim_scores;
    auto* sim_cmd = app.add_subcommand("sim", "Simulate K PIDs to convergence");
    add_graph_options(sim_cmd, sim_graph);
    sim_cmd->add_option("--k", sim_cfg.k, "Number of PIDs")->check(CLI::PositiveNumber)->capture_default_str();
    sim_cmd->add_option("--strategy", sim_strategy, "uniform, cb or adaptive")
        ->check(CLI::IsMember({"uniform", "cb", "adaptive"}))
        ->capture_default_str();
    sim_cmd->add_option("--delay-proba", sim_cfg.delay_proba, "Probability a transmission is deferred")
        ->check(CLI::Range(0.0, 0.999999))
        ->capture_default_str();
    sim_cmd->add_option("--pid-speed", sim_speed, "Operations per PID per step, or AUTO for L/K")->capture_default_str();
    sim_cmd->add_option("--target-error", sim_target, "Target error bound, number or 1/N (default)");
    sim_cmd->add_option("--seed", sim_cfg.seed, "RNG seed")->capture_default_str();
    sim_cmd->add_option("--max-steps", sim_cfg.max_steps, "Abort after this many steps")->capture_default_str();
    sim_cmd->add_option("--trace", sim_trace, "Per-step trace CSV");
    sim_cmd->add_option("--scores", sim_scores, "Final node,score CSV");
    int sim_exit = 0;
    sim_cmd->callback([&] {
        const Graph g = load(sim_graph);
        sim_cfg.strategy = parse_strategy(sim_strategy);
        if (sim_speed != "AUTO") sim_cfg.pid_speed = std::stod(sim_speed);
        sim_cfg.solver.target_error = parse_target(sim_target);
        sim_cfg.record_trace = !sim_trace.empty();
        sim::Simulator s(g, sim_cfg);
        try {
            while (!s.step()) {
            }
        } catch (const sim::MaxStepsExceeded& e) {
            std::cerr << "sim: " << e.what() << '\n';
            sim_exit = exit_max_steps;
        }
        const sim::SimResult r = s.result();
        if (!sim_trace.empty()) {
            auto out = open_out(sim_trace);
            sim::write_trace_csv(out, r);
        }
        if (!sim_scores.empty()) {
            auto out = open_out(sim_scores);
            write_scores(out, r.h);
        }
        std::cout << "converged,steps,cost,cost_ops_only,mean_pid_cost,idle_global,final_bound\n"
                  << (r.converged ? 1 : 0) << ',' << r.steps << ',' << r.cost << ',' << r.cost_ops_only << ','
                  << r.mean_pid_cost << ',' << r.global_idle << ',' << r.final_bound << '\n';
    });

    // sweep
    std::string sweep_plan;
    std::size_t sweep_jobs = 1;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment plan; writes sweep.csv, speedup.csv, gain.csv");
    sweep_cmd->add_option("--plan", sweep_plan, "Plan file (key = value lines)")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--jobs", sweep_jobs, "Combinations run concurrently")->check(CLI::PositiveNumber)->capture_default_str();
    sweep_cmd->callback([&] {
        const auto plan = experiment::parse_plan_file(sweep_plan);
        const Graph g = load_edge_list_file(plan.graph);
        const auto rows = experiment::run_sweep(plan, g, sweep_jobs, &std::cerr);
        std::filesystem::create_directories(plan.output);
        {
            auto out = open_out((plan.output / "sweep.csv").string());
            experiment::write_sweep_csv(out, rows);
        }
        {
            auto out = open_out((plan.output / "speedup.csv").string());
            experiment::write_speedup_csv(out, experiment::speedup_table(rows));
        }
        const auto gains = experiment::gain_table(rows, &std::cerr);
        if (!gains.empty()) {
            auto out = open_out((plan.output / "gain.csv").string());
            experiment::write_gain_csv(out, gains);
        }
        std::cout << "rows,output\n" << rows.size() << ',' << plan.output.string() << '\n';
    });

    // gain
    std::string gain_in;
    std::string gain_out = "gain.csv";
    auto* gain_cmd = app.add_subcommand("gain", "CB over uniform gain from a sweep.csv");
    gain_cmd->add_option("--sweep", gain_in, "sweep.csv")->required()->check(CLI::ExistingFile);
    gain_cmd->add_option("--out", gain_out, "gain CSV")->capture_default_str();
    gain_cmd->callback([&] {
        std::ifstream in(gain_in);
        const auto gains = experiment::gain_table(experiment::read_sweep_csv(in), &std::cerr);
        auto out = open_out(gain_out);
        experiment::write_gain_csv(out, gains);
        std::cout << "rows\n" << gains.size() << '\n';
    });

    // generate
    generate::WebParams gen;
    std::string gen_out = "graph.txt";
    auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic web-like edge list");
    gen_cmd->add_option("--n", gen.n, "Nodes")->capture_default_str();
    gen_cmd->add_option("--avg-degree", gen.avg_degree, "Mean out-degree over all nodes")->capture_default_str();
    gen_cmd->add_option("--dangling", gen.dangling_fraction, "Share of dangling nodes")->capture_default_str();
    gen_cmd->add_option("--locality", gen.locality, "Share of links within the local window")->capture_default_str();
    gen_cmd->add_option("--window", gen.local_window, "Local window width")->capture_default_str();
    gen_cmd->add_option("--front-share", gen.front_edge_share, "Share of links leaving the first half")
        ->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
    gen_cmd->add_option("--out", gen_out, "Edge list path")->capture_default_str();
    gen_cmd->callback([&] {
        const Graph g = generate::web_like(gen);
        auto out = open_out(gen_out);
        write_edge_list(out, g);
        const GraphStats s = stats(g);
        std::cout << "n,edges,dangling\n" << s.n << ',' << s.edge_count << ',' << s.dangling_count << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return sim_exit;
}
