#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "diter/graph.hpp"
#include "diter/partition.hpp"
#include "diter/solver.hpp"

namespace diter::experiment {

/// Sweep description. Text form: one `key = value` per line, `#` comments,
/// list keys repeatable (n, k, strategy, delay_proba, seed).
struct ExperimentPlan {
    std::string graph;
    /// Prefix truncations; empty means the whole graph.
    std::vector<NodeId> n;
    std::vector<std::size_t> k;
    std::vector<Strategy> strategies;
    std::vector<double> delay_proba;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path output = ".";
    /// Unset means 1/N per truncation.
    std::optional<double> target_error;
    std::optional<double> pid_speed;
    std::uint64_t max_steps = 1'000'000;
    SolverConfig solver;

    /// Fills list defaults (uniform, delay 0, seed 1) and checks the rest.
    void finish();
};

ExperimentPlan parse_plan(std::istream& in);
/// As parse_plan; a relative graph path resolves against the plan's directory.
ExperimentPlan parse_plan_file(const std::filesystem::path& path);

enum class RowStatus { ok, skipped, failed };

struct SweepRow {
    NodeId n = 0;
    std::size_t k = 0;
    Strategy strategy = Strategy::uniform;
    double delay_proba = 0.0;
    std::uint64_t seed = 0;
    RowStatus status = RowStatus::ok;
    double cost = 0.0;
    double idle_global = 0.0;
    std::string note;
};

/// One simulation per (n, k, strategy, delay_proba, seed), in that nesting
/// order. Combinations with K > N are skipped; failures are recorded and
/// the sweep goes on. Up to jobs combinations run concurrently; rows keep
/// plan order. Progress and skip reasons go to log when given.
std::vector<SweepRow> run_sweep(const ExperimentPlan& plan, const Graph& g, std::size_t jobs = 1,
                                std::ostream* log = nullptr);

/// Columns n,k,strategy,delay_proba,seed,cost,idle_global. Skipped and
/// failed rows carry `skipped` or `failed` in the cost column.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
/// Inverse of write_sweep_csv. Throws ParseError.
std::vector<SweepRow> read_sweep_csv(std::istream& in);

struct SpeedupRow {
    NodeId n = 0;
    std::size_t k = 0;
    Strategy strategy = Strategy::uniform;
    double delay_proba = 0.0;
    std::uint64_t seed = 0;
    double cost = 0.0;
    double speedup = 0.0;
};

/// cost(K = 1) / cost(K) against the K = 1 row of the same n, strategy,
/// delay and seed. Rows without a K = 1 counterpart are left out.
std::vector<SpeedupRow> speedup_table(const std::vector<SweepRow>& rows);
void write_speedup_csv(std::ostream& out, const std::vector<SpeedupRow>& rows);

struct GainRow {
    NodeId n = 0;
    std::size_t k = 0;
    double delay_proba = 0.0;
    std::uint64_t seed = 0;
    double cost_uniform = 0.0;
    double cost_cb = 0.0;
    double gain_pct = 0.0;
};

/// 100 (cost_uniform / cost_cb - 1).
double gain_percent(double cost_uniform, double cost_cb);

/// Pairs uniform and cb rows on (n, k, delay_proba, seed). Unmatched rows
/// are omitted and reported to log.
std::vector<GainRow> gain_table(const std::vector<SweepRow>& rows, std::ostream* log = nullptr);
void write_gain_csv(std::ostream& out, const std::vector<GainRow>& rows);

}  // namespace diter::experiment
