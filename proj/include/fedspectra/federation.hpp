#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedspectra/cto.hpp"
#include "fedspectra/data_synth.hpp"
#include "fedspectra/evaluation.hpp"
#include "fedspectra/nn.hpp"
#include "fedspectra/spectral.hpp"

namespace fedspectra {

enum class Aggregator { FedAvg, Cfa };

const char* to_string(Aggregator a);
Aggregator aggregator_from_string(const std::string& s);

enum class CheckpointPolicy { All, Final, None };

const char* to_string(CheckpointPolicy p);
CheckpointPolicy checkpoint_policy_from_string(const std::string& s);

struct FederationConfig {
    int num_clients = 4;
    int comm_interval = 10;   // local epochs between aggregations
    int total_epochs = 300;
    Aggregator aggregator = Aggregator::Cfa;
    double s0 = 0.26;
    double s1 = 0.55;
    double lambda1 = 0.6;
    double lambda2 = 0.8;
    int batch_size = 20;
    LrSchedule lr;
    double fedprox_mu = 0.0;
    bool fedbn_exclude_bn = false;
    bool cto_enabled = true;
    bool refine_trains_deputy = true;
    bool augment = true;
    DomainMode domain_mode = DomainMode::Complex;
    std::string arch = "smallcnn";
    std::size_t classes = 3;
    std::uint64_t seed = 1;

    /// Throws ConfigError on any violated invariant.
    void validate() const;
    CfaSchedule schedule() const { return {s0, s1, total_epochs}; }
    int rounds() const { return total_epochs / comm_interval; }
};

/// One evaluation row.
struct MetricsRecord {
    int round = 0;
    int epoch = 0;
    int client_id = 0;
    std::string model;  // personalized | deputy | local
    std::string split;  // val | test
    ModelMetrics metrics;
};

struct RoundReport {
    int round = 0;
    std::vector<MetricsRecord> records;
    double aggregation_seconds = 0.0;
    /// Scheduled threshold at this aggregation (CFA only).
    std::optional<double> threshold;
};

struct RunHooks {
    /// Called at the barrier around each client's receive step, serially in client order.
    std::function<void(int round, int client, const ClientState&)> before_receive;
    std::function<void(int round, int client, const ClientState&)> after_receive;
};

struct RunOptions {
    int threads = 1;
    std::optional<std::filesystem::path> checkpoint_dir;
    CheckpointPolicy checkpoints = CheckpointPolicy::None;
    RunHooks hooks;
};

struct RunResult {
    std::vector<RoundReport> rounds;
    /// JSON lines, in emission order.
    std::vector<std::string> events;
    /// Personalised model (CTO) or the single client model (baseline), per client.
    std::vector<ParameterSet> final_primary;
    /// Deputy per client under CTO; empty otherwise.
    std::vector<ParameterSet> final_deputy;
    std::vector<std::uint64_t> gradient_steps;

    std::vector<MetricsRecord> all_records() const;
};

/// Weighted element-wise mean; weights are normalised to sum 1.
ParameterSet fedavg_aggregate(std::span<const ParameterSet> sets, std::span<const double> weights);

/// Splits a set into (non-BatchNorm entries, BatchNorm entries), keeping order.
std::pair<ParameterSet, ParameterSet> fedbn_filter(const ParameterSet& set);
/// Rebuilds a full set in `original` order: BatchNorm entries from `original`,
/// every other entry from `shared`.
ParameterSet fedbn_merge(const ParameterSet& shared, const ParameterSet& original);

/// Server step for one round: per-client parameter sets to redistribute.
std::vector<ParameterSet> aggregate_round(const FederationConfig& cfg, std::span<const ParameterSet> uploads,
                                          std::span<const double> weights, double threshold, bool parallel = true);

/// Mini-batch index lists for one epoch: shuffled, the last batch may be short.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t samples, std::size_t batch_size, Rng& rng);

/// Runs the whole protocol. Deterministic for a given config and data, independent
/// of options.threads.
RunResult run_experiment(const FederationConfig& cfg, const std::vector<ClientPartition>& data,
                         const RunOptions& options = {});

/// Model name whose test rows summarise a run: "personalized" under CTO, else "local".
const char* primary_model_name(const FederationConfig& cfg);

}  // namespace fedspectra
