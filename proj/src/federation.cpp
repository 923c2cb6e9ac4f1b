#include "fedspectra/federation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fedspectra/checkpoint.hpp"
#include "fedspectra/errors.hpp"
#include "fedspectra/parallel.hpp"

namespace fedspectra {

const char* to_string(Aggregator a) { return a == Aggregator::FedAvg ? "fedavg" : "cfa"; }

Aggregator aggregator_from_string(const std::string& s) {
    if (s == "fedavg") return Aggregator::FedAvg;
    if (s == "cfa") return Aggregator::Cfa;
    throw ConfigError("aggregator must be 'fedavg' or 'cfa', got '" + s + "'");
}

const char* to_string(CheckpointPolicy p) {
    switch (p) {
        case CheckpointPolicy::All: return "all";
        case CheckpointPolicy::Final: return "final";
        case CheckpointPolicy::None: return "none";
    }
    return "?";
}

CheckpointPolicy checkpoint_policy_from_string(const std::string& s) {
    if (s == "all") return CheckpointPolicy::All;
    if (s == "final") return CheckpointPolicy::Final;
    if (s == "none") return CheckpointPolicy::None;
    throw ConfigError("checkpoints must be 'all', 'final' or 'none', got '" + s + "'");
}

void FederationConfig::validate() const {
    if (num_clients < 1) throw ConfigError("num_clients must be >= 1");
    if (comm_interval < 1) throw ConfigError("comm_interval must be >= 1");
    if (total_epochs < comm_interval) throw ConfigError("total_epochs must be >= comm_interval");
    if (total_epochs % comm_interval != 0) throw ConfigError("comm_interval must divide total_epochs");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (classes < 2) throw ConfigError("classes must be >= 2");
    if (arch.empty()) throw ConfigError("arch must not be empty");
    schedule().validate();
    CtoOptions{lambda1, lambda2, refine_trains_deputy, lr, fedprox_mu}.validate();
}

std::vector<MetricsRecord> RunResult::all_records() const {
    std::vector<MetricsRecord> out;
    for (const auto& r : rounds) out.insert(out.end(), r.records.begin(), r.records.end());
    return out;
}

const char* primary_model_name(const FederationConfig& cfg) { return cfg.cto_enabled ? "personalized" : "local"; }

ParameterSet fedavg_aggregate(std::span<const ParameterSet> sets, std::span<const double> weights) {
    if (sets.empty()) throw DomainError("fedavg_aggregate: no parameter sets");
    if (weights.size() != sets.size()) throw DomainError("fedavg_aggregate: one weight per client required");
    for (const auto& s : sets) require_congruent(sets.front(), s);
    ParameterSet out;
    std::vector<Tensor> column(sets.size());
    for (std::size_t e = 0; e < sets.front().size(); ++e) {
        for (std::size_t k = 0; k < sets.size(); ++k) column[k] = sets[k][e].tensor;
        const auto& proto = sets.front()[e];
        out.add(proto.name, weighted_mean(column, weights), proto.kind, proto.is_batchnorm);
    }
    return out;
}

std::pair<ParameterSet, ParameterSet> fedbn_filter(const ParameterSet& set) {
    std::pair<ParameterSet, ParameterSet> out;
    for (const auto& e : set) (e.is_batchnorm ? out.second : out.first).add(e);
    return out;
}

ParameterSet fedbn_merge(const ParameterSet& shared, const ParameterSet& original) {
    ParameterSet out;
    for (const auto& e : original) {
        if (e.is_batchnorm) {
            out.add(e);
            continue;
        }
        const ParamEntry* s = shared.find(e.name);
        if (s == nullptr) throw CongruenceError("fedbn_merge: shared set lacks '" + e.name + "'");
        out.add(*s);
    }
    return out;
}

std::vector<ParameterSet> aggregate_round(const FederationConfig& cfg, std::span<const ParameterSet> uploads,
                                          std::span<const double> weights, double threshold, bool parallel) {
    std::vector<ParameterSet> shared;
    shared.reserve(uploads.size());
    for (const auto& u : uploads) shared.push_back(cfg.fedbn_exclude_bn ? fedbn_filter(u).first : u);
    if (shared.front().empty()) return {uploads.begin(), uploads.end()};

    std::vector<ParameterSet> merged;
    if (cfg.aggregator == Aggregator::FedAvg) {
        merged.assign(uploads.size(), fedavg_aggregate(shared, weights));
    } else {
        const double s = mask_threshold(threshold);
        merged = cfa_aggregate_with_mask(
            shared, [s](std::size_t r, std::size_t c) { return build_mask(r, c, s); }, cfg.domain_mode, parallel);
    }
    if (!cfg.fedbn_exclude_bn) return merged;
    for (std::size_t k = 0; k < uploads.size(); ++k) merged[k] = fedbn_merge(merged[k], uploads[k]);
    return merged;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t samples, std::size_t batch_size, Rng& rng) {
    if (batch_size == 0) throw DomainError("epoch_batches: zero batch size");
    std::vector<std::size_t> order(samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < samples; start += batch_size) {
        const std::size_t end = std::min(samples, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

namespace {

using json = nlohmann::ordered_json;

struct ClientRuntime {
    const ClientPartition* data = nullptr;
    Rng rng{0};
    std::optional<ClientState> cto;
    std::optional<Network> local;
    std::optional<ParameterSet> anchor;
    std::vector<std::string> events;
    std::uint64_t steps = 0;
};

Tensor training_batch(const DataSplit& split, const std::vector<std::size_t>& idx, bool augment_images, Rng& rng) {
    if (!augment_images) return split.batch(idx);
    DataSplit tmp;
    tmp.images.reserve(idx.size());
    for (auto i : idx) tmp.images.push_back(augment(split.images[i], rng));
    std::vector<std::size_t> all(idx.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return tmp.batch(all);
}

void local_epoch(ClientRuntime& client, const FederationConfig& cfg, int epoch) {
    const DataSplit& train = client.data->train;
    const auto batches = epoch_batches(train.size(), static_cast<std::size_t>(cfg.batch_size), client.rng);
    std::vector<int> labels;
    for (const auto& idx : batches) {
        const Tensor batch = training_batch(train, idx, cfg.augment, client.rng);
        labels.clear();
        for (auto i : idx) labels.push_back(train.labels[i]);
        if (client.cto) {
            client.cto->train_batch(batch, labels, epoch);
        } else {
            auto g = client.local->backward(batch, labels, LossSpec::ce());
            const ProximalTerm prox{cfg.fedprox_mu, client.anchor ? &*client.anchor : nullptr};
            sgd_step(*client.local, g.grads, epoch, cfg.lr, client.anchor ? prox : ProximalTerm{});
        }
        ++client.steps;
    }
    if (client.cto) {
        auto& state = *client.cto;
        const CtoPhase from = state.phase();
        const auto [phi_c, phi_q] = state.evaluate(client.data->val, true);
        const CtoPhase to = state.maybe_advance(phi_c, phi_q);
        json ev;
        ev["event"] = "guard";
        ev["epoch"] = epoch;
        ev["client_id"] = client.data->client_id;
        ev["phase_from"] = to_string(from);
        ev["phase_to"] = to_string(to);
        ev["phi_c"] = phi_c;
        ev["phi_q"] = phi_q;
        client.events.push_back(ev.dump());
    }
}

std::vector<MetricsRecord> evaluate_client(ClientRuntime& client, int round, int epoch) {
    std::vector<std::pair<const char*, Network*>> models;
    if (client.cto) {
        models = {{"personalized", &client.cto->personalized()}, {"deputy", &client.cto->deputy()}};
    } else {
        models = {{"local", &*client.local}};
    }
    const std::pair<const char*, const DataSplit*> splits[] = {{"val", &client.data->val},
                                                                {"test", &client.data->test}};
    std::vector<MetricsRecord> rows;
    for (const auto& [model_name, net] : models) {
        for (const auto& [split_name, split] : splits) {
            if (split->empty()) continue;
            rows.push_back({round, epoch, client.data->client_id, model_name, split_name, evaluate_model(*net, *split)});
        }
    }
    return rows;
}

void write_checkpoints(const std::filesystem::path& root, int round, const ClientRuntime& client) {
    const auto dir = root / ("round_" + std::to_string(round)) / ("client_" + std::to_string(client.data->client_id));
    if (client.cto) {
        save_checkpoint(dir / "personalized", client.cto->personalized().state());
        save_checkpoint(dir / "deputy", client.cto->deputy().state());
    } else {
        save_checkpoint(dir / "local", client.local->state());
    }
}

}  // namespace

RunResult run_experiment(const FederationConfig& cfg, const std::vector<ClientPartition>& data,
                         const RunOptions& options) {
    cfg.validate();
    if (data.size() != static_cast<std::size_t>(cfg.num_clients)) {
        throw ConfigError("expected " + std::to_string(cfg.num_clients) + " client partitions, got " +
                          std::to_string(data.size()));
    }
    for (const auto& part : data) {
        if (part.train.empty()) throw ConfigError("client " + std::to_string(part.client_id) + " has no training data");
        if (cfg.cto_enabled && part.val.empty()) {
            throw ConfigError("client " + std::to_string(part.client_id) + " needs a validation split for CTO");
        }
        for (const DataSplit* s : {&part.train, &part.val, &part.test}) {
            for (int l : s->labels) {
                if (l < 0 || static_cast<std::size_t>(l) >= cfg.classes) {
                    throw ConfigError("client " + std::to_string(part.client_id) + " has label " + std::to_string(l) +
                                      " outside [0, classes)");
                }
            }
        }
    }
    const Shape input_shape = data.front().train.images.front().shape();

    // Every model starts from the same server-side initialisation.
    const Network initial(input_shape, cfg.classes, cfg.arch, mix_seed(cfg.seed, 0xA11CE));
    const ParameterSet initial_params = initial.parameters();
    const CtoOptions cto_options{cfg.lambda1, cfg.lambda2, cfg.refine_trains_deputy, cfg.lr, cfg.fedprox_mu};

    std::vector<ClientRuntime> clients(data.size());
    std::vector<double> weights(data.size());
    for (std::size_t k = 0; k < data.size(); ++k) {
        auto& c = clients[k];
        c.data = &data[k];
        c.rng = Rng(mix_seed(cfg.seed, 1000 + k));
        if (cfg.cto_enabled) {
            c.cto.emplace(data[k].client_id, initial, initial, cto_options);
            if (cfg.fedprox_mu > 0.0) c.cto->on_receive(initial_params);
        } else {
            c.local.emplace(initial);
            if (cfg.fedprox_mu > 0.0) c.anchor = initial_params;
        }
        weights[k] = static_cast<double>(data[k].train.size());
    }

    RunResult result;
    const int threads = std::max(1, options.threads);
    const CfaSchedule schedule = cfg.schedule();

    for (int round = 1; round <= cfg.rounds(); ++round) {
        const int first_epoch = (round - 1) * cfg.comm_interval;
        parallel_for(clients.size(), threads, [&](std::size_t k) {
            for (int e = 0; e < cfg.comm_interval; ++e) local_epoch(clients[k], cfg, first_epoch + e);
        });
        for (auto& c : clients) {
            result.events.insert(result.events.end(), c.events.begin(), c.events.end());
            c.events.clear();
        }

        // Barrier: every upload of this round is in hand.
        const int epoch = round * cfg.comm_interval;
        std::vector<ParameterSet> uploads;
        uploads.reserve(clients.size());
        for (auto& c : clients) uploads.push_back(c.cto ? c.cto->deputy().parameters() : c.local->parameters());
        const double threshold = schedule_threshold(schedule, epoch);
        const auto t0 = std::chrono::steady_clock::now();
        const auto aggregated = aggregate_round(cfg, uploads, weights, threshold, threads > 1);
        const auto t1 = std::chrono::steady_clock::now();

        for (std::size_t k = 0; k < clients.size(); ++k) {
            auto& c = clients[k];
            if (c.cto) {
                if (options.hooks.before_receive) options.hooks.before_receive(round, c.data->client_id, *c.cto);
                c.cto->on_receive(aggregated[k]);
                if (options.hooks.after_receive) options.hooks.after_receive(round, c.data->client_id, *c.cto);
            } else {
                c.local->set_parameters(aggregated[k]);
                if (cfg.fedprox_mu > 0.0) c.anchor = aggregated[k];
            }
        }

        json ev;
        ev["event"] = "aggregate";
        ev["round"] = round;
        ev["epoch"] = epoch;
        ev["aggregator"] = to_string(cfg.aggregator);
        if (cfg.aggregator == Aggregator::Cfa) ev["s"] = threshold;
        ev["clients"] = cfg.num_clients;
        result.events.push_back(ev.dump());

        RoundReport report;
        report.round = round;
        report.aggregation_seconds = std::chrono::duration<double>(t1 - t0).count();
        if (cfg.aggregator == Aggregator::Cfa) report.threshold = threshold;
        std::vector<std::vector<MetricsRecord>> rows(clients.size());
        parallel_for(clients.size(), threads, [&](std::size_t k) { rows[k] = evaluate_client(clients[k], round, epoch); });
        for (auto& r : rows) report.records.insert(report.records.end(), r.begin(), r.end());
        result.rounds.push_back(std::move(report));

        const bool save = options.checkpoint_dir &&
                          (options.checkpoints == CheckpointPolicy::All ||
                           (options.checkpoints == CheckpointPolicy::Final && round == cfg.rounds()));
        if (save) {
            for (const auto& c : clients) write_checkpoints(*options.checkpoint_dir, round, c);
        }
    }

    for (const auto& c : clients) {
        if (c.cto) {
            result.final_primary.push_back(c.cto->personalized().state());
            result.final_deputy.push_back(c.cto->deputy().state());
        } else {
            result.final_primary.push_back(c.local->state());
        }
        result.gradient_steps.push_back(c.steps);
    }
    return result;
}

}  // namespace fedspectra
