#pragma once

#include <optional>
#include <string>
#include <utility>

#include "fedspectra/data_synth.hpp"
#include "fedspectra/nn.hpp"

namespace fedspectra {

enum class CtoPhase { Retrieve, Reciprocate, Refine };

const char* to_string(CtoPhase phase);

struct CtoOptions {
    double lambda1 = 0.6;
    double lambda2 = 0.8;
    /// Deputy keeps plain cross-entropy training while it teaches in Refine.
    bool refine_trains_deputy = true;
    LrSchedule lr;
    /// Proximal pull of the deputy toward the last received parameters.
    double fedprox_mu = 0.0;

    void validate() const;
};

struct BatchLosses {
    double personalized = 0.0;
    double deputy = 0.0;
};

/// Per-client pair of models: the personalised model q, which the server never
/// writes, and the deputy c, which receives aggregates and mediates transfer.
///
/// Retrieve:    q <- CE;              c <- CE + KL(q || c)
/// Reciprocate: q <- CE + KL(c || q); c <- CE + KL(q || c)
/// Refine:      q <- CE + KL(c || q); c <- CE (optional)
///
/// Teachers are inference-mode posteriors taken before either update on the batch.
class ClientState {
public:
    ClientState(int client_id, Network personalized, Network deputy, CtoOptions options);

    int client_id() const noexcept { return client_id_; }
    CtoPhase phase() const noexcept { return phase_; }
    const CtoOptions& options() const noexcept { return options_; }
    Network& personalized() noexcept { return personalized_; }
    Network& deputy() noexcept { return deputy_; }
    const Network& personalized() const noexcept { return personalized_; }
    const Network& deputy() const noexcept { return deputy_; }

    /// Replaces the deputy's parameters and restarts the phase cycle.
    void on_receive(const ParameterSet& aggregated);

    /// One SGD step on the batch for whichever models the current phase trains.
    BatchLosses train_batch(const Tensor& batch, std::span<const int> labels, int epoch);

    /// Advances at most one phase when the guard for the current phase holds.
    CtoPhase maybe_advance(double phi_c, double phi_q);

    /// Macro-F1 of (deputy, personalized) on a split. Validation calls also track the
    /// best personalised state seen so far.
    std::pair<double, double> evaluate(const DataSplit& split, bool is_validation);

    const std::optional<ParameterSet>& best_personalized() const noexcept { return best_state_; }
    double best_validation_f1() const noexcept { return best_f1_; }
    const std::optional<ParameterSet>& proximal_anchor() const noexcept { return anchor_; }

private:
    int client_id_;
    Network personalized_;
    Network deputy_;
    CtoOptions options_;
    CtoPhase phase_ = CtoPhase::Retrieve;
    std::optional<ParameterSet> anchor_;
    std::optional<ParameterSet> best_state_;
    double best_f1_ = -1.0;
};

}  // namespace fedspectra
