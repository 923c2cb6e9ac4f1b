#include "fedspectra/cto.hpp"

#include "fedspectra/errors.hpp"
#include "fedspectra/evaluation.hpp"

namespace fedspectra {

const char* to_string(CtoPhase phase) {
    switch (phase) {
        case CtoPhase::Retrieve: return "retrieve";
        case CtoPhase::Reciprocate: return "reciprocate";
        case CtoPhase::Refine: return "refine";
    }
    return "?";
}

void CtoOptions::validate() const {
    if (!(lambda1 >= 0.0 && lambda1 <= lambda2 && lambda2 <= 1.0)) {
        throw ConfigError("CTO thresholds must satisfy 0 <= lambda1 <= lambda2 <= 1");
    }
    if (!(fedprox_mu >= 0.0)) throw ConfigError("fedprox_mu must be non-negative");
    lr.validate();
}

ClientState::ClientState(int client_id, Network personalized, Network deputy, CtoOptions options)
    : client_id_(client_id), personalized_(std::move(personalized)), deputy_(std::move(deputy)),
      options_(options) {
    options_.validate();
    require_congruent(personalized_.parameters(), deputy_.parameters());
}

void ClientState::on_receive(const ParameterSet& aggregated) {
    deputy_.set_parameters(aggregated);
    if (options_.fedprox_mu > 0.0) anchor_ = aggregated;
    phase_ = CtoPhase::Retrieve;
}

BatchLosses ClientState::train_batch(const Tensor& batch, std::span<const int> labels, int epoch) {
    const ProximalTerm prox{options_.fedprox_mu, anchor_ ? &*anchor_ : nullptr};
    const ProximalTerm deputy_prox = anchor_ ? prox : ProximalTerm{};
    BatchLosses losses;
    switch (phase_) {
        case CtoPhase::Retrieve: {
            const Tensor teacher_q = personalized_.forward(batch);
            auto q = personalized_.backward(batch, labels, LossSpec::ce());
            auto c = deputy_.backward(batch, labels, LossSpec::ce_plus_kl(teacher_q));
            sgd_step(personalized_, q.grads, epoch, options_.lr);
            sgd_step(deputy_, c.grads, epoch, options_.lr, deputy_prox);
            losses = {q.loss, c.loss};
            break;
        }
        case CtoPhase::Reciprocate: {
            const Tensor teacher_q = personalized_.forward(batch);
            const Tensor teacher_c = deputy_.forward(batch);
            auto q = personalized_.backward(batch, labels, LossSpec::ce_plus_kl(teacher_c));
            auto c = deputy_.backward(batch, labels, LossSpec::ce_plus_kl(teacher_q));
            sgd_step(personalized_, q.grads, epoch, options_.lr);
            sgd_step(deputy_, c.grads, epoch, options_.lr, deputy_prox);
            losses = {q.loss, c.loss};
            break;
        }
        case CtoPhase::Refine: {
            const Tensor teacher_c = deputy_.forward(batch);
            auto q = personalized_.backward(batch, labels, LossSpec::ce_plus_kl(teacher_c));
            sgd_step(personalized_, q.grads, epoch, options_.lr);
            losses.personalized = q.loss;
            if (options_.refine_trains_deputy) {
                auto c = deputy_.backward(batch, labels, LossSpec::ce());
                sgd_step(deputy_, c.grads, epoch, options_.lr, deputy_prox);
                losses.deputy = c.loss;
            } else {
                losses.deputy = cross_entropy(teacher_c, labels);
            }
            break;
        }
    }
    return losses;
}

CtoPhase ClientState::maybe_advance(double phi_c, double phi_q) {
    switch (phase_) {
        case CtoPhase::Retrieve:
            if (phi_c >= options_.lambda1 * phi_q) phase_ = CtoPhase::Reciprocate;
            break;
        case CtoPhase::Reciprocate:
            if (phi_c >= options_.lambda2 * phi_q) phase_ = CtoPhase::Refine;
            break;
        case CtoPhase::Refine:
            break;
    }
    return phase_;
}

std::pair<double, double> ClientState::evaluate(const DataSplit& split, bool is_validation) {
    const double phi_c = evaluate_model(deputy_, split).macro_f1;
    const double phi_q = evaluate_model(personalized_, split).macro_f1;
    if (is_validation && phi_q > best_f1_) {
        best_f1_ = phi_q;
        best_state_ = personalized_.state();
    }
    return {phi_c, phi_q};
}

}  // namespace fedspectra
