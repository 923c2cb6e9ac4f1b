// Small, fast federations shared by several test files.
#pragma once

#include "fedspectra/data_synth.hpp"
#include "fedspectra/federation.hpp"

namespace toy {

inline fedspectra::SynthSpec synth(std::size_t clients, std::uint64_t seed = 1) {
    fedspectra::SynthSpec s;
    s.height = s.width = 12;
    s.num_clients = clients;
    s.count_scale = 0.03;
    s.seed = seed;
    return s;
}

inline fedspectra::FederationConfig config(int clients, int epochs = 4, int interval = 2) {
    fedspectra::FederationConfig c;
    c.num_clients = clients;
    c.total_epochs = epochs;
    c.comm_interval = interval;
    c.seed = 3;
    return c;
}

}  // namespace toy
