#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedspectra/config.hpp"
#include "fedspectra/federation.hpp"

namespace fedspectra::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

inline constexpr const char* kMetricsHeader = "round,epoch,client_id,model,split,accuracy,macro_f1,macro_auc,loss";
inline constexpr const char* kClassMetricsHeader = "round,client_id,model,split,class,precision,recall,f1";
inline constexpr const char* kSweepHeader =
    "num_clients,method,rounds,metrics_rows,mean_accuracy,mean_macro_f1,mean_macro_auc";

struct CommonArgs {
    std::optional<std::string> config;
    std::vector<std::string> overrides;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records);
void write_class_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records);
void write_events(std::ostream& out, const std::vector<std::string>& events);

/// Config file, then --set overrides, then --seed/--out; validated.
RunConfig resolve_config(const CommonArgs& args);
std::vector<ClientPartition> load_or_generate(const RunConfig& cfg);

/// Applies a named method preset: fedavg, cfa, cto, cfa_cto, or "config" (no change).
void apply_method(RunConfig& cfg, const std::string& method);

/// Mean of the primary model's final-round test rows.
struct FinalSummary {
    int rounds = 0;
    std::size_t metrics_rows = 0;
    double mean_accuracy = 0.0;
    double mean_macro_f1 = 0.0;
    double mean_macro_auc = 0.0;
};
FinalSummary summarize(const FederationConfig& cfg, const RunResult& result);

/// Each command returns a process exit code and reports errors on `err`.
int cmd_run(const CommonArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommonArgs& args, const std::string& clients, const std::string& methods, std::ostream& out,
              std::ostream& err);
int cmd_report(const std::string& run_dir, std::ostream& out, std::ostream& err);
int cmd_gen_data(const CommonArgs& args, std::ostream& out, std::ostream& err);

}  // namespace fedspectra::cli
