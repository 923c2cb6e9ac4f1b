#include "fedspectra/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fedspectra/errors.hpp"
#include "fedspectra/parallel.hpp"

namespace fs = std::filesystem;

namespace fedspectra::cli {

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IngestionError("cannot write " + path.string());
    return f;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
    out << kMetricsHeader << '\n';
    for (const auto& r : records) {
        out << r.round << ',' << r.epoch << ',' << r.client_id << ',' << r.model << ',' << r.split << ','
            << fmt(r.metrics.accuracy) << ',' << fmt(r.metrics.macro_f1) << ',' << fmt(r.metrics.macro_auc) << ','
            << fmt(r.metrics.loss) << '\n';
    }
}

void write_class_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
    out << kClassMetricsHeader << '\n';
    for (const auto& r : records) {
        for (std::size_t c = 0; c < r.metrics.per_class.size(); ++c) {
            const auto& s = r.metrics.per_class[c];
            out << r.round << ',' << r.client_id << ',' << r.model << ',' << r.split << ',' << c << ','
                << fmt(s.precision) << ',' << fmt(s.recall) << ',' << fmt(s.f1) << '\n';
        }
    }
}

void write_events(std::ostream& out, const std::vector<std::string>& events) {
    for (const auto& e : events) out << e << '\n';
}

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg = args.config ? load_config(*args.config) : RunConfig{};
    for (const auto& o : args.overrides) apply_override(cfg, o);
    if (args.seed) cfg.set("seed", std::to_string(*args.seed));
    if (args.out) cfg.out_dir = *args.out;
    cfg.validate();
    return cfg;
}

std::vector<ClientPartition> load_or_generate(const RunConfig& cfg) {
    if (cfg.data_dir.empty()) return generate(cfg.synth);
    auto data = load_dataset(cfg.data_dir, cfg.federation.classes);
    if (data.size() != static_cast<std::size_t>(cfg.federation.num_clients)) {
        throw ConfigError("dataset has " + std::to_string(data.size()) + " clients but num_clients = " +
                          std::to_string(cfg.federation.num_clients));
    }
    return data;
}

void apply_method(RunConfig& cfg, const std::string& method) {
    if (method == "config") return;
    if (method == "fedavg") {
        cfg.set("aggregator", "fedavg");
        cfg.set("cto_enabled", "false");
    } else if (method == "cfa") {
        cfg.set("aggregator", "cfa");
        cfg.set("cto_enabled", "false");
    } else if (method == "cto") {
        cfg.set("aggregator", "fedavg");
        cfg.set("cto_enabled", "true");
    } else if (method == "cfa_cto") {
        cfg.set("aggregator", "cfa");
        cfg.set("cto_enabled", "true");
    } else {
        throw ConfigError("unknown method '" + method + "' (expected fedavg, cfa, cto, cfa_cto or config)");
    }
}

FinalSummary summarize(const FederationConfig& cfg, const RunResult& result) {
    FinalSummary s;
    s.rounds = static_cast<int>(result.rounds.size());
    for (const auto& r : result.rounds) s.metrics_rows += r.records.size();
    if (result.rounds.empty()) return s;
    const std::string model = primary_model_name(cfg);
    double acc = 0.0, f1 = 0.0, auc = 0.0;
    int n = 0, n_auc = 0;
    for (const auto& r : result.rounds.back().records) {
        if (r.model != model || r.split != "test") continue;
        acc += r.metrics.accuracy;
        f1 += r.metrics.macro_f1;
        if (!std::isnan(r.metrics.macro_auc)) {
            auc += r.metrics.macro_auc;
            ++n_auc;
        }
        ++n;
    }
    if (n > 0) {
        s.mean_accuracy = acc / n;
        s.mean_macro_f1 = f1 / n;
    }
    s.mean_macro_auc = n_auc > 0 ? auc / n_auc : std::nan("");
    return s;
}

namespace {

void write_run_outputs(const fs::path& dir, const RunConfig& cfg, const RunResult& result) {
    fs::create_directories(dir);
    open_out(dir / "resolved_config.txt") << cfg.to_text();
    const auto records = result.all_records();
    {
        auto f = open_out(dir / "metrics.csv");
        write_metrics_csv(f, records);
    }
    {
        auto f = open_out(dir / "class_metrics.csv");
        write_class_metrics_csv(f, records);
    }
    {
        auto f = open_out(dir / "events.jsonl");
        write_events(f, result.events);
    }
}

RunResult execute(const RunConfig& cfg, bool with_checkpoints) {
    const auto data = load_or_generate(cfg);
    RunOptions options;
    options.threads = configured_threads();
    if (with_checkpoints && cfg.checkpoints != CheckpointPolicy::None) {
        options.checkpoint_dir = fs::path(cfg.out_dir) / "checkpoints";
        options.checkpoints = cfg.checkpoints;
    }
    return run_experiment(cfg.federation, data, options);
}

}  // namespace

int cmd_run(const CommonArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = resolve_config(args);
        const RunResult result = execute(cfg, true);
        write_run_outputs(cfg.out_dir, cfg, result);
        const auto s = summarize(cfg.federation, result);
        out << "rounds: " << s.rounds << "  final mean test macro-F1 (" << primary_model_name(cfg.federation)
            << "): " << fmt(s.mean_macro_f1) << "  macro-AUC: " << fmt(s.mean_macro_auc) << '\n'
            << "outputs written to " << cfg.out_dir << '\n';
        return kExitOk;
    });
}

int cmd_sweep(const CommonArgs& args, const std::string& clients, const std::string& methods, std::ostream& out,
              std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig base = resolve_config(args);
        std::vector<int> counts;
        for (const auto& tok : split(clients, ',')) {
            RunConfig probe = base;
            probe.set("num_clients", tok);
            counts.push_back(probe.federation.num_clients);
        }
        if (counts.empty()) throw ConfigError("--clients needs at least one client count");
        auto method_list = split(methods.empty() ? std::string("config") : methods, ',');
        for (const auto& m : method_list) {
            RunConfig probe = base;
            apply_method(probe, m);
        }

        fs::create_directories(base.out_dir);
        std::ostringstream csv;
        csv << kSweepHeader << '\n';
        for (int n : counts) {
            for (const auto& method : method_list) {
                RunConfig cfg = base;
                cfg.set("num_clients", std::to_string(n));
                apply_method(cfg, method);
                cfg.out_dir = (fs::path(base.out_dir) / ("n" + std::to_string(n) + "_" + method)).string();
                cfg.validate();
                const RunResult result = execute(cfg, false);
                write_run_outputs(cfg.out_dir, cfg, result);
                const auto s = summarize(cfg.federation, result);
                csv << n << ',' << method << ',' << s.rounds << ',' << s.metrics_rows << ',' << fmt(s.mean_accuracy)
                    << ',' << fmt(s.mean_macro_f1) << ',' << fmt(s.mean_macro_auc) << '\n';
                out << "N=" << n << " " << method << ": macro-F1 " << fmt(s.mean_macro_f1) << '\n';
            }
        }
        open_out(fs::path(base.out_dir) / "sweep.csv") << csv.str();
        return kExitOk;
    });
}

namespace {

struct Row {
    int round = 0;
    int client = 0;
    std::string model, split;
    double accuracy = 0, f1 = 0, auc = 0;
};

double parse_field(const std::string& s, const std::string& where) {
    if (s == "nan") return std::nan("");
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IngestionError(where + ": bad number '" + s + "'");
    }
}

std::vector<std::string> csv_fields(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    return f;
}

double nan_mean(const std::vector<double>& v) {
    double s = 0.0;
    int n = 0;
    for (double x : v) {
        if (!std::isnan(x)) {
            s += x;
            ++n;
        }
    }
    return n ? s / n : std::nan("");
}

}  // namespace

int cmd_report(const std::string& run_dir, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const fs::path dir(run_dir);
        std::ifstream in(dir / "metrics.csv");
        if (!in) throw IngestionError("missing " + (dir / "metrics.csv").string());
        std::string line;
        if (!std::getline(in, line) || line != kMetricsHeader) throw IngestionError("metrics.csv: unexpected header");
        std::vector<Row> rows;
        int line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const std::string where = "metrics.csv:" + std::to_string(line_no);
            const auto f = csv_fields(line);
            if (f.size() != 9) throw IngestionError(where + ": expected 9 fields");
            Row r;
            r.round = static_cast<int>(parse_field(f[0], where));
            r.client = static_cast<int>(parse_field(f[2], where));
            r.model = f[3];
            r.split = f[4];
            r.accuracy = parse_field(f[5], where);
            r.f1 = parse_field(f[6], where);
            r.auc = parse_field(f[7], where);
            rows.push_back(std::move(r));
        }
        if (rows.empty()) throw IngestionError("no evaluation rows in metrics.csv");

        int final_round = 0;
        bool has_personalized = false;
        for (const auto& r : rows) {
            final_round = std::max(final_round, r.round);
            has_personalized = has_personalized || r.model == "personalized";
        }
        const std::string model = has_personalized ? "personalized" : "local";
        const std::string split_name = "test";

        // Macro precision/recall come from class_metrics.csv when present.
        std::map<int, std::pair<std::vector<double>, std::vector<double>>> pr;
        if (std::ifstream cls(dir / "class_metrics.csv"); cls) {
            std::getline(cls, line);
            while (std::getline(cls, line)) {
                const auto f = csv_fields(line);
                if (f.size() != 8) continue;
                if (std::stoi(f[0]) != final_round || f[2] != model || f[3] != split_name) continue;
                auto& entry = pr[std::stoi(f[1])];
                entry.first.push_back(parse_field(f[5], "class_metrics.csv"));
                entry.second.push_back(parse_field(f[6], "class_metrics.csv"));
            }
        }

        nlohmann::ordered_json summary;
        summary["round"] = final_round;
        summary["model"] = model;
        summary["split"] = split_name;
        summary["clients"] = nlohmann::ordered_json::array();
        std::vector<double> f1s, aucs, accs, precs, recs;
        out << std::left << std::setw(8) << "client" << std::setw(10) << "F1" << std::setw(10) << "AUC"
            << std::setw(10) << "Pr" << std::setw(10) << "Re" << std::setw(10) << "Acc" << '\n';
        auto json_num = [](double v) { return std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v); };
        for (const auto& r : rows) {
            if (r.round != final_round || r.model != model || r.split != split_name) continue;
            double p = std::nan(""), rc = std::nan("");
            if (auto it = pr.find(r.client); it != pr.end()) {
                p = nan_mean(it->second.first);
                rc = nan_mean(it->second.second);
            }
            f1s.push_back(r.f1);
            aucs.push_back(r.auc);
            accs.push_back(r.accuracy);
            precs.push_back(p);
            recs.push_back(rc);
            out << std::setw(8) << r.client << std::setw(10) << fmt(r.f1) << std::setw(10) << fmt(r.auc)
                << std::setw(10) << fmt(p) << std::setw(10) << fmt(rc) << std::setw(10) << fmt(r.accuracy) << '\n';
            nlohmann::ordered_json c;
            c["client_id"] = r.client;
            c["macro_f1"] = json_num(r.f1);
            c["macro_auc"] = json_num(r.auc);
            c["precision"] = json_num(p);
            c["recall"] = json_num(rc);
            c["accuracy"] = json_num(r.accuracy);
            summary["clients"].push_back(c);
        }
        if (f1s.empty()) throw IngestionError("no final-round test rows for model '" + model + "'");
        nlohmann::ordered_json avg;
        avg["macro_f1"] = json_num(nan_mean(f1s));
        avg["macro_auc"] = json_num(nan_mean(aucs));
        avg["precision"] = json_num(nan_mean(precs));
        avg["recall"] = json_num(nan_mean(recs));
        avg["accuracy"] = json_num(nan_mean(accs));
        summary["avg"] = avg;
        out << std::setw(8) << "Avg" << std::setw(10) << fmt(nan_mean(f1s)) << std::setw(10) << fmt(nan_mean(aucs))
            << std::setw(10) << fmt(nan_mean(precs)) << std::setw(10) << fmt(nan_mean(recs)) << std::setw(10)
            << fmt(nan_mean(accs)) << '\n';
        open_out(dir / "summary.json") << summary.dump(2) << '\n';
        return kExitOk;
    });
}

int cmd_gen_data(const CommonArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = resolve_config(args);
        const auto data = generate(cfg.synth);
        export_dataset(cfg.out_dir, data);
        for (const auto& c : data) {
            out << "client_" << c.client_id << ": " << c.train.size() << " train, " << c.val.size() << " val, "
                << c.test.size() << " test\n";
        }
        return kExitOk;
    });
}

}  // namespace fedspectra::cli
