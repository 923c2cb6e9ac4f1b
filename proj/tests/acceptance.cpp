// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "fedspectra/cli.hpp"
#include "fedspectra/config.hpp"
#include "fedspectra/cto.hpp"
#include "fedspectra/federation.hpp"
#include "fedspectra/fft.hpp"
#include "fedspectra/log.hpp"
#include "fedspectra/metrics.hpp"
#include "fedspectra/parallel.hpp"
#include "fedspectra/spectral.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace fedspectra;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v, const char* f = "%.3g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- 1. FFT oracle equivalence -------------------------------------------------

Outcome fft_oracle() {
    const auto t0 = Clock::now();
    Rng rng(2024);
    double worst = 0.0;
    auto check = [&](std::size_t r, std::size_t c) {
        const Tensor m = oracle::random_tensor({r, c}, rng, -5, 5);
        const auto ref = oracle::naive_dft2(m);
        const auto f = fft2d(m);
        double err = 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(cplx(f.re[i], f.im[i]) - ref[i]));
        worst = std::max(worst, err / m.max_abs());
    };
    for (std::size_t r = 1; r <= 8; ++r)
        for (std::size_t c = 1; c <= 8; ++c) check(r, c);
    for (int i = 0; i < 20; ++i) check(1 + rng.below(64), 1 + rng.below(64));
    const double secs = seconds_since(t0);
    return {worst <= 1e-9 && secs < 5.0, "max err/max|x| " + num(worst) + ", " + num(secs) + " s"};
}

// ---- 2. Roundtrips -----------------------------------------------------------

Outcome roundtrips() {
    const auto t0 = Clock::now();
    Rng rng(7);
    double fft_err = 0.0, ap_err = 0.0;
    bool reshape_exact = true;
    for (int i = 0; i < 20; ++i) {
        const std::size_t r = 1 + rng.below(40), c = 1 + rng.below(40);
        const Tensor m = oracle::random_tensor({r, c}, rng);
        const auto f = fft2d(m);
        fft_err = std::max(fft_err, max_abs_diff(ifft2d(f), m));
        const auto [amp, phase] = to_amplitude_phase(f);
        const auto g = from_amplitude_phase(amp, phase);
        for (std::size_t k = 0; k < f.size(); ++k)
            ap_err = std::max({ap_err, std::abs(g.re[k] - f.re[k]), std::abs(g.im[k] - f.im[k])});

        const std::size_t A = 1 + rng.below(6), B = 1 + rng.below(6), k1 = 1 + rng.below(5), k2 = 1 + rng.below(5);
        const Tensor w = oracle::random_tensor({A, B, k1, k2}, rng);
        reshape_exact = reshape_exact && matrix_to_conv(reshape_conv_to_matrix(w), A, B, k1, k2) == w;
    }
    const double secs = seconds_since(t0);
    return {fft_err <= 1e-9 && ap_err <= 1e-9 && reshape_exact && secs < 1.0,
            "ifft(fft) " + num(fft_err) + ", amp/phase " + num(ap_err) + ", reshape " +
                (reshape_exact ? "exact" : "NOT exact") + ", " + num(secs) + " s"};
}

// ---- 3. Mask law -------------------------------------------------------------

Outcome mask_law() {
    const auto t0 = Clock::now();
    Rng rng(3);
    int bad = 0;
    for (int i = 0; i < 200; ++i) {
        const std::size_t rows = 1 + rng.below(64), cols = 1 + rng.below(64);
        double s = rng.uniform(0.0, 0.5);
        if (s == 0.0) s = 0.25;
        const auto m = build_mask(rows, cols, s);
        const auto hr = static_cast<std::size_t>(std::floor(s * static_cast<double>(rows)));
        const auto hc = static_cast<std::size_t>(std::floor(s * static_cast<double>(cols)));
        std::size_t brute = 0;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                if (oracle::in_band(r, rows, s) && oracle::in_band(c, cols, s)) {
                    ++brute;
                    if (!m.test(r, c)) ++bad;
                }
        if (m.count() != (2 * hr + 1) * (2 * hc + 1) || m.count() != brute) ++bad;
    }
    const double secs = seconds_since(t0);
    return {bad == 0 && secs < 1.0, std::to_string(200 - bad) + "/200 triples agree, " + num(secs) + " s"};
}

// ---- 4. CFA limits -------------------------------------------------------------

ParameterSet random_set(Rng& rng) {
    ParameterSet p;
    p.add({"conv.weight", oracle::random_tensor({4, 3, 3, 3}, rng), ParamKind::Conv4d, false});
    p.add({"dense.weight", oracle::random_tensor({6, 10}, rng), ParamKind::Matrix2d, false});
    p.add({"dense.bias", oracle::random_tensor({6}, rng), ParamKind::Vector1d, false});
    return p;
}

Outcome cfa_limits() {
    const auto t0 = Clock::now();
    Rng rng(11);
    std::vector<ParameterSet> one{random_set(rng)};
    const double a = max_abs_diff(cfa_aggregate(one, 0.3)[0], one[0]);

    std::vector<ParameterSet> same(4, one[0]);
    double b = 0.0;
    for (const auto& o : cfa_aggregate(same, 0.3)) b = std::max(b, max_abs_diff(o, one[0]));

    std::vector<ParameterSet> many{random_set(rng), random_set(rng), random_set(rng)};
    const std::vector<double> eq(3, 1.0);
    const auto avg = fedavg_aggregate(many, eq);
    double c = 0.0;
    for (const auto& o : cfa_aggregate_with_mask(many, testing_hooks::full_mask, DomainMode::Complex, true))
        c = std::max(c, max_abs_diff(o, avg));

    ParameterSet p1, p2;
    p1.add({"w", Tensor::matrix(1, 2, {1, 3}), ParamKind::Matrix2d, false});
    p2.add({"w", Tensor::matrix(1, 2, {5, 9}), ParamKind::Matrix2d, false});
    std::vector<ParameterSet> pair{p1, p2};
    const auto dc = cfa_aggregate_with_mask(pair, testing_hooks::dc_mask, DomainMode::Complex, false);
    const double d = std::max(max_abs_diff(dc[0].find("w")->tensor, Tensor::matrix(1, 2, {3.5, 5.5})),
                              max_abs_diff(dc[1].find("w")->tensor, Tensor::matrix(1, 2, {2.5, 6.5})));
    const double secs = seconds_since(t0);
    return {a <= 1e-9 && b <= 1e-9 && c <= 1e-9 && d <= 1e-9 && secs < 1.0,
            "N=1 " + num(a) + ", identical " + num(b) + ", full mask " + num(c) + ", DC example " + num(d) + ", " +
                num(secs) + " s"};
}

// ---- 5. Schedule endpoints ----------------------------------------------------

Outcome schedule_endpoints() {
    const CfaSchedule sch{0.26, 0.55, 300};
    const double s0 = schedule_threshold(sch, 0), sT = schedule_threshold(sch, 300);
    return {s0 == 0.26 && sT == 0.55, "s(0)=" + num(s0, "%.17g") + ", s(T)=" + num(sT, "%.17g")};
}

// ---- 6. Gradient checks -------------------------------------------------------

Outcome gradient_checks() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string worst_what;
    auto track = [&](const std::vector<gradcheck::Result>& rs) {
        for (const auto& r : rs)
            if (r.error > worst) {
                worst = r.error;
                worst_what = r.what;
            }
    };
    const std::string arch = "conv:3:3,bn,relu,pool,flatten,dense:6,relu,dense";
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(500 + seed);
        track(gradcheck::all_layers(rng));
        track(gradcheck::network(arch, {1, 8, 8}, seed, false));
        track(gradcheck::network(arch, {1, 8, 8}, seed, true));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-4 && secs < 30.0,
            "worst relative error " + num(worst) + (worst_what.empty() ? "" : " (" + worst_what + ")") + ", " +
                num(secs) + " s"};
}

// ---- 8. Metrics oracles ------------------------------------------------------

Outcome metrics_oracles() {
    Rng rng(8);
    double f1_err = 0.0, auc_err = 0.0;
    for (int i = 0; i < 100; ++i) {
        const std::size_t k = 2 + rng.below(5);
        std::vector<std::uint64_t> counts(k * k);
        std::vector<std::vector<double>> dense(k, std::vector<double>(k));
        for (std::size_t t = 0; t < k; ++t)
            for (std::size_t p = 0; p < k; ++p) {
                counts[t * k + p] = rng.uniform() < 0.2 ? 0 : rng.below(30);
                dense[t][p] = static_cast<double>(counts[t * k + p]);
            }
        counts[0] += 1;
        dense[0][0] += 1;
        f1_err = std::max(f1_err, std::abs(macro_f1(ConfusionMatrix(k, counts)) - oracle::macro_f1(dense)));
    }
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 2 + rng.below(49);
        std::vector<double> scores(n);
        std::vector<bool> pos(n);
        std::unique_ptr<bool[]> flags(new bool[n]);
        for (std::size_t j = 0; j < n; ++j) {
            scores[j] = i % 2 ? rng.uniform() : static_cast<double>(rng.below(8));
            flags[j] = pos[j] = rng.coin();
        }
        flags[0] = pos[0] = true;
        flags[1] = pos[1] = false;
        auc_err = std::max(auc_err, std::abs(one_vs_rest_auc(scores, {flags.get(), n}) - oracle::pairwise_auc(scores, pos)));
    }
    return {f1_err <= 1e-12 && auc_err <= 1e-12, "macro-F1 err " + num(f1_err) + ", AUC err " + num(auc_err)};
}

// ---- desk-profile runs ---------------------------------------------------------

RunConfig desk_config() { return load_config(FEDSPECTRA_DESK_CONFIG); }

int run_cli(const std::string& args, const std::string& threads) {
    const std::string cmd = "FEDSPECTRA_THREADS=" + threads + " \"" + FEDSPECTRA_CLI + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism(const fs::path& work) {
    double slowest = 0.0;
    for (const char* threads : {"1", "4"}) {
        const auto t0 = Clock::now();
        const int rc = run_cli(std::string("run --config \"") + FEDSPECTRA_DESK_CONFIG + "\" --set checkpoints=none --out \"" +
                                   (work / ("det_" + std::string(threads))).string() + "\"",
                               threads);
        slowest = std::max(slowest, seconds_since(t0));
        if (rc != 0) return {false, std::string("run with FEDSPECTRA_THREADS=") + threads + " exited " + std::to_string(rc)};
    }
    const bool metrics_same = slurp(work / "det_1" / "metrics.csv") == slurp(work / "det_4" / "metrics.csv");
    const bool events_same = slurp(work / "det_1" / "events.jsonl") == slurp(work / "det_4" / "events.jsonl");
    const bool non_empty = !slurp(work / "det_1" / "events.jsonl").empty();
    return {metrics_same && events_same && non_empty && slowest < 300.0,
            std::string("metrics.csv ") + (metrics_same ? "identical" : "DIFFER") + ", events.jsonl " +
                (events_same ? "identical" : "DIFFER") + " across FEDSPECTRA_THREADS=1/4, slowest run " + num(slowest) +
                " s"};
}

struct DirectionalData {
    std::map<std::string, std::vector<double>> f1;  // method -> per-seed final macro-F1
    double seconds = 0.0;
    int receive_checks = 0;
    int receive_violations = 0;
};

DirectionalData directional_runs() {
    DirectionalData out;
    const auto t0 = Clock::now();
    const std::vector<std::string> methods{"fedavg", "cfa", "cto", "cfa_cto"};
    for (std::uint64_t seed : {1, 2, 3}) {
        for (const auto& method : methods) {
            RunConfig cfg = desk_config();
            cfg.set("seed", std::to_string(seed));
            cli::apply_method(cfg, method);
            cfg.validate();
            const auto data = generate(cfg.synth);
            RunOptions opt;
            opt.threads = configured_threads();
            std::map<int, ParameterSet> before;
            opt.hooks.before_receive = [&](int, int k, const ClientState& s) { before[k] = s.personalized().state(); };
            opt.hooks.after_receive = [&](int, int k, const ClientState& s) {
                ++out.receive_checks;
                if (!(s.personalized().state() == before[k])) ++out.receive_violations;
            };
            const auto result = run_experiment(cfg.federation, data, opt);
            out.f1[method].push_back(cli::summarize(cfg.federation, result).mean_macro_f1);
        }
    }
    out.seconds = seconds_since(t0);
    return out;
}

Outcome cto_machine(const DirectionalData& runs) {
    auto make = [] {
        const Network net({1, 8, 8}, 3, "flatten,dense", 1);
        return ClientState(0, net, net, CtoOptions{0.6, 0.8});
    };
    bool ok = true;
    auto c = make();
    ok = ok && c.maybe_advance(0.25, 0.5) == CtoPhase::Retrieve;
    ok = ok && c.maybe_advance(0.35, 0.5) == CtoPhase::Reciprocate;
    ok = ok && c.maybe_advance(0.35, 0.5) == CtoPhase::Reciprocate;
    ok = ok && c.maybe_advance(0.45, 0.5) == CtoPhase::Refine;
    ok = ok && c.maybe_advance(0.0, 1.0) == CtoPhase::Refine;
    const ParameterSet q = c.personalized().parameters();
    c.on_receive(Network({1, 8, 8}, 3, "flatten,dense", 2).parameters());
    ok = ok && c.phase() == CtoPhase::Retrieve && c.personalized().parameters() == q;
    const bool q_ok = runs.receive_checks > 0 && runs.receive_violations == 0;
    return {ok && q_ok, std::string("scripted transitions ") + (ok ? "match" : "MISMATCH") + "; personalized model " +
                            (q_ok ? "bit-unchanged" : "OVERWRITTEN") + " across " +
                            std::to_string(runs.receive_checks) + " receives in full desk runs"};
}

Outcome directional(const DirectionalData& runs) {
    auto mean = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    const double fedavg = mean(runs.f1.at("fedavg"));
    const double cfa = mean(runs.f1.at("cfa"));
    const double cto = mean(runs.f1.at("cto"));
    const double both = mean(runs.f1.at("cfa_cto"));
    const bool ok = both >= fedavg && cfa >= fedavg && cto >= fedavg && runs.seconds < 1200.0;
    return {ok, "mean final test macro-F1 over seeds 1-3: fedavg " + num(fedavg, "%.4f") + ", cfa " + num(cfa, "%.4f") +
                    ", cto " + num(cto, "%.4f") + ", cfa+cto " + num(both, "%.4f") + "; " + num(runs.seconds, "%.0f") +
                    " s"};
}

Outcome sweep_shape(const fs::path& work) {
    const fs::path dir = work / "sweep";
    const int rc = run_cli(std::string("sweep --config \"") + FEDSPECTRA_DESK_CONFIG + "\" --clients 2,4,8 --out \"" +
                               dir.string() + "\"",
                           "0");
    if (rc != 0) return {false, "sweep exited " + std::to_string(rc)};
    std::stringstream ss(slurp(dir / "sweep.csv"));
    std::string line;
    std::getline(ss, line);
    if (line != cli::kSweepHeader) return {false, "unexpected header: " + line};
    const RunConfig desk = desk_config();
    const int rounds = desk.federation.rounds();
    const int models = desk.federation.cto_enabled ? 2 : 1;
    std::vector<int> ns;
    bool ok = true;
    long prev_rows = -1;
    while (std::getline(ss, line)) {
        std::stringstream fields(line);
        std::string n, method, r, rows;
        std::getline(fields, n, ',');
        std::getline(fields, method, ',');
        std::getline(fields, r, ',');
        std::getline(fields, rows, ',');
        ns.push_back(std::stoi(n));
        const long nrows = std::stol(rows);
        ok = ok && std::stoi(r) == rounds && nrows == static_cast<long>(rounds) * ns.back() * models * 2 && nrows > prev_rows;
        prev_rows = nrows;
    }
    ok = ok && ns == std::vector<int>{2, 4, 8};
    std::string n_list;
    for (int n : ns) n_list += (n_list.empty() ? "" : ",") + std::to_string(n);
    return {ok, std::to_string(ns.size()) + " rows, N column {" + n_list + "}, row counts " +
                    (ok ? "consistent and increasing" : "INCONSISTENT")};
}

}  // namespace

int main() {
    set_warnings_enabled(false);
    const fs::path work = fs::temp_directory_path() / "fedspectra_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    std::map<int, std::pair<std::string, Outcome>> results;
    auto record = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        results[id] = {name, o};
        std::fprintf(stderr, "  criterion %d finished\n", id);
    };

    record(1, "FFT oracle equivalence", fft_oracle);
    record(2, "Roundtrips", roundtrips);
    record(3, "Mask law", mask_law);
    record(4, "CFA limits", cfa_limits);
    record(5, "Schedule endpoints", schedule_endpoints);
    record(6, "Gradient checks", gradient_checks);
    record(8, "Metrics oracles", metrics_oracles);
    record(9, "Determinism", [&] { return determinism(work); });
    DirectionalData runs;
    std::string runs_error;
    try {
        runs = directional_runs();
    } catch (const std::exception& e) {
        runs_error = e.what();
    }
    record(7, "CTO machine", [&] {
        if (!runs_error.empty()) return Outcome{false, "desk runs failed: " + runs_error};
        return cto_machine(runs);
    });
    record(10, "Directional claim", [&] {
        if (!runs_error.empty()) return Outcome{false, "desk runs failed: " + runs_error};
        return directional(runs);
    });
    record(11, "Sweep harness", [&] { return sweep_shape(work); });

    int failures = 0;
    for (const auto& [id, entry] : results) {
        const auto& [name, o] = entry;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
        if (!o.pass) ++failures;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failures, results.size());
    fs::remove_all(work);
    return failures == 0 ? 0 : 1;
}
