// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "nids/benchmark.hpp"
#include "nids/cli.hpp"
#include "nids/codec.hpp"
#include "nids/model_selection.hpp"
#include "nids/pipeline.hpp"
#include "nids/session_log.hpp"
#include "nids/synth.hpp"
#include "nids/training.hpp"
#include "fixtures.hpp"
#include "support.hpp"
#include "timeline_oracle.hpp"

using namespace nids;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- 1 ---------------------------------------------------------------------------

Outcome grid_lattices() {
    const auto t0 = std::chrono::steady_clock::now();
    auto has = [](const GridParam& p, double v) {
        const auto xs = expand(p);
        return std::find(xs.begin(), xs.end(), v) != xs.end();
    };
    const bool ok = has({"C", 0.01, 0.99, 99}, 0.47) && has({"M", 1, 100, 10, true}, 1.0) &&
                    has({"C", 0.1, 10, 100}, 8.9) && has({"K", 2, 100, 99, true}, 4.0) &&
                    has({"V", 1.0e-5, 0.01, 5}, 1.0e-5);
    bool defaults = true;
    for (Algorithm a : kAllAlgorithms) {
        const auto g = make_grid(default_grid(a));
        defaults = defaults && std::find(g.begin(), g.end(), reference_params(a)) != g.end();
    }
    const double s = seconds_since(t0);
    return {ok && defaults && s < 1.0, fmt::format("membership {}, default grids {}, {:.3f} s", ok, defaults, s)};
}

// --- 2 ---------------------------------------------------------------------------

Outcome metric_formulas() {
    Rng rng(2002);
    std::size_t mismatches = 0, throughput_checked = 0;
    for (int t = 0; t < 1000; ++t) {
        const auto ev = test::random_timeline(rng);
        const double tw = 0.25 + uniform_unit(rng) * 5;
        const double lw = 0.25 + uniform_unit(rng) * 5;
        const auto expect = test::oracle_throughput(ev, tw);
        if (expect) {
            ++throughput_checked;
            if (compute_throughput(ev, tw).value != *expect) ++mismatches;
        } else {
            bool threw = false;
            try {
                compute_throughput(ev, tw);
            } catch (const Error&) {
                threw = true;
            }
            if (!threw) ++mismatches;
        }
        if (compute_latency(ev, lw).value != test::oracle_latency(ev, lw)) ++mismatches;
    }
    const double f1 = EvalMetrics::from_counts(8, 2, 4, 0).f1;
    const bool f1_ok = std::abs(f1 - 0.72727272727272727) <= 1e-12;
    return {mismatches == 0 && f1_ok,
            fmt::format("1000 timelines ({} with a throughput value), {} mismatches, F1 {:.15f}", throughput_checked,
                        mismatches, f1)};
}

// --- 3 ---------------------------------------------------------------------------

Outcome clamping() {
    Rng rng(3003);
    std::vector<FullFeatureRecord> train;
    for (int i = 0; i < 300; ++i) {
        auto r = test::random_full_record(rng);
        // shrink the training ranges so test records exceed them
        auto& s = r.session;
        s.duration_s /= 4;
        s.src_packets /= 4;
        s.src_bytes /= 4;
        s.src_ip_bytes /= 4;
        s.dst_packets /= 4;
        s.dst_bytes /= 4;
        s.dst_ip_bytes /= 4;
        r.host.dst_host_count /= 4;
        r.host.dst_host_same_src_port_count /= 4;
        r.host.dst_host_serror_count /= 4;
        r.host.dst_host_srv_count /= 4;
        r.host.dst_host_srv_serror_count /= 4;
        train.push_back(r);
    }
    const auto spec = fit_normalization(train);
    const auto layout = spec.layout();
    std::array<std::size_t, kNumericFeatureCount> column{};
    for (std::size_t f = 0; f < kNumericFeatureCount; ++f) {
        const auto name = to_string(static_cast<NumericFeature>(f));
        column[f] = static_cast<std::size_t>(std::find(layout.begin(), layout.end(), name) - layout.begin());
        if (column[f] >= layout.size()) return {false, fmt::format("feature {} missing from layout", name)};
    }
    std::size_t above = 0, violations = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto r = test::random_full_record(rng);
        const auto x = strip_and_encode(r, spec);
        for (std::size_t f = 0; f < kNumericFeatureCount; ++f) {
            const double v = numeric_value(r, static_cast<NumericFeature>(f));
            const double e = x[column[f]];
            if (v > spec.maxima[f]) {
                ++above;
                if (e != 1.0) ++violations;
            } else if (!(e >= 0.0 && e <= 1.0)) {
                ++violations;
            }
        }
    }
    return {violations == 0 && above > 0,
            fmt::format("10000 records, {} values above the training max, {} violations", above, violations)};
}

// --- 4 and 5 ---------------------------------------------------------------------

struct ReplayResult {
    double throughput = 0.0;
    double latency_ms = 0.0;
    std::map<std::string, double> busy;
};

struct Ordering {
    std::map<Algorithm, ReplayResult> results;
    std::string error;
};

const Ordering& replay_all() {
    static const Ordering ordering = [] {
        Ordering o;
        try {
            SynthConfig tc;
            tc.sessions = 40000;
            tc.abnormal_fraction = 0.2;
            tc.overlap = 0.15;
            tc.seed = 3;
            const auto prepared = prepare_training(synth_sessions(tc));
            const Dataset balanced = downsample(prepared.data, derive_seed(3, "downsample"));

            SynthConfig rc = tc;
            rc.sessions = 100000;
            rc.seed = 44;
            const auto replay_sessions = sessions_of(synth_sessions(rc));

            PipelineConfig pc;
            pc.replay_rate.reset();
            for (Algorithm a : kAllAlgorithms) {
                const auto t0 = std::chrono::steady_clock::now();
                const ModelClassifier clf(
                    train_model(a, balanced, complete_params(a, reference_params(a)), 3));
                std::vector<BenchReport> runs;
                for (int run = 0; run < 3; ++run) {
                    NullSink sink;
                    const auto summary = run_pipeline(pc, replay_sessions, prepared.spec, clf, sink);
                    BenchMetadata md;
                    md.throughput_interval_s = 0.1;
                    md.latency_interval_s = 0.1;
                    runs.push_back(make_report(summary, md));
                }
                const auto agg = aggregate(runs);
                ReplayResult r{agg.throughput.mean, agg.latency.mean, {}};
                for (const auto& rep : runs) {
                    for (const auto& [k, v] : rep.stage_busy_ratios) r.busy[k] += v / 3.0;
                }
                o.results[a] = r;
                std::printf("  %-3s throughput %.0f sessions/s (min %.0f, max %.0f), latency %.1f ms, %.1f s\n",
                            std::string(to_string(a)).c_str(), agg.throughput.mean, agg.throughput.min,
                            agg.throughput.max, agg.latency.mean, seconds_since(t0));
                std::fflush(stdout);
            }
        } catch (const std::exception& e) {
            o.error = e.what();
        }
        return o;
    }();
    return ordering;
}

Outcome throughput_ordering() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& o = replay_all();
    if (!o.error.empty()) return {false, o.error};
    auto tp = [&](Algorithm a) { return o.results.at(a).throughput; };
    const bool order = tp(Algorithm::DT) >= tp(Algorithm::RF) && tp(Algorithm::RF) >= tp(Algorithm::SVM) &&
                       tp(Algorithm::SVM) >= tp(Algorithm::KNN) && tp(Algorithm::NB) >= tp(Algorithm::SVM);
    const bool latency = o.results.at(Algorithm::KNN).latency_ms > o.results.at(Algorithm::DT).latency_ms;
    return {order && latency,
            fmt::format("dt {:.0f} rf {:.0f} nb {:.0f} svm {:.0f} knn {:.0f} sessions/s; latency knn {:.1f} ms vs "
                        "dt {:.1f} ms; {:.0f} s",
                        tp(Algorithm::DT), tp(Algorithm::RF), tp(Algorithm::NB), tp(Algorithm::SVM),
                        tp(Algorithm::KNN), o.results.at(Algorithm::KNN).latency_ms,
                        o.results.at(Algorithm::DT).latency_ms, seconds_since(t0))};
}

Outcome bottleneck() {
    const auto& o = replay_all();
    if (!o.error.empty()) return {false, o.error};
    const auto& busy = o.results.at(Algorithm::KNN).busy;
    const double c = busy.at("classifier"), f = busy.at("feature"), s = busy.at("sink");
    return {c > f && c > s, fmt::format("knn busy ratios: classifier {:.3f}, feature {:.3f}, sink {:.3f}", c, f, s)};
}

// --- 6 ---------------------------------------------------------------------------

Outcome host_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(6006);
    std::vector<SessionRecord> sessions;
    for (std::uint64_t i = 0; i < 10000; ++i) sessions.push_back(test::random_session(rng, 20, i + 1));
    const auto expected = test::brute_force_host_features(sessions);
    HostWindow window;
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        if (window.update_and_extract(sessions[i]) != expected[i]) ++mismatches;
    }
    const auto batch = extract_host_features(sessions);
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        if (batch[i].host != expected[i]) ++mismatches;
    }
    const double s = seconds_since(t0);
    return {mismatches == 0 && s < 10.0,
            fmt::format("10000 sessions, 20 destinations, {} mismatches, {:.2f} s", mismatches, s)};
}

// --- 7 ---------------------------------------------------------------------------

Outcome knn_oracle_equivalence() {
    Rng rng(7007);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 80);
        const std::size_t dim = 1 + uniform_index(rng, 6);
        const bool coarse = trial % 2 == 0;
        auto value = [&] { return coarse ? static_cast<double>(uniform_index(rng, 4)) / 4 : uniform_unit(rng); };
        Dataset d(dim, "t");
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> x(dim);
            for (auto& v : x) v = value();
            d.add(x, uniform_index(rng, 2) ? Label::Abnormal : Label::Normal);
        }
        const KNNParams p{1 + uniform_index(rng, n), uniform_index(rng, 2) == 1};
        const auto m = train_knn(d, p);
        std::vector<double> q(dim);
        for (auto& v : q) v = value();
        const auto expected = test::knn_oracle(d, q, p.neighbors_k, p.inverse_distance_weighting_i);
        if (!(m.predict(q, Exec::Serial) == expected)) ++mismatches;
        if (!(m.predict(q, Exec::Parallel) == expected)) ++mismatches;
    }
    return {mismatches == 0, fmt::format("1000 trials, {} label/score mismatches", mismatches)};
}

// --- 8 ---------------------------------------------------------------------------

Outcome nb_closed_form() {
    Rng rng(8008);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t dim = 1 + uniform_index(rng, 4);
        const std::size_t n = 4 + uniform_index(rng, 40);
        Dataset d(dim, "t");
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> x(dim);
            // one constant feature now and then exercises the variance floor
            for (std::size_t f = 0; f < dim; ++f) x[f] = trial % 7 == 0 && f == 0 ? 0.5 : uniform_unit(rng);
            d.add(x, i < 2 ? (i == 0 ? Label::Normal : Label::Abnormal)
                           : (uniform_index(rng, 2) ? Label::Abnormal : Label::Normal));
        }
        const auto m = train_naive_bayes(d, NBParams{});

        std::array<double, 2> count{};
        std::vector<std::array<double, 2>> mean(dim), var(dim);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(d.labels[i] == Label::Abnormal);
            count[c] += 1;
            for (std::size_t f = 0; f < dim; ++f) mean[f][c] += d.row(i)[f];
        }
        for (std::size_t f = 0; f < dim; ++f) {
            for (std::size_t c = 0; c < 2; ++c) mean[f][c] /= count[c];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(d.labels[i] == Label::Abnormal);
            for (std::size_t f = 0; f < dim; ++f) {
                const double dv = d.row(i)[f] - mean[f][c];
                var[f][c] += dv * dv;
            }
        }
        for (std::size_t f = 0; f < dim; ++f) {
            for (std::size_t c = 0; c < 2; ++c) var[f][c] = std::max(var[f][c] / count[c], kNbVarianceFloor);
        }
        for (int q = 0; q < 5; ++q) {
            std::vector<double> x(dim);
            for (auto& v : x) v = uniform_unit(rng) * 1.2 - 0.1;
            std::array<double, 2> j{};
            for (std::size_t c = 0; c < 2; ++c) {
                j[c] = std::log(count[c] / static_cast<double>(n));
                for (std::size_t f = 0; f < dim; ++f) {
                    const double dv = x[f] - mean[f][c];
                    j[c] += -0.5 * std::log(2 * std::numbers::pi * var[f][c]) - dv * dv / (2 * var[f][c]);
                }
            }
            const double mx = std::max(j[0], j[1]);
            const double lse = mx + std::log(std::exp(j[0] - mx) + std::exp(j[1] - mx));
            const auto post = m.log_posterior(x);
            worst = std::max({worst, std::abs(post[0] - (j[0] - lse)), std::abs(post[1] - (j[1] - lse))});
        }
    }
    return {worst <= 1e-9, fmt::format("200 fixtures, 1000 queries, max |error| {:.3g}", worst)};
}

// --- 9 ---------------------------------------------------------------------------

Outcome svm_kkt() {
    const auto d = synth_separable(100, 2, 0.02, 5);
    SVMParams p;
    p.kernel_k = 0;
    p.complexity_c = 8.9;
    const auto m = train_svm(d, p);
    const double tol = 10 * p.smo_tolerance;

    // alpha of each training point, recovered from the support vectors
    std::vector<double> alpha(d.size(), 0.0);
    std::size_t matched = 0;
    for (std::size_t s = 0; s < m.support_count(); ++s) {
        const auto sv = m.support_vector(s);
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto r = d.row(i);
            if (alpha[i] == 0.0 && std::equal(sv.begin(), sv.end(), r.begin())) {
                alpha[i] = std::abs(m.coef[s]);
                ++matched;
                break;
            }
        }
    }
    double worst = 0.0, sum = 0.0;
    std::size_t correct = 0;
    for (double c : m.coef) sum += c;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double y = d.labels[i] == Label::Abnormal ? 1.0 : -1.0;
        const double yf = y * m.decision_value(d.row(i));
        double r = 0.0;
        if (alpha[i] <= 0.0) {
            r = std::max(0.0, 1.0 - yf);
        } else if (alpha[i] >= p.complexity_c - 1e-9) {
            r = std::max(0.0, yf - 1.0);
        } else {
            r = std::abs(yf - 1.0);
        }
        worst = std::max(worst, r);
        correct += m.predict(d.row(i)).label == d.labels[i];
    }
    const double accuracy = static_cast<double>(correct) / static_cast<double>(d.size());
    const bool ok = m.converged && matched == m.support_count() && worst <= tol && std::abs(sum) <= 1e-9 &&
                    accuracy == 1.0;
    return {ok, fmt::format("200 points, {} support vectors, max KKT residual {:.3g} (limit {:.3g}), accuracy {}",
                            m.support_count(), worst, tol, accuracy)};
}

// --- 10 --------------------------------------------------------------------------

Outcome conservation() {
    const auto t0 = std::chrono::steady_clock::now();
    SynthConfig sc;
    sc.sessions = 100000;
    sc.seed = 10;
    const auto sessions = sessions_of(synth_sessions(sc));
    const auto reference = extract_host_features(sessions);
    const auto spec = fit_normalization(reference);
    std::vector<std::uint64_t> source_ids;
    for (const auto& s : sessions) source_ids.push_back(s.session_id);
    std::sort(source_ids.begin(), source_ids.end());
    std::map<std::uint64_t, HostFeatures> expected;
    for (const auto& r : reference) expected[r.session.session_id] = r.host;

    const FunctionClassifier clf("threshold", [](std::span<const double> x) { return from_score(x[0]); });
    std::vector<std::string> failures;
    for (std::size_t workers : {1, 2, 4}) {
        for (std::size_t capacity : {1, 100, 10000}) {
            PipelineConfig pc;
            pc.classifier_worker_count = workers;
            pc.queue_capacity = capacity;
            MemorySink sink;
            const auto summary = run_pipeline(pc, sessions, spec, clf, sink);
            std::vector<std::uint64_t> ids;
            std::size_t host_diff = 0;
            for (const auto& r : sink.records()) {
                ids.push_back(r.record.session.session_id);
                const auto it = expected.find(r.record.session.session_id);
                if (it == expected.end() || it->second != r.record.host) ++host_diff;
            }
            std::sort(ids.begin(), ids.end());
            if (ids != source_ids || host_diff != 0 || summary.sessions_out != sessions.size()) {
                failures.push_back(fmt::format("workers={} capacity={}: {} records, {} host differences", workers,
                                               capacity, ids.size(), host_diff));
            }
        }
    }
    std::string detail = fmt::format("100000 sessions x 9 configurations, {:.1f} s", seconds_since(t0));
    for (const auto& f : failures) detail += "; " + f;
    return {failures.empty(), detail};
}

// --- 11 --------------------------------------------------------------------------

Outcome determinism() {
    test::TempDir dir("acceptance-determinism");
    SynthConfig sc;
    sc.sessions = 3000;
    sc.abnormal_fraction = 0.2;
    sc.seed = 11;
    write_session_log_file(dir / "s.jsonl", synth_sessions(sc));
    std::vector<std::string> failures;
    for (Algorithm a : kAllAlgorithms) {
        const std::string name(to_string(a));
        std::string bytes[2];
        for (int rep = 0; rep < 2; ++rep) {
            const std::string out = dir / fmt::format("{}-{}.json", name, rep);
            std::ostringstream sout, serr;
            const int code = cli_main({"train", "--labeled-sessions", dir / "s.jsonl", "--algo", name, "--seed", "5",
                                       "--out", out},
                                      sout, serr);
            if (code != kExitOk) {
                failures.push_back(fmt::format("{} exit {}: {}", name, code, serr.str()));
                break;
            }
            bytes[rep] = test::read_file(out);
        }
        if (bytes[0].empty() || bytes[0] != bytes[1]) failures.push_back(name + " differs");
    }
    std::string detail = "5 algorithms trained twice with --seed 5";
    for (const auto& f : failures) detail += "; " + f;
    return {failures.empty(), detail};
}

// --- 12 --------------------------------------------------------------------------

Outcome codec() {
    Rng rng(1212);
    std::size_t mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        auto r = test::random_full_record(rng);
        if (i % 10 == 0) r.session.five_tuple.dst_addr = IpAddress::parse("2001:db8::7");
        if (i % 13 == 0) r.session.service = ServiceType("custom-svc");
        if (!(decode_record(encode_record(r)) == r)) ++mismatches;
    }
    const auto golden = encode_record(test::golden_record());
    const bool golden_ok = test::hex(golden) == test::kGoldenHex && decode_record(golden) == test::golden_record();
    return {mismatches == 0 && golden_ok,
            fmt::format("10000 round trips, {} mismatches, golden bytes {}", mismatches, golden_ok ? "match" : "differ")};
}

// --- 13 --------------------------------------------------------------------------

Outcome quality_floor() {
    // class centres 0.25 and 0.75 on the first feature: margin 0.25 = 12.5 sigma
    const double sigma = 0.02;
    const auto d = synth_separable(200, 4, sigma, 13);
    const auto [train, validation] = stratified_split(d, 0.7, derive_seed(13, "split"));
    std::string detail = fmt::format("margin {:.1f} sigma;", 0.25 / sigma);
    bool ok = true;
    for (Algorithm a : {Algorithm::DT, Algorithm::RF, Algorithm::NB}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto grid = default_grid(a);
        const auto r = grid_search(grid, train, validation, 13);
        ok = ok && r.best_f1() >= 0.95;
        detail += fmt::format(" {} F1 {:.4f} ({} points, {:.1f} s)", to_string(a), r.best_f1(), r.table.size(),
                              seconds_since(t0));
    }
    return {ok, detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"grid lattice fidelity", grid_lattices},
        {"metric formula fidelity", metric_formulas},
        {"clamping rule", clamping},
        {"throughput ordering", throughput_ordering},
        {"bottleneck signature", bottleneck},
        {"host-feature oracle", host_oracle},
        {"kNN oracle", knn_oracle_equivalence},
        {"naive Bayes closed form", nb_closed_form},
        {"SVM KKT", svm_kkt},
        {"pipeline conservation", conservation},
        {"training determinism", determinism},
        {"codec", codec},
        {"quality floor", quality_floor},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
