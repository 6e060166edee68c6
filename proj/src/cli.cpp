#include "nids/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "nids/benchmark.hpp"
#include "nids/config.hpp"
#include "nids/flow_assembler.hpp"
#include "nids/model_selection.hpp"
#include "nids/packet_io.hpp"
#include "nids/session_log.hpp"
#include "nids/synth.hpp"
#include "nids/training.hpp"
#include "nids/util.hpp"

namespace fs = std::filesystem;

namespace nids {

namespace {

struct Common {
    std::string config_path;
    std::string run_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << text;
    if (!f) throw ConfigError("failed writing " + path.string());
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunConfig resolve_config(const Common& c) {
    RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config_file(c.config_path);
    if (c.seed_given) cfg.seed = c.seed;
    return cfg;
}

fs::path run_dir_for(const Common& c, const std::string& out) {
    if (!c.run_dir.empty()) return c.run_dir;
    const fs::path p(out);
    return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

/// Records the resolved configuration and the command line of this run.
void record_run(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                const std::vector<std::string>& args) {
    write_text(dir / fmt::format("{}.resolved-config.yaml", command), to_yaml(cfg));
    nlohmann::ordered_json j;
    j["command"] = command;
    j["seed"] = cfg.seed;
    j["args"] = args;
    write_text(dir / fmt::format("{}.command.json", command), j.dump(2) + "\n");
}

ParamPoint parse_params(const std::string& text) {
    if (text.empty()) return {};
    const auto first = text.find_first_not_of(" \t");
    if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
        try {
            return params_from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("--params: ") + e.what());
        }
    }
    ParamPoint out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("--params expects NAME=VALUE pairs");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        double v = 0;
        if (val == "true" || val == "enabled") v = 1;
        else if (val == "false" || val == "disabled") v = 0;
        else {
            try {
                std::size_t used = 0;
                v = std::stod(val, &used);
                if (used != val.size()) throw std::invalid_argument(val);
            } catch (const std::exception&) {
                throw ConfigError(fmt::format("--params: '{}' is not a number", val));
            }
        }
        out.emplace_back(key, v);
    }
    return out;
}

std::string spec_path_for(const std::string& model_path) {
    fs::path p(model_path);
    p.replace_extension(".norm.json");
    return p.string();
}

// --- assemble --------------------------------------------------------------------

int cmd_assemble(const Common& common, const std::string& pcap, const std::string& packets_jsonl,
                 const std::string& out_path, const std::vector<std::string>& args, std::ostream& out) {
    const RunConfig cfg = resolve_config(common);
    PacketReadResult packets;
    if (!pcap.empty()) {
        packets = read_pcap_file(pcap);
    } else {
        std::ifstream f(packets_jsonl);
        if (!f) throw ConfigError("cannot read " + packets_jsonl);
        packets = read_packets_jsonl(f);
    }
    AssemblerStats stats;
    const auto sessions = assemble(packets.events, cfg.assembler, &stats);
    std::vector<LabeledSession> log;
    log.reserve(sessions.size());
    for (const auto& s : sessions) log.push_back({s, std::nullopt});
    write_session_log_file(out_path, log);

    const auto dir = run_dir_for(common, out_path);
    record_run(dir, "assemble", cfg, args);
    nlohmann::ordered_json j;
    j["frames"] = packets.frames;
    j["packets"] = packets.events.size();
    j["skipped_frames"] = packets.skipped;
    j["truncated"] = packets.truncated;
    j["out_of_order_rejected"] = stats.out_of_order_rejected;
    j["sessions"] = sessions.size();
    write_text(dir / "assemble.stats.json", j.dump(2) + "\n");
    if (!packets.warning.empty()) out << "warning: " << packets.warning << "\n";
    out << fmt::format("assembled {} sessions from {} packets ({} frames skipped)\n", sessions.size(),
                       packets.events.size(), packets.skipped);
    return kExitOk;
}

// --- label -------------------------------------------------------------------------

int cmd_label(const Common& common, const std::string& sessions_path, const std::string& truth_path,
              const std::string& out_path, const std::vector<std::string>& args, std::ostream& out) {
    const RunConfig cfg = resolve_config(common);
    auto sessions = read_session_log_file(sessions_path);
    const auto truth = read_ground_truth_file(truth_path);
    const auto st = apply_ground_truth(sessions, truth);
    write_session_log_file(out_path, sessions);

    const auto dir = run_dir_for(common, out_path);
    record_run(dir, "label", cfg, args);
    nlohmann::ordered_json j;
    j["sessions"] = st.sessions;
    j["abnormal"] = st.abnormal;
    j["normal"] = st.sessions - st.abnormal;
    j["truth_rows"] = st.truth_rows;
    j["skipped_rows"] = st.skipped_rows;
    write_text(dir / "label.stats.json", j.dump(2) + "\n");
    out << fmt::format("labeled {} sessions: {} abnormal ({} truth rows, {} skipped)\n", st.sessions,
                       st.abnormal, st.truth_rows, st.skipped_rows);
    return kExitOk;
}

// --- train -------------------------------------------------------------------------

int cmd_train(const Common& common, const std::string& sessions_path, const std::string& algo_name,
              const std::string& params_text, const std::string& search, const std::string& out_path,
              const std::string& spec_out, const std::vector<std::string>& args, std::ostream& out) {
    const RunConfig cfg = resolve_config(common);
    const Algorithm algo = parse_algorithm(algo_name);
    const auto sessions = read_session_log_file(sessions_path);
    if (sessions.empty()) throw ConfigError("no sessions in " + sessions_path);

    const auto started = std::chrono::steady_clock::now();
    const auto prepared =
        prepare_training(sessions, cfg.pipeline.window_capacity, cfg.pipeline.window_include_current);
    const Dataset balanced = downsample(prepared.data, derive_seed(cfg.seed, "downsample"));
    const auto dir = run_dir_for(common, out_path);

    ParamPoint params = parse_params(params_text);
    std::optional<SearchResult> searched;
    if (!search.empty()) {
        GridSpec grid = search == "default" ? default_grid(algo) : GridSpec::from_json(nlohmann::json::parse(read_text(search)));
        if (grid.algorithm != algo) {
            throw ConfigError(fmt::format("grid file is for {} but --algo is {}", to_string(grid.algorithm),
                                          to_string(algo)));
        }
        auto [train, validation] = stratified_split(balanced, 0.7, derive_seed(cfg.seed, "split"));
        searched = grid_search(grid, train, validation, cfg.seed);
        searched->protocol = "seeded 70/30 stratified split of the downsampled training set";
        params = searched->best_params();
        write_text(dir / "search.csv", searched->to_csv());
        auto summary = searched->summary_json();
        summary["grid"] = grid.to_json();
        write_text(dir / "search.json", summary.dump(2) + "\n");
    }

    const TrainedModel model = train_model(algo, balanced, params, cfg.seed);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const auto train_metrics = evaluate(predict_batch(model, balanced), balanced.labels);

    save_model_file(model, out_path);
    const std::string spec_path = spec_out.empty() ? spec_path_for(out_path) : spec_out;
    save_normalization_file(prepared.spec, spec_path);
    record_run(dir, "train", cfg, args);

    nlohmann::ordered_json st;
    st["algorithm"] = to_string(algo);
    st["params"] = params_to_json(model.params);
    st["sessions"] = sessions.size();
    st["training_rows"] = balanced.size();
    st["dimension"] = balanced.dim;
    st["spec_version"] = model.spec_version;
    st["training_metrics"] = train_metrics.to_json();
    st["training_time_s"] = seconds;
    if (searched) st["search_best_f1"] = searched->best_f1();
    st["warnings"] = model.warnings();
    fs::path stats_path(out_path);
    stats_path.replace_extension(".stats.json");
    write_text(stats_path, st.dump(2) + "\n");

    for (const auto& w : model.warnings()) out << "warning: " << w << "\n";
    out << fmt::format("trained {} ({}) on {} rows; training F1 {:.4f}", to_string(algo),
                       params_to_string(model.params), balanced.size(), train_metrics.f1);
    if (searched) out << fmt::format("; search F1 {:.4f} over {} points", searched->best_f1(), searched->table.size());
    out << "\n";
    return kExitOk;
}

// --- bench -------------------------------------------------------------------------

struct BenchFlags {
    std::string sessions;
    std::string model;
    std::string spec;
    std::string rate;
    std::string out;
    std::string csv;
    std::size_t runs = 0;
    std::size_t workers = 0;
    std::string sink;
    double throughput_interval = 0;
    double latency_interval = 0;
};

int cmd_bench(const Common& common, const BenchFlags& f, const std::vector<std::string>& args, std::ostream& out) {
    RunConfig cfg = resolve_config(common);
    if (!f.rate.empty()) {
        if (f.rate == "unlimited") {
            cfg.pipeline.replay_rate.reset();
        } else {
            try {
                cfg.pipeline.replay_rate = std::stod(f.rate);
            } catch (const std::exception&) {
                throw ConfigError("--rate expects a number or 'unlimited'");
            }
        }
    }
    if (f.runs) cfg.bench.runs = f.runs;
    if (f.workers) cfg.pipeline.classifier_worker_count = f.workers;
    if (!f.sink.empty()) {
        auto k = parse_sink_kind(f.sink);
        if (!k) throw ConfigError("--sink must be jsonl-file, embedded-store or null");
        cfg.pipeline.sink = *k;
    }
    if (f.throughput_interval > 0) cfg.bench.throughput_interval_s = f.throughput_interval;
    if (f.latency_interval > 0) cfg.bench.latency_interval_s = f.latency_interval;
    const auto dir = run_dir_for(common, f.out);
    if (cfg.pipeline.sink == SinkKind::JsonlFile && cfg.pipeline.sink_path.empty()) {
        cfg.pipeline.sink_path = (dir / "sink.jsonl").string();
    }
    cfg.validate();

    const auto labeled = read_session_log_file(f.sessions);
    if (labeled.empty()) throw ConfigError("no sessions in " + f.sessions);
    const auto sessions = sessions_of(labeled);

    std::unique_ptr<Classifier> classifier;
    NormalizationSpec spec;
    std::string params_text;
    if (f.model == "null") {
        classifier = std::make_unique<NullClassifier>();
        spec = f.spec.empty() ? fit_normalization(extract_host_features(sessions, cfg.pipeline.window_capacity,
                                                                        cfg.pipeline.window_include_current))
                              : load_normalization_file(f.spec);
    } else {
        spec = load_normalization_file(f.spec.empty() ? spec_path_for(f.model) : f.spec);
        auto model = load_model_file(f.model, spec.fingerprint());
        params_text = params_to_string(model.params);
        classifier = std::make_unique<ModelClassifier>(std::move(model));
    }

    std::vector<BenchReport> reports;
    for (std::size_t run = 0; run < cfg.bench.runs; ++run) {
        PipelineConfig pc = cfg.pipeline;
        if (pc.sink == SinkKind::JsonlFile && cfg.bench.runs > 1) {
            pc.sink_path = fmt::format("{}.{}", cfg.pipeline.sink_path, run + 1);
        }
        auto sink = make_sink(pc);
        const auto summary = run_pipeline(pc, sessions, spec, *classifier, *sink);
        BenchMetadata meta;
        meta.classifier = classifier->id();
        meta.params = params_text;
        meta.rate = pc.replay_rate ? fmt::format("{}", *pc.replay_rate) : "unlimited";
        meta.seed = cfg.seed;
        meta.throughput_interval_s = cfg.bench.throughput_interval_s;
        meta.latency_interval_s = cfg.bench.latency_interval_s;
        BenchReport report = make_report(summary, meta);
        if (const auto* mem = dynamic_cast<const MemorySink*>(sink.get())) {
            std::unordered_map<std::uint64_t, Label> truth;
            for (const auto& l : labeled) {
                if (l.label) truth[l.session.session_id] = l.label->label;
            }
            if (truth.size() == labeled.size()) {
                std::vector<Label> pred, want;
                for (const auto& r : mem->records()) {
                    pred.push_back(r.prediction.label);
                    want.push_back(truth.at(r.record.session.session_id));
                }
                if (!pred.empty()) report.f1 = evaluate(pred, want).f1;
            }
        }
        if (!f.csv.empty()) {
            const std::string path = cfg.bench.runs > 1 ? fmt::format("{}.{}", f.csv, run + 1) : f.csv;
            write_text(path, emit_report(report, ReportFormat::Csv));
        }
        out << fmt::format("run {}/{}: {:.1f} sessions/s, latency {:.3f} ms, classifier busy {:.3f}\n", run + 1,
                           cfg.bench.runs, report.throughput_sessions_per_s, report.latency_ms,
                           report.stage_busy_ratios.at("classifier"));
        reports.push_back(std::move(report));
    }

    if (reports.size() == 1) {
        write_text(f.out, emit_report(reports.front(), ReportFormat::Json));
    } else {
        const auto agg = aggregate(std::move(reports));
        write_text(f.out, agg.to_json().dump(2) + "\n");
        out << fmt::format("mean {:.1f} sessions/s [{:.1f}, {:.1f}], latency {:.3f} ms [{:.3f}, {:.3f}]\n",
                           agg.throughput.mean, agg.throughput.min, agg.throughput.max, agg.latency.mean,
                           agg.latency.min, agg.latency.max);
    }
    record_run(dir, "bench", cfg, args);
    return kExitOk;
}

// --- synth -------------------------------------------------------------------------

int cmd_synth(const Common& common, SynthConfig sc, const std::string& out_path, const std::string& truth_out,
              const std::vector<std::string>& args, std::ostream& out) {
    const RunConfig cfg = resolve_config(common);
    sc.seed = cfg.seed;
    auto sessions = synth_sessions(sc);
    if (!truth_out.empty()) {
        std::string csv = "src,sport,dst,dport,proto,start_time,end_time,attack_cat\n";
        for (const auto& l : sessions) {
            if (!l.label || !l.label->is_abnormal()) continue;
            const auto& s = l.session;
            const double start = static_cast<double>(s.timestamp_ms) / 1000.0;
            csv += fmt::format("{},{},{},{},{},{:.3f},{:.6f},{}\n", s.five_tuple.src_addr.to_string(),
                               s.five_tuple.src_port, s.five_tuple.dst_addr.to_string(), s.five_tuple.dst_port,
                               to_string(s.five_tuple.protocol), start, start + s.duration_s,
                               l.label->attack_category.value_or(""));
        }
        write_text(truth_out, csv);
    }
    write_session_log_file(out_path, sessions);
    record_run(run_dir_for(common, out_path), "synth", cfg, args);
    std::size_t abnormal = 0;
    for (const auto& l : sessions) abnormal += l.label && l.label->is_abnormal();
    out << fmt::format("wrote {} sessions ({} abnormal)\n", sessions.size(), abnormal);
    return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Streaming network intrusion detection pipeline and benchmark harness", "nids"};
    app.require_subcommand(1);
    Common common;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "YAML run configuration")->check(CLI::ExistingFile);
        sub->add_option("--run-dir", common.run_dir, "directory for the resolved config and run records");
        sub->add_option("--seed", common.seed, "run seed (overrides the config file)");
    };

    std::string pcap, packets_jsonl, out_path;
    auto* assemble_cmd = app.add_subcommand("assemble", "build a session log from packets");
    auto* in_group = assemble_cmd->add_option_group("input");
    in_group->add_option("--pcap", pcap, "classic pcap file");
    in_group->add_option("--packets-jsonl", packets_jsonl, "packet events, one JSON object per line");
    in_group->require_option(1);
    assemble_cmd->add_option("--out", out_path, "session log to write")->required();
    add_common(assemble_cmd);

    std::string sessions_path, truth_path;
    auto* label_cmd = app.add_subcommand("label", "label sessions from a ground-truth CSV");
    label_cmd->add_option("--sessions", sessions_path)->required();
    label_cmd->add_option("--ground-truth", truth_path)->required();
    label_cmd->add_option("--out", out_path)->required();
    add_common(label_cmd);

    std::string algo, params_text, search, spec_out;
    auto* train_cmd = app.add_subcommand("train", "fit normalization and train a classifier");
    train_cmd->add_option("--labeled-sessions", sessions_path)->required();
    train_cmd->add_option("--algo", algo, "dt, rf, nb, svm or knn")->required();
    auto* params_opt = train_cmd->add_option("--params", params_text, "NAME=VALUE,... or a JSON object");
    auto* search_opt = train_cmd->add_option("--search", search, "grid JSON file, or 'default' for the built-in grid");
    params_opt->excludes(search_opt);
    train_cmd->add_option("--out", out_path, "model file")->required();
    train_cmd->add_option("--spec-out", spec_out, "normalization file (default: next to the model)");
    add_common(train_cmd);

    BenchFlags bf;
    auto* bench_cmd = app.add_subcommand("bench", "replay sessions through the pipeline and report metrics");
    bench_cmd->add_option("--sessions", bf.sessions)->required();
    bench_cmd->add_option("--model", bf.model, "model file, or 'null' for the null classifier")->required();
    bench_cmd->add_option("--spec", bf.spec, "normalization file (default: next to the model)");
    bench_cmd->add_option("--rate", bf.rate, "sessions per second, or 'unlimited'");
    bench_cmd->add_option("--runs", bf.runs, "measurement runs");
    bench_cmd->add_option("--workers", bf.workers, "classifier workers");
    bench_cmd->add_option("--sink", bf.sink, "jsonl-file, embedded-store or null");
    bench_cmd->add_option("--throughput-interval", bf.throughput_interval, "seconds");
    bench_cmd->add_option("--latency-interval", bf.latency_interval, "seconds");
    bench_cmd->add_option("--out", bf.out, "report JSON")->required();
    bench_cmd->add_option("--csv", bf.csv, "report CSV");
    add_common(bench_cmd);

    SynthConfig sc;
    std::string truth_out;
    auto* synth_cmd = app.add_subcommand("synth", "generate a labeled synthetic session log");
    synth_cmd->add_option("--count", sc.sessions, "number of sessions");
    synth_cmd->add_option("--abnormal-fraction", sc.abnormal_fraction);
    synth_cmd->add_option("--overlap", sc.overlap, "probability of borrowing the other class's traffic shape");
    synth_cmd->add_option("--destinations", sc.destinations);
    synth_cmd->add_option("--sessions-per-s", sc.sessions_per_s);
    synth_cmd->add_option("--out", out_path)->required();
    synth_cmd->add_option("--ground-truth-out", truth_out, "also write the abnormal sessions as ground-truth CSV");
    add_common(synth_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    common.seed_given = !app.get_subcommands().front()->get_option("--seed")->empty();

    try {
        if (assemble_cmd->parsed()) return cmd_assemble(common, pcap, packets_jsonl, out_path, args, out);
        if (label_cmd->parsed()) return cmd_label(common, sessions_path, truth_path, out_path, args, out);
        if (train_cmd->parsed()) {
            return cmd_train(common, sessions_path, algo, params_text, search, out_path, spec_out, args, out);
        }
        if (bench_cmd->parsed()) return cmd_bench(common, bf, args, out);
        if (synth_cmd->parsed()) return cmd_synth(common, sc, out_path, truth_out, args, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}

}  // namespace nids
