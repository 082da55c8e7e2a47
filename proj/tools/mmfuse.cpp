// mmfuse: command-line front end for the fusion simulator.

#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mmfuse/mmfuse.hpp"

namespace {

constexpr int kExitValidation = 2;

mmfuse::wire::TcpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

std::vector<mmfuse::ModalityEvent> load_gesture_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mmfuse::IoError("cannot open gesture script: " + path);
    std::vector<mmfuse::ModalityEvent> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        long long t = 0;
        std::string name;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
        if (!(ls >> t) || t < 0) throw mmfuse::ParseError(fmt::format("{}:{}: expected '<t_ms> <gesture>'", path, lineno));
        std::getline(ls, name);
        const auto g = mmfuse::parse_gesture_name(name, true);
        const auto o = mmfuse::is_real(g) ? mmfuse::GestureOutcome::correct(g) : mmfuse::GestureOutcome::missed(g);
        out.push_back(mmfuse::ModalityEvent::gesture(t, o, out.size()));
    }
    return out;
}

void print_modality(const std::vector<mmfuse::ItemResult>& items, mmfuse::Modality m) {
    std::cout << mmfuse::modality_csv(items, m);
    std::vector<double> correct;
    for (const auto& r : items) correct.push_back(r.correct_pct);
    std::cout << fmt::format("# mean accuracy {:.2f}%\n", mmfuse::mean_accuracy(correct));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Priority-based speech/gesture fusion simulator"};
    app.require_subcommand(1);
    std::optional<std::string> config_path;
    app.add_option("--config", config_path, "model config file (default: $MMFUSE_CONFIG, then built-in)");

    auto* simulate = app.add_subcommand("simulate", "reproduce one results table");
    int table = 4;
    std::uint64_t seed = 42;
    std::optional<int> trials;
    int reps = 10;
    bool threads = false;
    simulate->add_option("--table", table, "2 = gesture, 3 = speech, 4 = fused")->required()->check(CLI::IsMember({2, 3, 4}));
    simulate->add_option("--seed", seed, "base seed")->capture_default_str();
    simulate->add_option("--trials", trials, "tables 2/3: trials per repetition (100); table 4: episodes per operation (200)");
    simulate->add_option("--reps", reps, "tables 2/3: repetitions")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_flag("--threads", threads, "one worker thread per item");

    auto* calibrate = app.add_subcommand("calibrate", "solve the detection probability per fused operation");
    std::optional<std::string> op_name;
    calibrate->add_option("--op", op_name, "operation, e.g. \"move down\" or fist");

    auto* serve = app.add_subcommand("serve", "run the fusion server");
    std::optional<int> port;
    std::optional<std::string> gesture_script;
    serve->add_option("--port", port, "TCP port (default: $MMFUSE_PORT, then 7207)");
    serve->add_option("--seed", seed, "base seed; connection k uses seed ^ k")->capture_default_str();
    serve->add_option("--gesture-script", gesture_script, "local band output: lines of '<t_ms> <gesture|none>'");

    auto* repl = app.add_subcommand("repl", "interactive episodes on stdin/stdout");
    repl->add_option("--seed", seed, "seed for wrong-gesture detection draws")->capture_default_str();

    auto* report = app.add_subcommand("report", "run all tables and write CSV, markdown and SVG");
    std::string out_dir;
    report->add_option("--out", out_dir, "output directory")->required();
    report->add_option("--seed", seed, "base seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        const mmfuse::ModelSet models = mmfuse::load_models(config_path);

        if (*simulate) {
            if (table == 2 || table == 3) {
                const int per_rep = trials.value_or(100);
                if (per_rep < 1) throw mmfuse::InvalidInput("--trials must be positive");
                const auto m = table == 2 ? mmfuse::Modality::Emg : mmfuse::Modality::Speech;
                print_modality(mmfuse::run_modality_experiment(m, models, reps, per_rep, seed, threads), m);
            } else {
                const int episodes = trials.value_or(200);
                if (episodes < 4 || episodes % 4 != 0) throw mmfuse::InvalidInput("--trials must be a positive multiple of 4");
                const auto cfg = mmfuse::fusion_config_for(models);
                const auto stats = mmfuse::run_fusion_table(models, cfg, 4, episodes / 4, seed, threads);
                std::vector<mmfuse::FusedRow> rows;
                for (std::size_t i = 0; i < stats.size(); ++i) rows.push_back({mmfuse::kFusionOperations[i].label(), stats[i]});
                std::cout << mmfuse::fused_csv(rows);
                std::cout << fmt::format("# average fused error {:.2f}%\n", mmfuse::fused_error_summary(stats));
            }
            return 0;
        }

        if (*calibrate) {
            const auto cal = mmfuse::calibrate_operations(models);
            std::cout << "operation,g,s,target,d,status\n";
            for (const auto& c : cal) {
                if (op_name && !(mmfuse::parse_operation(*op_name) == c.op)) continue;
                std::cout << fmt::format("{},{:.4f},{:.4f},{:.4f},{:.6f},{}\n", c.op.label(), c.g, c.s, c.target,
                                         c.detection.d,
                                         c.detection.status == mmfuse::DetectionStatus::Calibrated ? "calibrated"
                                                                                                   : "no-fallback-needed");
            }
            return 0;
        }

        if (*serve) {
            mmfuse::wire::ServerOptions opt;
            opt.port = mmfuse::wire::resolve_port(port);
            opt.fusion = mmfuse::fusion_config_for(models);
            opt.base_seed = seed;
            if (gesture_script) opt.local_gestures = load_gesture_script(*gesture_script);
            mmfuse::wire::TcpServer server(std::move(opt));
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "mmfuse: listening on 127.0.0.1:" << server.port() << "\n";
            server.run();
            g_server = nullptr;
            return 0;
        }

        if (*repl) {
            mmfuse::Repl session(mmfuse::fusion_config_for(models), seed);
            return session.run(std::cin, std::cout);
        }

        if (*report) {
            mmfuse::ReportData data;
            data.seed = seed;
            data.gesture_items = mmfuse::run_modality_experiment(mmfuse::Modality::Emg, models, 10, 100, seed);
            data.speech_items = mmfuse::run_modality_experiment(mmfuse::Modality::Speech, models, 10, 100, seed);
            data.calibration = mmfuse::calibrate_operations(models);
            const auto cfg = mmfuse::fusion_config_for(models);
            const auto stats = mmfuse::run_fusion_table(models, cfg, 4, mmfuse::reference::kFusedBlockSize, seed);
            for (std::size_t i = 0; i < stats.size(); ++i) data.fused.push_back({mmfuse::kFusionOperations[i].label(), stats[i]});
            for (const auto& p : mmfuse::emit_report(out_dir, data)) std::cout << p.string() << "\n";
            return 0;
        }
    } catch (const mmfuse::InvalidInput& e) {
        std::cerr << "mmfuse: " << e.what() << "\n";
        return kExitValidation;
    } catch (const mmfuse::ParseError& e) {
        std::cerr << "mmfuse: " << e.what() << "\n";
        return kExitValidation;
    } catch (const mmfuse::CalibrationInfeasible& e) {
        std::cerr << "mmfuse: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "mmfuse: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
