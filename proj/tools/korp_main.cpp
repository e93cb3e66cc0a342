#include "korp/container.hpp"
#include "korp/edf.hpp"
#include "korp/errors.hpp"
#include "korp/log.hpp"
#include "korp/pipeline.hpp"
#include "korp/preprocess.hpp"
#include "korp/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

namespace kp = korp::pipeline;

struct CompareArgs {
    std::string input;
    std::string events;
    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool no_ica = false;
    double threshold = 0.0;
    bool threshold_set = false;
};

kp::PipelineConfig resolve_config(const CompareArgs& a) {
    kp::PipelineConfig cfg;
    if (!a.config_path.empty()) cfg = kp::load_config(a.config_path);
    if (!a.input.empty()) cfg.input = a.input;
    if (!a.events.empty()) cfg.events = a.events;
    if (!a.out.empty()) cfg.out_dir = a.out;
    if (a.seed_set) cfg.seed = a.seed;
    if (a.no_ica) cfg.ica = false;
    if (a.threshold_set) cfg.ica_threshold = a.threshold;
    return cfg;
}

void add_compare_flags(CLI::App* cmd, CompareArgs& a, bool need_out) {
    cmd->add_option("--input", a.input, "Container directory or EDF file")->required();
    cmd->add_option("--events", a.events, "Events CSV replacing embedded events");
    cmd->add_option("--config", a.config_path, "JSON configuration file");
    auto* out = cmd->add_option("--out", a.out, "Output directory");
    if (need_out) out->required();
    cmd->add_option("--seed", a.seed, "Analysis seed")->each([&a](const std::string&) {
        a.seed_set = true;
    });
    cmd->add_flag("--no-ica", a.no_ica, "Disable component removal in the clean arm");
    cmd->add_option("--threshold", a.threshold, "Frontal flagging threshold")
        ->each([&a](const std::string&) { a.threshold_set = true; });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase-synchronization analysis toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kp::kVersion);

    // ingest
    std::string in_input, in_events, in_out;
    auto* ingest = app.add_subcommand("ingest", "Convert an EDF file to a container");
    ingest->add_option("--input", in_input, "EDF file")->required();
    ingest->add_option("--events", in_events, "Events CSV replacing embedded events");
    ingest->add_option("--out", in_out, "Container directory to write")->required();

    // synth
    std::string sy_scenario = "coupled", sy_out;
    std::uint64_t sy_seed = 42;
    std::size_t sy_targets = 200, sy_nontargets = 50;
    bool sy_truth = false;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic recording");
    synth->add_option("--scenario", sy_scenario,
                      "coupled | null_gain | independent | regional");
    synth->add_option("--seed", sy_seed, "Generator seed");
    synth->add_option("--targets", sy_targets, "Target trial count");
    synth->add_option("--nontargets", sy_nontargets, "Non-target trial count");
    synth->add_flag("--truth", sy_truth, "Also write ground truth under <out>/truth");
    synth->add_option("--out", sy_out, "Container directory to write")->required();

    // run
    CompareArgs run_args;
    std::string run_arm = "raw";
    auto* run = app.add_subcommand("run", "Run a single analysis arm");
    add_compare_flags(run, run_args, true);
    run->add_option("--arm", run_arm, "clean | raw");

    // compare
    CompareArgs cmp_args;
    auto* compare = app.add_subcommand(
        "compare", "Run both arms, the mediation battery, and write reports");
    add_compare_flags(compare, cmp_args, true);

    // report
    std::string rp_input, rp_out;
    auto* report = app.add_subcommand("report",
                                      "Re-emit table and figures from a report.json");
    report->add_option("--input", rp_input, "Existing report.json")->required();
    report->add_option("--out", rp_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            korp::Recording rec = kp::load_input(in_input, in_events);
            korp::container::save(in_out, rec);
            std::cout << "wrote " << in_out << " (" << rec.n_channels() << " channels, "
                      << rec.n_samples() << " samples, " << rec.events.size()
                      << " events)\n";
        } else if (*synth) {
            const auto scenario = korp::synth::scenario_from_name(sy_scenario);
            const auto setup =
                korp::synth::make_scenario(scenario, sy_seed, sy_targets, sy_nontargets);
            const auto result = korp::synth::synth_eeg(setup.net, setup.spec, sy_seed);
            korp::container::save(sy_out, result.recording);
            if (sy_truth) {
                korp::synth::save_ground_truth(std::filesystem::path(sy_out) / "truth",
                                               result.truth);
            }
            std::cout << "wrote " << sy_out << " (" << sy_scenario << ", "
                      << result.recording.n_samples() << " samples, "
                      << result.recording.events.size() << " events)\n";
        } else if (*run) {
            const kp::PipelineConfig cfg = resolve_config(run_args);
            const auto arm = run_arm == "clean" ? kp::Arm::clean : kp::Arm::raw;
            if (run_arm != "clean" && run_arm != "raw") {
                throw korp::ValidationError("run: --arm must be clean or raw");
            }
            const korp::Recording rec = kp::load_input(cfg.input, cfg.events);
            const kp::ArmOutputs out = kp::run_single_pipeline(cfg, arm, rec);
            std::filesystem::create_directories(cfg.out_dir);
            // Reuse the dual-report schema with the one computed arm echoed
            // into both slots; the battery is a compare-only product.
            std::ostringstream msg;
            msg << "arm " << out.metrics.arm << ": global r = " << out.metrics.global_r.r
                << ", trial r = " << out.metrics.trial_r.r
                << ", lag = " << out.metrics.lag.lag_seconds << " s";
            nlohmann::ordered_json j;
            j["schema_version"] = kp::kReportSchemaVersion;
            j["software_version"] = kp::kVersion;
            j["config"] = nlohmann::ordered_json::parse(kp::config_to_json(cfg));
            j["arm"] = nlohmann::ordered_json::parse(
                kp::report_to_json([&] {
                    kp::ComparisonReport r;
                    r.generated_at = "-";
                    r.config = cfg;
                    r.clean = out.metrics;
                    r.raw = out.metrics;
                    r.clean_series = out.series;
                    r.raw_series = out.series;
                    return r;
                }()))["arms"][out.metrics.arm];
            const std::filesystem::path path =
                std::filesystem::path(cfg.out_dir) / ("arm_" + out.metrics.arm + ".json");
            std::ofstream f(path, std::ios::binary | std::ios::trunc);
            if (!f) throw korp::IoError("run: cannot write " + path.string());
            f << j.dump(2) << "\n";
            std::cout << msg.str() << "\nwrote " << path.string() << "\n";
        } else if (*compare) {
            const kp::PipelineConfig cfg = resolve_config(cmp_args);
            const kp::ComparisonReport rep = kp::run_dual_pipeline(cfg);
            kp::emit_report(rep, cfg.out_dir);
            std::cout << "trial r: clean = " << rep.clean.trial_r.r
                      << ", raw = " << rep.raw.trial_r.r << "\nwrote " << cfg.out_dir
                      << "/report.json, table1.csv, figures/\n";
        } else if (*report) {
            std::ifstream f(rp_input, std::ios::binary);
            if (!f) throw korp::IoError("report: cannot read " + rp_input);
            std::ostringstream buf;
            buf << f.rdbuf();
            const kp::ComparisonReport rep = kp::report_from_json(buf.str());
            kp::emit_report(rep, rp_out);
            std::cout << "wrote " << rp_out << "/report.json, table1.csv, figures/\n";
        }
    } catch (const korp::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const korp::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const korp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
