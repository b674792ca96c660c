// rarepath: run last-particle and Monte Carlo estimations from a config file.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rarepath/harness.hpp"
#include "validation/validation.hpp"

namespace fs = std::filesystem;
using namespace rarepath;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    std::optional<int> workers;
    std::string out;
    std::string method;
    std::vector<std::string> sets;
    bool strict = false;
};

void add_common(CLI::App* app, Common& c, bool replicates)
{
    app->add_option("--config", c.config, "Configuration file (key = value lines)")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "Master seed");
    if (replicates) app->add_option("--replicates", c.replicates, "Number of independent replicates K");
    app->add_option("--workers", c.workers, "Concurrent replicates (0: all cores, 1: serial)");
    app->add_option("--out", c.out, "Output directory");
    app->add_option("--method", c.method, "last_particle, simple_mc, vlmc or ideal");
    app->add_option("--set", c.sets, "Override a configuration key, e.g. --set T=30")->take_all();
    app->add_flag("--strict", c.strict, "Exit with status 2 if any replicate aborts");
}

ExperimentConfig build_config(const Common& c)
{
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.replicates) cfg.replicates = *c.replicates;
    if (c.workers) cfg.workers = *c.workers;
    if (!c.out.empty()) cfg.out = c.out;
    if (!c.method.empty()) cfg.method = parse_method_kind(c.method);
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    cfg.finalize();
    return cfg;
}

void write_file(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
}

int finish(const ExperimentReport& r, const Common& c)
{
    for (const auto& rec : r.replicates)
        if (!rec.ok()) std::cerr << "replicate " << rec.index << " aborted: " << rec.error << '\n';
    const bool aborted = r.summary.aborted > 0 || (r.companion_summary && r.companion_summary->aborted > 0);
    return c.strict && aborted ? 2 : 0;
}

int cmd_estimate(const Common& c)
{
    ExperimentConfig cfg = build_config(c);
    cfg.replicates = 1;
    const auto report = run_experiment(cfg);
    const std::string json = to_json(report).dump(2);
    if (!cfg.out.empty()) write_file(fs::path(cfg.out) / "estimate.json", json + "\n");
    std::cout << json << '\n';
    return finish(report, c);
}

int cmd_experiment(const Common& c)
{
    const ExperimentConfig cfg = build_config(c);
    const auto report = run_experiment(cfg);
    const auto json = to_json(report);
    if (!cfg.out.empty()) {
        write_file(fs::path(cfg.out) / "report.json", json.dump(2) + "\n");
        std::ostringstream csv;
        write_replicates_csv(report, csv);
        write_file(fs::path(cfg.out) / "replicates.csv", csv.str());
    }
    nlohmann::json brief{{"summary", json["summary"]}};
    if (json.contains("companion")) brief["companion_summary"] = json["companion"]["summary"];
    if (json.contains("quality_ratio")) brief["quality_ratio"] = json["quality_ratio"];
    std::cout << brief.dump(2) << '\n';
    return finish(report, c);
}

int cmd_figure(const Common& c, const std::string& id)
{
    const ExperimentConfig cfg = build_config(c);
    const auto report = run_experiment(cfg);
    std::ostringstream csv;
    emit_figure_data(report, id, csv);
    if (cfg.out.empty()) {
        std::cout << csv.str();
    } else {
        write_file(fs::path(cfg.out) / (id + ".csv"), csv.str());
        write_file(fs::path(cfg.out) / "report.json", to_json(report).dump(2) + "\n");
        std::cout << "wrote " << (fs::path(cfg.out) / (id + ".csv")).string() << '\n';
    }
    return finish(report, c);
}

int cmd_validate(std::uint64_t seed, double scale, const std::vector<std::string>& only)
{
    validation::SuiteOptions o{seed, scale};
    int failed = 0, total = 0;
    for (const auto& s : validation::suites()) {
        if (!only.empty() && std::find(only.begin(), only.end(), s.id) == only.end()) continue;
        for (const auto& r : s.run(o)) {
            ++total;
            if (!r.passed) ++failed;
            std::cout << (r.passed ? "PASS " : "FAIL ") << s.id << ": " << r.name << " -- " << r.detail << std::endl;
        }
    }
    std::cout << total - failed << "/" << total << " checks passed\n";
    return failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Rare-event probability estimation for absorbed Markov chain trajectories"};
    app.require_subcommand(1);

    Common est, exp, fig;
    auto* estimate = app.add_subcommand("estimate", "Run a single estimation and print it as JSON");
    add_common(estimate, est, false);
    auto* experiment = app.add_subcommand("experiment", "Run K replicates and summarize them");
    add_common(experiment, exp, true);
    auto* figure = app.add_subcommand("figure", "Run an experiment and emit plot data as CSV");
    add_common(figure, fig, true);
    std::string figure_id;
    figure->add_option("--figure", figure_id, "fig1, fig2, fig3, fig4, fig5 or table_quality")->required();

    auto* validate = app.add_subcommand("validate", "Run the property suites");
    std::uint64_t vseed = validation::SuiteOptions{}.seed;
    double vscale = 1.0;
    std::vector<std::string> only;
    validate->add_option("--seed", vseed, "Seed of the suites");
    validate->add_option("--scale", vscale, "Multiplier on sample sizes")->check(CLI::PositiveNumber);
    validate->add_option("--suite", only, "Run only these suites (repeatable)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*estimate) return cmd_estimate(est);
        if (*experiment) return cmd_experiment(exp);
        if (*figure) return cmd_figure(fig, figure_id);
        if (*validate) return cmd_validate(vseed, vscale, only);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
