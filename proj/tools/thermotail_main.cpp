// Command-line front end: compute thermal quantities of an instance,
// verify the identity suite, compare bounds against the tail oracle, or
// run the whole demo zoo.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thermotail/thermotail.hpp"

namespace {

using namespace thermotail;

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw std::invalid_argument("empty t value in grid");
        std::size_t pos = 0;
        const double v = std::stod(item, &pos);
        if (pos != item.size()) throw std::invalid_argument("bad t value: " + item);
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty t grid");
    return out;
}

void write_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    out << text;
}

struct Instance {
    SpacePtr space;
    TabulatedFunction f;
};

Instance resolve_instance(const std::string& builtin, const std::string& space_path,
                          const std::string& values_path) {
    if (!builtin.empty()) {
        const ZooEntry& e = zoo_entry(builtin);
        return Instance{e.space, e.f};
    }
    if (space_path.empty() || values_path.empty())
        throw std::invalid_argument("need either a builtin name or both --space and --values");
    SpacePtr space = io::load_space_file(space_path);
    TabulatedFunction f = io::load_function_file(space, values_path);
    return Instance{std::move(space), std::move(f)};
}

int run_compute(const Instance& inst, double beta, const std::string& format,
                const std::string& output) {
    const ThermalState ts(inst.f, beta);
    const Hypotheses h = compute_hypotheses(inst.f);
    const double log_z = ts.log_partition();
    const std::vector<std::pair<const char*, double>> quantities = {
        {"z", std::exp(log_z)},
        {"log_z", log_z},
        {"thermal_mean", ts.profile().mean(beta)},
        {"entropy", canonical_entropy(ts)},
        {"free_energy", free_energy(ts)},
        {"thermal_variance", ts.profile().variance(beta)},
        {"r2_sup", h.r2_sup},
        {"sigma2_sup", h.v_sup},
        {"df_sup", h.df_sup},
        {"w_sup", h.w_sup},
    };
    std::string text;
    if (format == "json") {
        text += "{";
        for (std::size_t i = 0; i < quantities.size(); ++i) {
            if (i) text += ",";
            text += "\"" + std::string(quantities[i].first) + "\":" + io::format_number(quantities[i].second);
        }
        text += "}\n";
    } else {
        text += "quantity,value\n";
        for (const auto& [name, value] : quantities)
            text += std::string(name) + "," + io::format_number(value) + "\n";
    }
    write_output(text, output);
    return 0;
}

int run_verify(std::uint64_t seed, std::uint64_t trials, const std::string& output) {
    const std::vector<CheckReport> reports = run_suite(seed, trials);
    write_output(io::check_reports_jsonl(reports), output);
    for (const CheckReport& r : reports) {
        if (!r.passed) return 1;
    }
    return 0;
}

int run_compare(const std::string& entry_name, const std::string& space_path,
                const std::string& values_path, const std::string& grid_spec,
                std::uint64_t samples, std::uint64_t seed, const std::string& format,
                const std::string& output) {
    const std::vector<double> grid = parse_grid(grid_spec);
    std::optional<ZooEntry> custom;
    const ZooEntry* entry = nullptr;
    if (!entry_name.empty()) {
        entry = &zoo_entry(entry_name);
    } else {
        Instance inst = resolve_instance("", space_path, values_path);
        custom.emplace("custom", "user-supplied instance", inst.space, inst.f,
                       std::vector<std::string>{});
        entry = &*custom;
    }
    const TailReport report = compare(*entry, grid, samples, seed);
    std::string text;
    if (format == "json") {
        text = io::tail_report_json(report).dump() + "\n";
    } else {
        text = io::tail_report_csv(report, true);
    }
    write_output(text, output);
    for (const TailReportRow& row : report.rows) {
        if (!row.sound) return 1;
    }
    return 0;
}

int run_demo_cmd(std::size_t grid_points, std::uint64_t samples, std::uint64_t seed,
                 const std::string& output) {
    std::ostringstream out;
    const int unsound = run_demo(out, grid_points, samples, seed);
    write_output(out.str(), output);
    return unsound == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact canonical-ensemble thermodynamics and concentration bounds on finite product spaces"};
    app.require_subcommand(1);

    std::string function_name, space_path, values_path, output, format = "json";
    double beta = 0.0;
    std::uint64_t seed = 1, trials = 20, samples = 0;
    std::string grid_spec;
    std::size_t grid_points = 20;

    CLI::App* compute = app.add_subcommand("compute", "thermal quantities of one instance");
    compute->add_option("--function", function_name, "builtin instance name (see the zoo)");
    compute->add_option("--space", space_path, "space JSON file");
    compute->add_option("--values", values_path, "function values JSON file");
    compute->add_option("--beta", beta, "inverse temperature")->required();
    compute->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    compute->add_option("--output", output, "output file (default: stdout)");

    CLI::App* verify = app.add_subcommand("verify", "run the identity/inequality suite");
    verify->add_option("--seed", seed, "suite seed");
    verify->add_option("--trials", trials, "number of random instances");
    verify->add_option("--output", output, "output file (default: stdout)");

    CLI::App* cmp = app.add_subcommand("compare", "bounds vs tail oracle on a t grid");
    cmp->add_option("--entry", function_name, "builtin instance name");
    cmp->add_option("--space", space_path, "space JSON file");
    cmp->add_option("--values", values_path, "function values JSON file");
    cmp->add_option("--t", grid_spec, "comma-separated increasing t grid")->required();
    cmp->add_option("--samples", samples, "Monte Carlo samples (0 = exact enumeration)");
    cmp->add_option("--seed", seed, "Monte Carlo seed");
    cmp->add_option("--format", format, "csv or json")->check(CLI::IsMember({"json", "csv"}));
    cmp->add_option("--output", output, "output file (default: stdout)");

    CLI::App* demo = app.add_subcommand("demo", "run the whole zoo with default grids");
    demo->add_option("--grid-points", grid_points, "t grid points per tail side");
    demo->add_option("--samples", samples, "Monte Carlo samples (0 = exact enumeration)");
    demo->add_option("--seed", seed, "Monte Carlo seed");
    demo->add_option("--output", output, "output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (compute->parsed()) {
            if (format.empty()) format = "json";
            const Instance inst = resolve_instance(function_name, space_path, values_path);
            return run_compute(inst, beta, format, output);
        }
        if (verify->parsed()) return run_verify(seed, trials, output);
        if (cmp->parsed()) {
            if (format == "json" && !cmp->count("--format")) format = "csv";
            return run_compare(function_name, space_path, values_path, grid_spec, samples, seed,
                               format, output);
        }
        if (demo->parsed()) return run_demo_cmd(grid_points, samples, seed, output);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const thermotail::EnumerationLimitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
