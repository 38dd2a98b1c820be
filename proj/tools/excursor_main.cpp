// excursor — excursion-set statistics of time series.
//
// Subcommands cover the full pipeline: synth (seeded datasets), density
// (empirical feature densities with Gaussian baselines), tpcf (correlation
// curves), psi (market x market pair-correlation matrices), ahc (Ward
// dendrograms), partition (windowed lambda trace + delta matrix). Every run
// writes a manifest.json; `excursor replay manifest.json --out DIR`
// reproduces the data files byte for byte.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "excursor/excursor.hpp"

namespace fs = std::filesystem;
using excursor::json;

namespace {

// ---------------------------------------------------------------------------
// Small parsing helpers (raw option strings are kept in the manifest, so
// replay goes through the exact same code path)
// ---------------------------------------------------------------------------

std::vector<std::string> split_list(const std::string& s, char delim = ',') {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, delim)) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// "a,b,c" or "min:max:step"
std::vector<double> parse_grid(const std::string& s) {
    if (s.find(':') != std::string::npos) {
        const auto parts = split_list(s, ':');
        if (parts.size() != 3) throw std::invalid_argument("grid must be min:max:step");
        const double lo = excursor::parse_double(parts[0]);
        const double hi = excursor::parse_double(parts[1]);
        const double step = excursor::parse_double(parts[2]);
        if (!(step > 0.0) || hi < lo) throw std::invalid_argument("bad grid bounds");
        std::vector<double> grid;
        for (double v = lo; v <= hi + 1e-12; v += step) grid.push_back(v);
        return grid;
    }
    std::vector<double> grid;
    for (const auto& item : split_list(s)) grid.push_back(excursor::parse_double(item));
    return grid;
}

excursor::RrMode rr_from_name(const std::string& s) {
    if (s == "mc" || s == "monte-carlo") return excursor::RrMode::kMonteCarlo;
    if (s == "analytic") return excursor::RrMode::kAnalytic;
    throw std::invalid_argument("unknown rr mode: " + s);
}

struct Dataset {
    std::vector<excursor::StandardizedSeries> series;
};

// CSV price tables -> aligned -> log-returns -> standardized, one series per
// market column.
Dataset load_dataset(const json& p) {
    std::vector<excursor::PriceTable> tables;
    excursor::CsvOptions csv;
    csv.date_column = p.value("date_column", std::string{});
    const std::string delim = p.value("delimiter", std::string{","});
    if (delim.size() != 1) throw std::invalid_argument("delimiter must be a single character");
    csv.delimiter = delim[0];
    for (const auto& path : p.at("inputs").get<std::vector<std::string>>()) {
        tables.push_back(excursor::load_price_table(path, csv));
    }
    const auto policy = p.value("align", std::string{"intersect"}) == "forward-fill"
                            ? excursor::AlignPolicy::kForwardFill
                            : excursor::AlignPolicy::kIntersect;
    const auto table = excursor::align(tables, policy);
    Dataset ds;
    ds.series.reserve(table.n_cols());
    for (const auto& label : table.labels) {
        ds.series.push_back(excursor::standardize(excursor::log_returns(table, label)));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

struct Run {
    fs::path out_dir;
    std::vector<std::string> outputs;

    void write(const std::string& name, const std::string& content) {
        excursor::write_atomic(out_dir / name, content);
        outputs.push_back(name);
    }
};

void write_manifest(Run& run, const std::string& command, const json& params) {
    json manifest;
    manifest["command"] = command;
    manifest["version"] = std::string(excursor::kVersion);
    manifest["rng_version"] = std::string(excursor::kRngVersion);
    manifest["seed"] = params.value("seed", std::uint64_t{0});
    manifest["parameters"] = params;
    manifest["inputs"] = params.contains("inputs") ? params["inputs"] : json::array();
    manifest["outputs"] = run.outputs;
    excursor::write_atomic(run.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string theta_tag(double theta) {
    std::string t = excursor::format_double(theta);
    for (char& c : t) {
        if (c == '.') c = 'p';
    }
    return t;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

void run_synth(const json& p, Run& run) {
    excursor::SynthSpec spec;
    const std::string kind = p.value("kind", std::string{"white"});
    if (kind == "white") {
        spec.kind = excursor::SynthKind::kWhite;
    } else if (kind == "smoothed") {
        spec.kind = excursor::SynthKind::kSmoothed;
    } else if (kind == "factor") {
        spec.kind = excursor::SynthKind::kFactorModel;
    } else {
        throw std::invalid_argument("unknown synth kind: " + kind);
    }
    spec.n = p.value("n", std::size_t{1000});
    spec.count = p.value("count", std::size_t{1});
    spec.seed = p.value("seed", std::uint64_t{1});
    spec.kernel_width = p.value("width", 5.0);
    spec.groups = p.value("groups", 1);
    spec.loading = p.value("loading", 0.0);

    const auto series = excursor::synth(spec);
    const auto table = excursor::synthetic_price_table(series, p.value("start_date", std::string{"1995-01-02"}),
                                                       p.value("return_scale", 0.01));
    std::ostringstream csv;
    excursor::write_price_table(table, csv);
    run.write(p.value("name", std::string{"dataset.csv"}), csv.str());
}

void run_density(const json& p, Run& run) {
    const auto ds = load_dataset(p);
    const auto grid = parse_grid(p.value("theta", std::string{"-3:3:0.25"}));
    const double band = p.value("band", 0.25);
    const auto features = split_list(p.value("features", std::string{"pk,up"}));

    std::string csv = "label,kind,theta,density,err,theory\n";
    json moments_json = json::array();
    for (const auto& s : ds.series) {
        const auto moments = excursor::estimate_moments(s);
        moments_json.push_back(excursor::moments_to_json(moments, s.label));
        for (const auto& f : features) {
            const auto kind = excursor::feature_from_name(f);
            const auto band_mode = kind == excursor::FeatureKind::kUpcross
                                       ? excursor::DensityBand::kCumulative
                                       : excursor::DensityBand::kDifferential;
            const auto curve = excursor::density_curve(s, kind, grid, band_mode, band);
            for (const auto& pt : curve) {
                double theory = 0.0;
                switch (kind) {
                    case excursor::FeatureKind::kPeak:
                        theory = excursor::gaussian_peak_density(pt.theta, moments);
                        break;
                    case excursor::FeatureKind::kTrough:
                        theory = excursor::gaussian_trough_density(pt.theta, moments);
                        break;
                    case excursor::FeatureKind::kUpcross:
                        theory = excursor::gaussian_upcross_density(pt.theta, moments);
                        break;
                }
                csv += s.label + "," + f + "," + excursor::format_double(pt.theta) + "," +
                       excursor::format_double(pt.density) + "," + excursor::format_double(pt.err) +
                       "," + excursor::format_double(theory) + "\n";
            }
        }
    }
    run.write("density.csv", csv);
    run.write("moments.json", moments_json.dump(2) + "\n");
}

excursor::XiOptions xi_options_from(const json& p) {
    excursor::XiOptions opts;
    opts.tau_max = p.value("tau_max", 30);
    opts.estimator = excursor::estimator_from_name(p.value("estimator", std::string{"natural"}));
    opts.rr_mode = rr_from_name(p.value("rr", std::string{"mc"}));
    opts.realizations = p.value("realizations", 100);
    opts.seed = p.value("seed", std::uint64_t{1});
    return opts;
}

void run_tpcf(const json& p, Run& run) {
    const auto ds = load_dataset(p);
    const auto opts = xi_options_from(p);
    const double theta = p.value("theta_value", 0.0);
    const auto feature = excursor::feature_from_name(p.value("feature", std::string{"pk"}));
    const auto cross_name = p.value("cross_feature", std::string{});
    const auto spec_a = excursor::spec_for(feature, theta);
    const auto spec_b = cross_name.empty()
                            ? spec_a
                            : excursor::spec_for(excursor::feature_from_name(cross_name),
                                                 cross_name == "tr" ? -theta : theta);

    auto series_by_label = [&](const std::string& label) -> const excursor::StandardizedSeries& {
        for (const auto& s : ds.series) {
            if (s.label == label) return s;
        }
        throw std::invalid_argument("no series labelled '" + label + "'");
    };

    std::vector<std::string> pairs = p.value("pairs", std::vector<std::string>{});
    if (pairs.empty()) {
        for (const auto& s : ds.series) pairs.push_back(s.label);  // auto mode per series
    }

    std::string csv;
    for (const auto& pair : pairs) {
        const auto pos = pair.find(':');
        excursor::CorrelationCurve curve;
        excursor::XiOptions pair_opts = opts;
        if (pos == std::string::npos) {
            const auto& a = series_by_label(pair);
            pair_opts.seed = excursor::derive(excursor::derive(opts.seed, a.label), a.label);
            curve = excursor::xi_pipeline(a, nullptr, spec_a, spec_b, pair_opts);
        } else {
            const auto& a = series_by_label(pair.substr(0, pos));
            const auto& b = series_by_label(pair.substr(pos + 1));
            pair_opts.seed = excursor::derive(excursor::derive(opts.seed, a.label), b.label);
            curve = excursor::xi_pipeline(a, &b, spec_a, spec_b, pair_opts);
        }
        const std::string block = excursor::curve_to_csv(curve);
        if (csv.empty()) {
            csv = block;
        } else {
            csv += block.substr(block.find('\n') + 1);  // drop repeated header
        }
    }
    run.write("tpcf.csv", csv);
}

excursor::PsiOptions psi_options_from(const json& p) {
    excursor::PsiOptions opts;
    opts.tau_mode = p.value("tau_mode", std::string{"max"}) == "fixed" ? excursor::TauMode::kFixed
                                                                       : excursor::TauMode::kMaxWindow;
    opts.window = p.value("tau_max", 10);
    opts.estimator = excursor::estimator_from_name(p.value("estimator", std::string{"natural"}));
    opts.rr_mode = rr_from_name(p.value("rr", std::string{"mc"}));
    opts.realizations = p.value("realizations", 100);
    opts.seed = p.value("seed", std::uint64_t{1});
    return opts;
}

void write_psi_files(Run& run, const excursor::PsiMatrix& psi, const std::string& stem) {
    run.write(stem + ".csv", excursor::psi_to_csv(psi));
    run.write(stem + ".json", excursor::psi_to_json(psi).dump(2) + "\n");
    run.write(stem + "_long.csv",
              excursor::matrix_long_csv(psi.labels, psi.labels, psi.values, &psi.defined_mask));
}

void run_psi(const json& p, Run& run) {
    const auto ds = load_dataset(p);
    auto opts = psi_options_from(p);
    const auto feature = excursor::feature_from_name(p.value("feature", std::string{"pk"}));
    const auto cross_name = p.value("cross_feature", std::string{});
    const auto thetas = parse_grid(p.value("theta", std::string{"0"}));
    std::vector<int> taus;
    if (opts.tau_mode == excursor::TauMode::kFixed) {
        for (double t : parse_grid(p.value("tau", std::string{"0,1,2,3"}))) {
            taus.push_back(static_cast<int>(t));
        }
    } else {
        taus.push_back(0);  // unused in max mode
    }

    const std::string fa(excursor::feature_name(feature));
    const std::string fb = cross_name.empty() ? fa : cross_name;
    for (double theta : thetas) {
        const auto spec_a = excursor::spec_for(feature, theta);
        const auto spec_b = cross_name.empty()
                                ? spec_a
                                : excursor::spec_for(excursor::feature_from_name(cross_name),
                                                     cross_name == "tr" ? -theta : theta);
        for (int tau : taus) {
            opts.fixed_tau = tau;
            const auto psi = excursor::build_psi(ds.series, spec_a, spec_b, opts);
            std::string stem = "psi_" + fa + "-" + fb + "_th" + theta_tag(theta);
            if (opts.tau_mode == excursor::TauMode::kFixed) stem += "_tau" + std::to_string(tau);
            write_psi_files(run, psi, stem);
        }
    }
}

void run_ahc(const json& p, Run& run) {
    const auto inputs = p.at("inputs").get<std::vector<std::string>>();
    if (inputs.size() != 1) throw std::invalid_argument("ahc expects exactly one psi JSON input");
    auto psi = excursor::psi_from_json(json::parse(excursor::read_file(inputs[0])));
    if (!psi.fully_defined()) {
        throw std::runtime_error("ahc: psi matrix has undefined elements; refusing to cluster");
    }
    if (!psi.is_symmetric()) psi = excursor::symmetrize(psi);
    const auto dendrogram = excursor::ahc(psi);
    run.write("dendrogram.json", excursor::dendrogram_to_json(dendrogram).dump(2) + "\n");
    run.write("dendrogram.newick", excursor::to_newick(dendrogram) + "\n");
}

void run_partition(const json& p, Run& run) {
    const auto ds = load_dataset(p);
    auto opts = psi_options_from(p);
    const std::size_t window = p.value("window", std::size_t{100});
    const auto feature = excursor::feature_from_name(p.value("feature", std::string{"pk"}));
    const double theta = p.value("theta_value", 0.0);
    const auto spec = excursor::spec_for(feature, theta);

    std::vector<excursor::SegmentSet> segmented;
    segmented.reserve(ds.series.size());
    for (const auto& s : ds.series) segmented.push_back(excursor::segment(s, window));
    const std::size_t n_windows = segmented.front().segments.size();
    for (const auto& seg : segmented) {
        if (seg.segments.size() != n_windows) {
            throw std::runtime_error("partition: window counts differ between series");
        }
    }

    std::vector<excursor::PsiMatrix> psis;
    psis.reserve(n_windows);
    for (std::size_t w = 0; w < n_windows; ++w) {
        std::vector<excursor::StandardizedSeries> slice;
        slice.reserve(ds.series.size());
        for (const auto& seg : segmented) slice.push_back(seg.segments[w]);
        excursor::PsiOptions w_opts = opts;
        w_opts.seed = excursor::derive(excursor::derive(opts.seed, "window"), w);
        psis.push_back(excursor::build_psi(slice, spec, spec, w_opts));
    }
    const auto delta = excursor::build_delta(psis);
    run.write("lambda_trace.csv", excursor::lambda_trace_csv(delta));
    run.write("delta.csv", excursor::delta_to_csv(delta));
    run.write("delta.json", excursor::delta_to_json(delta).dump(2) + "\n");
    std::vector<std::string> window_names;
    window_names.reserve(delta.n);
    for (int w : delta.window_ids) window_names.push_back(std::to_string(w));
    run.write("delta_long.csv",
              excursor::matrix_long_csv(window_names, window_names, delta.values));
}

using CommandFn = void (*)(const json&, Run&);

CommandFn command_fn(const std::string& name) {
    if (name == "synth") return run_synth;
    if (name == "density") return run_density;
    if (name == "tpcf") return run_tpcf;
    if (name == "psi") return run_psi;
    if (name == "ahc") return run_ahc;
    if (name == "partition") return run_partition;
    throw std::invalid_argument("unknown command in manifest: " + name);
}

void execute(const std::string& command, const json& params, const std::string& out_dir) {
    Run run;
    run.out_dir = out_dir;
    fs::create_directories(run.out_dir);
    command_fn(command)(params, run);
    write_manifest(run, command, params);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"excursion-set statistics of time series"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);

    // Shared option storage; each subcommand binds the subset it uses and the
    // bound values land in a parameter json that the manifest records.
    std::string out_dir;
    std::string kind = "white";
    std::size_t n = 1000;
    std::size_t count = 1;
    std::uint64_t seed = 1;
    double width = 5.0;
    int groups = 1;
    double loading = 0.0;
    std::string name = "dataset.csv";
    std::string start_date = "1995-01-02";
    std::vector<std::string> inputs;
    std::string date_column;
    std::string delimiter = ",";
    std::string align_policy = "intersect";
    std::string theta = "0";
    double theta_value = 0.0;
    double band = 0.25;
    std::string features = "pk,up";
    std::string feature = "pk";
    std::string cross_feature;
    std::vector<std::string> pairs;
    int tau_max = 10;
    std::string tau_mode = "max";
    std::string tau = "0,1,2,3";
    std::string estimator = "natural";
    std::string rr = "mc";
    int realizations = 100;
    std::size_t window = 100;
    std::string manifest_path;

    auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "output directory")->required();
    };
    auto add_inputs = [&](CLI::App* cmd) {
        cmd->add_option("--input", inputs, "input CSV file(s)")->required()->expected(-1);
        cmd->add_option("--date-column", date_column, "date column name (default: first column)");
        cmd->add_option("--delimiter", delimiter, "CSV delimiter");
        cmd->add_option("--align", align_policy, "alignment policy: intersect|forward-fill");
    };
    auto add_xi = [&](CLI::App* cmd, int default_tau_max) {
        tau_max = default_tau_max;
        cmd->add_option("--tau-max", tau_max, "lag window in days");
        cmd->add_option("--estimator", estimator, "natural|hamilton|ls");
        cmd->add_option("--rr", rr, "random-pair mode: mc|analytic");
        cmd->add_option("--realizations", realizations, "random catalog realizations");
        cmd->add_option("--seed", seed, "RNG seed");
    };

    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic price table");
    add_out(synth);
    synth->add_option("--kind", kind, "white|smoothed|factor");
    synth->add_option("--n", n, "rows (series length)")->check(CLI::PositiveNumber);
    synth->add_option("--count", count, "number of series")->check(CLI::PositiveNumber);
    synth->add_option("--seed", seed, "RNG seed");
    synth->add_option("--width", width, "smoothing kernel width (smoothed kind)");
    synth->add_option("--groups", groups, "factor groups (factor kind)");
    synth->add_option("--loading", loading, "factor loading in [0,1) (factor kind)");
    synth->add_option("--name", name, "output CSV file name");
    synth->add_option("--start-date", start_date, "first calendar date");

    auto* density = app.add_subcommand("density", "empirical + Gaussian-theory density curves");
    add_out(density);
    add_inputs(density);
    density->add_option("--theta", theta, "theta grid: list or min:max:step")->default_str("-3:3:0.25");
    density->add_option("--band", band, "differential bin width");
    density->add_option("--feature", features, "comma list of pk|tr|up");

    auto* tpcf = app.add_subcommand("tpcf", "unweighted TPCF/TPXF correlation curves");
    add_out(tpcf);
    add_inputs(tpcf);
    tpcf->add_option("--pair", pairs, "label (auto) or labelA:labelB (cross); repeatable");
    tpcf->add_option("--theta", theta_value, "threshold in sigma0 units");
    tpcf->add_option("--feature", feature, "pk|tr|up");
    tpcf->add_option("--cross-feature", cross_feature, "second feature kind (e.g. tr)");
    add_xi(tpcf, 30);

    auto* psi = app.add_subcommand("psi", "pair-correlation matrix Psi = xi + 1");
    add_out(psi);
    add_inputs(psi);
    psi->add_option("--theta", theta, "threshold list");
    psi->add_option("--feature", feature, "pk|tr|up");
    psi->add_option("--cross-feature", cross_feature, "second feature kind (e.g. tr)");
    psi->add_option("--tau-mode", tau_mode, "max|fixed");
    psi->add_option("--tau", tau, "fixed-tau list (fixed mode)");
    add_xi(psi, 10);

    auto* ahc = app.add_subcommand("ahc", "Ward dendrogram from a psi JSON file");
    add_out(ahc);
    ahc->add_option("--input", inputs, "psi JSON file")->required()->expected(1);

    auto* partition = app.add_subcommand("partition", "windowed lambda trace and delta matrix");
    add_out(partition);
    add_inputs(partition);
    partition->add_option("--window", window, "segment length in days");
    partition->add_option("--theta", theta_value, "threshold in sigma0 units");
    partition->add_option("--feature", feature, "pk|tr|up");
    partition->add_option("--tau-mode", tau_mode, "max|fixed");
    add_xi(partition, 10);

    auto* replay = app.add_subcommand("replay", "re-run a command from its manifest");
    replay->add_option("manifest", manifest_path, "manifest.json path")->required();
    replay->add_option("--out", out_dir, "output directory (default: the manifest's)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (replay->parsed()) {
            const json manifest = json::parse(excursor::read_file(manifest_path));
            const std::string dir = out_dir.empty()
                                        ? fs::path(manifest_path).parent_path().string()
                                        : out_dir;
            execute(manifest.at("command").get<std::string>(), manifest.at("parameters"), dir);
            return 0;
        }

        json p;
        std::string command;
        if (synth->parsed()) {
            command = "synth";
            p = {{"kind", kind},     {"n", n},           {"count", count},
                 {"seed", seed},     {"width", width},   {"groups", groups},
                 {"loading", loading}, {"name", name},   {"start_date", start_date}};
        } else if (density->parsed()) {
            command = "density";
            p = {{"inputs", inputs},   {"date_column", date_column}, {"delimiter", delimiter},
                 {"align", align_policy}, {"theta", theta},          {"band", band},
                 {"features", features}};
        } else if (tpcf->parsed()) {
            command = "tpcf";
            p = {{"inputs", inputs},     {"date_column", date_column}, {"delimiter", delimiter},
                 {"align", align_policy}, {"pairs", pairs},            {"theta_value", theta_value},
                 {"feature", feature},   {"cross_feature", cross_feature}, {"tau_max", tau_max},
                 {"estimator", estimator}, {"rr", rr},                 {"realizations", realizations},
                 {"seed", seed}};
        } else if (psi->parsed()) {
            command = "psi";
            p = {{"inputs", inputs},     {"date_column", date_column}, {"delimiter", delimiter},
                 {"align", align_policy}, {"theta", theta},            {"feature", feature},
                 {"cross_feature", cross_feature}, {"tau_mode", tau_mode}, {"tau", tau},
                 {"tau_max", tau_max},   {"estimator", estimator},     {"rr", rr},
                 {"realizations", realizations}, {"seed", seed}};
        } else if (ahc->parsed()) {
            command = "ahc";
            p = {{"inputs", inputs}};
        } else if (partition->parsed()) {
            command = "partition";
            p = {{"inputs", inputs},     {"date_column", date_column}, {"delimiter", delimiter},
                 {"align", align_policy}, {"window", window},          {"theta_value", theta_value},
                 {"feature", feature},   {"tau_mode", tau_mode},       {"tau_max", tau_max},
                 {"estimator", estimator}, {"rr", rr},                 {"realizations", realizations},
                 {"seed", seed}};
        }
        execute(command, p, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "excursor: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
