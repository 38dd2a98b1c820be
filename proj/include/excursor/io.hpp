#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "excursor/cluster.hpp"
#include "excursor/features.hpp"
#include "excursor/matrices.hpp"
#include "excursor/paircorr.hpp"
#include "excursor/spectral.hpp"
#include "excursor/theory.hpp"

namespace excursor {

using nlohmann::json;

/// Write-then-rename so readers never observe a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Spectral
// ---------------------------------------------------------------------------

inline json moments_to_json(const SpectralMoments& m, const std::string& label = {}) {
    json j{{"sigma0", m.sigma0},
           {"sigma1", m.sigma1},
           {"sigma2", m.sigma2},
           {"gamma_big", m.gamma_big},
           {"gamma_small", m.gamma_small},
           {"method", m.method == MomentMethod::kDifference ? "difference" : "spectrum"}};
    if (!label.empty()) j["label"] = label;
    return j;
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

inline std::string_view mode_name(ThresholdMode m) {
    switch (m) {
        case ThresholdMode::kAbove: return "above";
        case ThresholdMode::kBelow: return "below";
        case ThresholdMode::kAt: return "at";
        case ThresholdMode::kBand: return "band";
    }
    return "?";
}

inline json catalog_to_json(const FeatureCatalog& cat) {
    return json{{"label", cat.label},
                {"kind", std::string(feature_name(cat.spec.kind))},
                {"theta", cat.spec.theta},
                {"mode", std::string(mode_name(cat.spec.mode))},
                {"series_length", cat.series_length},
                {"indices", cat.indices}};
}

inline std::string density_to_csv(const std::vector<DensityPoint>& curve) {
    std::string out = "theta,density,error\n";
    for (const auto& p : curve) {
        out += format_double(p.theta) + "," + format_double(p.density) + "," +
               format_double(p.err) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Correlation curves
// ---------------------------------------------------------------------------

inline std::string curve_to_csv(const CorrelationCurve& c) {
    std::string out = "lag,xi,err,n_d,n_r,estimator,label_a,label_b,feature_a,feature_b\n";
    for (std::size_t i = 0; i < c.lags.size(); ++i) {
        out += std::to_string(c.lags[i]) + ",";
        out += c.defined[i] ? format_double(c.xi[i]) : "nan";
        out += "," + format_double(c.err[i]) + "," + std::to_string(c.n_d) + "," +
               std::to_string(c.n_r) + "," + std::string(estimator_name(c.estimator)) + "," +
               c.label_a + "," + c.label_b + "," + std::string(feature_name(c.spec_a.kind)) + "," +
               std::string(feature_name(c.spec_b.kind)) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

inline std::string psi_to_csv(const PsiMatrix& psi) {
    std::string out = "label";
    for (const auto& l : psi.labels) out += "," + l;
    out += "\n";
    for (std::size_t i = 0; i < psi.n; ++i) {
        out += psi.labels[i];
        for (std::size_t j = 0; j < psi.n; ++j) {
            out += ",";
            out += psi.defined(i, j) ? format_double(psi.at(i, j)) : "nan";
        }
        out += "\n";
    }
    return out;
}

inline std::string matrix_long_csv(const std::vector<std::string>& row_names,
                                   const std::vector<std::string>& col_names,
                                   const std::vector<double>& values,
                                   const std::vector<char>* defined = nullptr) {
    std::string out = "row,col,value\n";
    const std::size_t nc = col_names.size();
    for (std::size_t i = 0; i < row_names.size(); ++i) {
        for (std::size_t j = 0; j < nc; ++j) {
            out += row_names[i] + "," + col_names[j] + ",";
            out += (defined == nullptr || (*defined)[i * nc + j]) ? format_double(values[i * nc + j])
                                                                  : "nan";
            out += "\n";
        }
    }
    return out;
}

inline json psi_to_json(const PsiMatrix& psi) {
    json j;
    j["labels"] = psi.labels;
    j["spec"] = {{"feature_a", std::string(feature_name(psi.spec_a.kind))},
                 {"feature_b", std::string(feature_name(psi.spec_b.kind))},
                 {"theta_a", psi.spec_a.theta},
                 {"theta_b", psi.spec_b.theta},
                 {"tau_mode", psi.opts.tau_mode == TauMode::kMaxWindow ? "max" : "fixed"},
                 {"window", psi.opts.window},
                 {"fixed_tau", psi.opts.fixed_tau},
                 {"estimator", std::string(estimator_name(psi.opts.estimator))},
                 {"rr_mode", psi.opts.rr_mode == RrMode::kMonteCarlo ? "monte-carlo" : "analytic"},
                 {"realizations", psi.opts.realizations},
                 {"seed", psi.opts.seed}};
    if (psi.window_id) j["window_id"] = *psi.window_id;
    j["symmetrized"] = psi.symmetrized;
    j["failures"] = psi.failures;
    json rows = json::array();
    for (std::size_t i = 0; i < psi.n; ++i) {
        json row = json::array();
        for (std::size_t j2 = 0; j2 < psi.n; ++j2) {
            if (psi.defined(i, j2)) {
                row.push_back(psi.at(i, j2));
            } else {
                row.push_back(nullptr);
            }
        }
        rows.push_back(std::move(row));
    }
    j["values"] = std::move(rows);
    return j;
}

inline FeatureKind feature_from_name(std::string_view name) {
    if (name == "pk") return FeatureKind::kPeak;
    if (name == "tr") return FeatureKind::kTrough;
    if (name == "up") return FeatureKind::kUpcross;
    throw std::invalid_argument("unknown feature: '" + std::string(name) + "' (expected pk|tr|up)");
}

inline FeatureSpec spec_for(FeatureKind kind, double theta) {
    switch (kind) {
        case FeatureKind::kPeak: return peak_spec(theta);
        case FeatureKind::kTrough: return trough_spec(theta);
        case FeatureKind::kUpcross: return upcross_spec(theta);
    }
    throw std::logic_error("unknown feature kind");
}

inline PsiMatrix psi_from_json(const json& j) {
    PsiMatrix psi;
    psi.labels = j.at("labels").get<std::vector<std::string>>();
    psi.n = psi.labels.size();
    psi.values.assign(psi.n * psi.n, std::numeric_limits<double>::quiet_NaN());
    psi.defined_mask.assign(psi.n * psi.n, 0);
    const auto& rows = j.at("values");
    for (std::size_t i = 0; i < psi.n; ++i) {
        for (std::size_t c = 0; c < psi.n; ++c) {
            const auto& cell = rows.at(i).at(c);
            if (!cell.is_null()) {
                psi.at(i, c) = cell.get<double>();
                psi.defined_mask[i * psi.n + c] = 1;
            }
        }
    }
    const auto& spec = j.at("spec");
    psi.spec_a = spec_for(feature_from_name(spec.at("feature_a").get<std::string>()),
                          spec.at("theta_a").get<double>());
    psi.spec_b = spec_for(feature_from_name(spec.at("feature_b").get<std::string>()),
                          spec.at("theta_b").get<double>());
    psi.opts.tau_mode = spec.at("tau_mode").get<std::string>() == "max" ? TauMode::kMaxWindow
                                                                        : TauMode::kFixed;
    psi.opts.window = spec.at("window").get<int>();
    psi.opts.fixed_tau = spec.at("fixed_tau").get<int>();
    psi.opts.estimator = estimator_from_name(spec.at("estimator").get<std::string>());
    psi.opts.realizations = spec.at("realizations").get<int>();
    psi.opts.seed = spec.at("seed").get<std::uint64_t>();
    psi.opts.rr_mode = spec.at("rr_mode").get<std::string>() == "analytic" ? RrMode::kAnalytic
                                                                           : RrMode::kMonteCarlo;
    if (j.contains("window_id")) psi.window_id = j.at("window_id").get<int>();
    psi.symmetrized = j.value("symmetrized", false);
    psi.failures = j.value("failures", std::vector<std::string>{});
    return psi;
}

inline std::string delta_to_csv(const DeltaMatrix& delta) {
    std::string out = "window";
    for (int w : delta.window_ids) out += "," + std::to_string(w);
    out += "\n";
    for (std::size_t i = 0; i < delta.n; ++i) {
        out += std::to_string(delta.window_ids[i]);
        for (std::size_t j = 0; j < delta.n; ++j) out += "," + format_double(delta.at(i, j));
        out += "\n";
    }
    return out;
}

inline json delta_to_json(const DeltaMatrix& delta) {
    json j;
    j["window_ids"] = delta.window_ids;
    j["lambda_trace"] = delta.lambda_trace;
    json rows = json::array();
    for (std::size_t i = 0; i < delta.n; ++i) {
        json row = json::array();
        for (std::size_t j2 = 0; j2 < delta.n; ++j2) row.push_back(delta.at(i, j2));
        rows.push_back(std::move(row));
    }
    j["values"] = std::move(rows);
    return j;
}

inline std::string lambda_trace_csv(const DeltaMatrix& delta) {
    std::string out = "window,lambda_max\n";
    for (std::size_t i = 0; i < delta.n; ++i) {
        out += std::to_string(delta.window_ids[i]) + "," + format_double(delta.lambda_trace[i]) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dendrograms
// ---------------------------------------------------------------------------

inline json dendrogram_to_json(const Dendrogram& d) {
    json merges = json::array();
    for (const auto& m : d.merges) {
        merges.push_back(json::array({m.id_a, m.id_b, m.height, m.size}));
    }
    return json{{"leaves", d.leaf_labels}, {"merges", std::move(merges)}};
}

inline Dendrogram dendrogram_from_json(const json& j) {
    Dendrogram d;
    d.leaf_labels = j.at("leaves").get<std::vector<std::string>>();
    for (const auto& m : j.at("merges")) {
        d.merges.push_back({m.at(0).get<int>(), m.at(1).get<int>(), m.at(2).get<double>(),
                            m.at(3).get<int>()});
    }
    return d;
}

}  // namespace excursor
