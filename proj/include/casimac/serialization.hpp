#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "casimac/classifier.hpp"
#include "casimac/error.hpp"
#include "casimac/gpr.hpp"

/**
 * @file serialization.hpp
 *
 * JSON model document. The regressor section is produced by the backend and read
 * back through BackendRegistry; for the built-in GP it holds hyperparameters and the
 * training inputs/targets, and the Cholesky factors are recomputed on load.
 */

namespace casimac {

constexpr int kModelFormatVersion = 1;

#ifndef CASIMAC_VERSION
#define CASIMAC_VERSION "0.1.0"
#endif

inline nlohmann::json to_json(const TransformConfig& c) {
    return {{"alpha", c.alpha}, {"beta", c.beta}, {"k_alpha", c.k_alpha}, {"k_beta", c.k_beta}, {"metric", c.metric}};
}

inline TransformConfig transform_config_from_json(const nlohmann::json& j) {
    return {j.at("alpha").get<double>(), j.at("beta").get<double>(), j.at("k_alpha").get<std::size_t>(),
            j.at("k_beta").get<std::size_t>(), j.at("metric").get<std::string>()};
}

inline nlohmann::json model_to_json(const CasimacModel& m) {
    nlohmann::json doc;
    doc["format"] = "casimac-model";
    doc["format_version"] = kModelFormatVersion;
    doc["tool_version"] = CASIMAC_VERSION;
    doc["seed"] = m.seed();
    doc["classes"] = m.class_names();
    doc["features"] = m.feature_names();
    auto& verts = doc["geometry"]["vertices"] = nlohmann::json::array();
    for (std::size_t k = 0; k < m.class_count(); ++k) {
        const auto v = m.geometry().vertex(k);
        verts.push_back(std::vector<double>(v.begin(), v.end()));
    }
    doc["geometry"]["n"] = m.class_count();
    doc["transform"] = to_json(m.transform_config());
    if (const auto& p = m.preprocessing()) {
        doc["preprocessing"] = {{"kind", "standardize"},
                                {"mean", std::vector<double>(p->mean.begin(), p->mean.end())},
                                {"scale", std::vector<double>(p->scale.begin(), p->scale.end())}};
    } else {
        doc["preprocessing"] = nullptr;
    }
    doc["regressor"] = {{"backend", m.regressor().backend_name()}, {"state", m.regressor().to_json()}};
    return doc;
}

inline CasimacModel model_from_json(const nlohmann::json& doc) {
    try {
        if (!doc.contains("format_version")) {
            throw FormatError("model document lacks format_version");
        }
        const int version = doc.at("format_version").get<int>();
        if (version != kModelFormatVersion) {
            throw FormatError("unsupported model format_version " + std::to_string(version) + " (expected " +
                              std::to_string(kModelFormatVersion) + ")");
        }
        const auto n = doc.at("geometry").at("n").get<std::size_t>();
        SimplexGeometry geometry = build_simplex(n);
        const auto verts = doc.at("geometry").at("vertices").get<std::vector<std::vector<double>>>();
        if (verts.size() != n) {
            throw FormatError("geometry vertex count does not match n");
        }
        for (std::size_t k = 0; k < n; ++k) {
            if (verts[k].size() != n - 1) {
                throw FormatError("geometry vertex has the wrong dimension");
            }
            for (std::size_t d = 0; d + 1 < n; ++d) {
                if (std::abs(verts[k][d] - geometry.vertex(k)(static_cast<Eigen::Index>(d))) > 1e-12) {
                    throw FormatError("stored simplex vertices differ from the canonical construction");
                }
            }
        }
        std::optional<Standardizer> scaler;
        const auto& pre = doc.at("preprocessing");
        if (!pre.is_null()) {
            if (pre.at("kind").get<std::string>() != "standardize") {
                throw FormatError("unknown preprocessing kind");
            }
            const auto mean = pre.at("mean").get<std::vector<double>>();
            const auto scale = pre.at("scale").get<std::vector<double>>();
            scaler = Standardizer{Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())),
                                  Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()))};
        }
        const auto& reg = doc.at("regressor");
        auto regressor = BackendRegistry::instance().load(reg.at("backend").get<std::string>(), reg.at("state"));
        return CasimacModel(std::move(geometry), transform_config_from_json(doc.at("transform")), std::move(regressor),
                            doc.at("classes").get<std::vector<std::string>>(),
                            doc.at("features").get<std::vector<std::string>>(), std::move(scaler),
                            doc.at("seed").get<std::uint64_t>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model document: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("inconsistent model document: ") + e.what());
    }
}

inline std::string dump_model(const CasimacModel& m) { return model_to_json(m).dump(2) + "\n"; }

inline CasimacModel parse_model(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("cannot parse model document: ") + e.what());
    }
    return model_from_json(doc);
}

inline void save_model(const CasimacModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write '" + path + "'");
    }
    out << dump_model(m);
}

inline CasimacModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open model '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

}  // namespace casimac
