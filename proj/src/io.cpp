#include "twospine/io.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>

#include "twospine/error.hpp"

namespace twospine {

namespace {

void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

double number_or(const nlohmann::json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
    return obj[key].get<double>();
}

}  // namespace

OffspringDistribution offspring_from_json(const nlohmann::json& spec) {
    if (spec.is_array()) {
        std::vector<double> w;
        for (const auto& x : spec) {
            if (!x.is_number()) throw ConfigError("offspring weights must be numbers");
            w.push_back(x.get<double>());
        }
        return make_distribution(w);
    }
    if (!spec.is_object()) throw ConfigError("offspring spec must be a weight list or an object");
    if (!spec.contains("family") || !spec["family"].is_string())
        throw ConfigError("offspring object needs a string 'family'");
    const std::string family = spec["family"].get<std::string>();
    std::optional<std::size_t> truncate;
    if (spec.contains("truncate")) {
        if (!spec["truncate"].is_number_unsigned())
            throw ConfigError("'truncate' must be a non-negative integer");
        truncate = spec["truncate"].get<std::size_t>();
    }
    if (family == "binary") {
        reject_unknown_keys(spec, {"family", "p"}, "binary offspring spec");
        return binary_distribution(number_or(spec, "p", 0.5));
    }
    if (family == "geometric") {
        reject_unknown_keys(spec, {"family", "q", "truncate"}, "geometric offspring spec");
        return geometric_distribution(number_or(spec, "q", 0.5), truncate);
    }
    if (family == "poisson") {
        reject_unknown_keys(spec, {"family", "mean", "truncate"}, "poisson offspring spec");
        return poisson_distribution(number_or(spec, "mean", 1.0), truncate);
    }
    throw ConfigError("unknown offspring family '" + family + "'");
}

nlohmann::json tree_to_json(const Tree& t) {
    return {{"generations", t.generations()}, {"child_counts", t.breadth_first()}};
}

Tree tree_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("generations") || !j.contains("child_counts"))
        throw ConfigError("tree JSON needs 'generations' and 'child_counts'");
    try {
        const auto counts = j["child_counts"].get<std::vector<std::uint32_t>>();
        return Tree::from_breadth_first(counts, j["generations"].get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed tree JSON: ") + e.what());
    }
}

nlohmann::json tree_to_json(const SpinedTree& t) {
    auto j = tree_to_json(t.tree);
    j["spine"] = t.spine;
    return j;
}

nlohmann::json tree_to_json(const TwoSpinedTree& t) {
    auto j = tree_to_json(t.tree);
    j["spine_long"] = t.spine_long;
    j["spine_short"] = t.spine_short;
    j["split"] = t.split;
    return j;
}

nlohmann::json report_to_json(const ComparisonReport& r) {
    nlohmann::json details = nlohmann::json::object();
    for (const auto& [k, v] : r.details) details[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    return {{"name", r.name},
            {"metric", r.metric},
            {"value", r.value},
            {"threshold", r.threshold},
            {"passed", r.passed},
            {"sample_sizes", r.sample_sizes},
            {"details", details}};
}

std::string csv_header_comment(const std::vector<std::pair<std::string, std::string>>& fields) {
    std::string s = std::string("# ") + kCsvVersion;
    for (const auto& [k, v] : fields) s += " " + k + "=" + v;
    return s;
}

void write_measure_csv(std::ostream& os, const MeasureReport& r, const std::string& comment) {
    os << comment << '\n' << "tree_id,X_n,G_n,G_n_size_biased,G_n_two_spine\n";
    os << std::setprecision(17);
    for (const auto& row : r.rows)
        os << row.tree_id << ',' << row.x_n << ',' << row.gw << ',' << row.size_biased << ','
           << row.two_spine << '\n';
}

void write_transform_csv(std::ostream& os, const TransformTable& t, const std::string& comment) {
    os << comment << '\n' << "lambda,value,reference_value,abs_gap\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < t.lambda.size(); ++i) {
        os << t.lambda[i] << ',' << t.values[i] << ',';
        if (i < t.reference.size())
            os << t.reference[i] << ',' << std::abs(t.values[i] - t.reference[i]);
        else
            os << ',';
        os << '\n';
    }
}

}  // namespace twospine
