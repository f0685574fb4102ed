#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "twospine/analysis.hpp"
#include "twospine/exact.hpp"
#include "twospine/offspring.hpp"
#include "twospine/sampler.hpp"
#include "twospine/tree.hpp"

namespace twospine {

// Version tag written into the leading comment line of every CSV.
inline constexpr const char* kCsvVersion = "twospine-csv/1";

// Offspring specification: a weight list [w0, w1, ...] or
//   {"family": "binary"|"geometric"|"poisson", <param>: x, "truncate": N}
// with params p (binary), q (geometric), mean (poisson). Unknown keys are
// rejected with ConfigError; invalid weights raise InvalidDistribution.
OffspringDistribution offspring_from_json(const nlohmann::json& spec);

// {"generations": n, "child_counts": [breadth-first counts]}.
nlohmann::json tree_to_json(const Tree& t);
Tree tree_from_json(const nlohmann::json& j);
nlohmann::json tree_to_json(const SpinedTree& t);
nlohmann::json tree_to_json(const TwoSpinedTree& t);

nlohmann::json report_to_json(const ComparisonReport& r);

// "# twospine-csv/1 key=value ..." built from the pairs.
std::string csv_header_comment(const std::vector<std::pair<std::string, std::string>>& fields);

// tree_id,X_n,G_n,G_n_size_biased,G_n_two_spine
void write_measure_csv(std::ostream& os, const MeasureReport& r, const std::string& comment);

// lambda,value,reference_value,abs_gap (reference columns empty when absent)
void write_transform_csv(std::ostream& os, const TransformTable& t, const std::string& comment);

}  // namespace twospine
