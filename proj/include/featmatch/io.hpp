#ifndef FEATMATCH_IO_HPP_
#define FEATMATCH_IO_HPP_

#include "featmatch/core.hpp"
#include "featmatch/harness.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>

namespace featmatch {

enum class StackFormat { json, csv };

StackFormat parse_format(const std::string& name);
// json unless the path ends in .csv
StackFormat format_from_path(const std::filesystem::path& path);

using AnyStack = std::variant<FeatureStack, UnbalancedStack>;

// JSON: {"n":..,"m":..,"p":..,"units":[[column-major p x m], ...]}; the
//   unbalanced form carries "sizes" and "K" instead of "m".
// CSV: header unit,index,f1..fp and one row per vector, both indices 1-based.
//   Units of unequal size need `clusters` and load as an UnbalancedStack.
AnyStack read_stack(std::istream& in, StackFormat format, std::optional<int> clusters = std::nullopt);
AnyStack load_stack(const std::filesystem::path& path, StackFormat format,
                    std::optional<int> clusters = std::nullopt);
FeatureStack load_balanced(const std::filesystem::path& path, StackFormat format);

void write_stack(std::ostream& out, const FeatureStack& stack, StackFormat format);
void write_stack(std::ostream& out, const UnbalancedStack& stack, StackFormat format);
void save_stack(const std::filesystem::path& path, const FeatureStack& stack, StackFormat format);
void save_stack(const std::filesystem::path& path, const UnbalancedStack& stack, StackFormat format);

// Dense matrix as a JSON array of rows.
Eigen::MatrixXd load_matrix(const std::filesystem::path& path);
void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& matrix);

// {"labels": [[class per column, 1-based], ...]}
void save_labels(const std::filesystem::path& path, const std::vector<std::vector<int>>& labels);
std::vector<std::vector<int>> load_labels(const std::filesystem::path& path);

// {"algo":..,"init":..,"n":..,"m":..,"perms":[[1-based]],"objective":..,...}
std::string matching_json(const SolveResult& result, const std::string& algo, const std::string& init);
std::string partial_json(const PartialSolveResult& result, const std::string& algo);
Matching parse_matching_json(const std::string& text);

void save_report(const std::filesystem::path& path, const BenchmarkReport& report, bool include_timing = true);

}  // namespace featmatch

#endif  // FEATMATCH_IO_HPP_
