#pragma once

#include "cellcheck/baseline.hpp"
#include "cellcheck/checker.hpp"
#include "cellcheck/partition.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace cellcheck {

inline constexpr const char* kFormatVersion = "cellcheck-v1";

/// Partitions (optionally with probabilities) as read back from JSON lines.
struct PartitionFile {
    nlohmann::json header;
    Box domain;
    std::vector<std::string> field_labels;
    std::vector<std::string> action_labels;
    std::vector<PartitionTree> fields;
    bool has_probs = false;

    std::size_t field_index(const std::string& label) const;
};

/// One header record followed by one record per leaf. `extra` is merged into the header.
void write_partition(std::ostream& out, std::span<const PartitionTree> fields,
                     const std::vector<std::string>& field_labels, const std::vector<std::string>& action_labels,
                     const nlohmann::json& extra = nlohmann::json::object());
/// As write_partition, with per-cell and per-action probabilities.
void write_field(std::ostream& out, const ProbField& field, const nlohmann::json& extra = nlohmann::json::object());
/// Reads either kind. Trees are rebuilt by midpoint bisection, so every leaf
/// must be reachable from the root that way.
PartitionFile read_partition(std::istream& in, const std::string& source = "<stream>");

void write_policy_table(std::ostream& out, const TabularPolicy& policy, const std::vector<std::string>& field_labels,
                        const std::vector<std::string>& action_labels);
struct TableFile {
    TabularPolicy policy;
    std::vector<std::string> field_labels;
    std::vector<std::string> action_labels;
};
TableFile read_policy_table(std::istream& in, const std::string& source = "<stream>");

void write_exact(std::ostream& out, const ExactResult& result, const std::vector<std::string>& field_labels);
struct ExactFile {
    ExactResult result;
    std::vector<std::string> field_labels;
    std::size_t field_index(const std::string& label) const;
};
ExactFile read_exact(std::istream& in, const std::string& source = "<stream>");

struct StartState {
    std::size_t field = 0;
    std::vector<double> state;
};
/// CSV with a header row; the first column names the field by index or label.
std::vector<StartState> read_starts(std::istream& in, const std::vector<std::string>& field_labels,
                                    std::size_t state_dim, const std::string& source = "<stream>");

struct McRow {
    std::string field;
    std::vector<double> state;
    McEstimate estimate;
};
void write_mc_csv(std::ostream& out, const std::vector<McRow>& rows);
std::vector<McRow> read_mc_csv(std::istream& in, const std::string& source = "<stream>");

void write_tau_curve(std::ostream& out, std::span<const double> layer_max);

struct CompareRow {
    McRow query;
    double p_check = 0.0;
    double p_exact = 0.0;             ///< NaN without an exact table
    double p_exact_multilinear = 0.0; ///< NaN without an exact table
    bool bound_holds = true;          ///< p_check >= p_mc - 3 stderr
};
std::vector<CompareRow> compare(const PartitionFile& field, const std::vector<McRow>& mc, const ExactFile* exact);
void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows);

/// Writes `doc` plus the format version to `path`.
void write_manifest(const std::filesystem::path& path, nlohmann::json doc);

std::ofstream open_output(const std::filesystem::path& path);
std::ifstream open_input(const std::filesystem::path& path);

}  // namespace cellcheck
