#pragma once

#include "latentga/attack.hpp"

#include <optional>
#include <string>
#include <vector>

namespace latentga {

/// One parsed line of a results CSV. `ps` is the latent-method
/// perturbation (L2 against the decoded seed) for GA rows and the
/// pixel-space L2 for FGSM rows; `l2_orig` is always the L2 against the
/// original image. FGSM rows carry the epsilon they were generated with.
struct ResultRow {
    std::string method;
    std::size_t seed_index = 0;
    int true_label = -1;
    int predicted_label = -1;
    bool success = false;
    double ps = 0.0;
    double sd = 0.0;
    double ap = 0.0;
    double fitness = 0.0;
    std::size_t generations_used = 0;
    double wall_time_ms = 0.0;
    double l2_orig = 0.0;
    double top1_confidence = 0.0;
    std::optional<double> epsilon;
};

ResultRow to_result_row(const AttackResult& r, const std::string& method);
std::string result_row_csv_header(bool with_epsilon);
std::string result_row_csv(const ResultRow& row);
std::vector<ResultRow> parse_results_csv(const std::string& path);

/// Aggregates of one attack batch. Perturbation and confidence fields
/// are means over the successful attacks only and absent when there is
/// no success; latent-space fields are absent for pixel-space methods.
struct BatchSummary {
    std::string method;
    std::size_t n_seeds = 0;
    double success_rate = 0.0;
    std::optional<double> mean_l2_per_pixel_vs_original;
    std::optional<double> mean_l2_per_pixel_vs_reconstruction;
    std::optional<double> mean_sd;
    std::optional<double> mean_confidence_of_misclassification;
    std::optional<double> frac_confidence_gt_99;
    double mean_wall_time_s = 0.0;
};

BatchSummary summarize(const std::vector<AttackResult>& results, const std::string& method);
BatchSummary summarize_rows(const std::vector<ResultRow>& rows, const std::string& method,
                            bool latent_metrics);

std::string summary_csv_header();
std::string summary_csv_row(const BatchSummary& s);

/// Write summary.csv and report.md under out_dir; when grid source
/// results are given, also write PGM triplets (seed, reconstruction,
/// attack) for the first `grid_count` of them under out_dir/grid.
void emit_report(const std::vector<BatchSummary>& summaries, const std::string& out_dir,
                 const std::vector<AttackResult>* grid_source = nullptr,
                 std::size_t grid_count = 6);

} // namespace latentga
