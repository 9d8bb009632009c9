#include "latentga/report.hpp"

#include "latentga/dataset.hpp"
#include "latentga/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace latentga {

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

void append_optional(std::string& out, const std::optional<double>& v) {
    if (v) append_double(out, *v);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double_field(const std::string& s, const std::string& path, std::size_t line_no) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw FormatError(path + ":" + std::to_string(line_no) + ": bad numeric field '" + s + "'");
    return v;
}

long parse_int_field(const std::string& s, const std::string& path, std::size_t line_no) {
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw FormatError(path + ":" + std::to_string(line_no) + ": bad integer field '" + s + "'");
    return v;
}

} // namespace

ResultRow to_result_row(const AttackResult& r, const std::string& method) {
    ResultRow row;
    row.method = method;
    row.seed_index = r.seed_index;
    row.true_label = r.true_label;
    row.predicted_label = r.predicted_label;
    row.success = r.success;
    row.ps = r.ps;
    row.sd = r.sd;
    row.ap = r.ap;
    row.fitness = r.fitness;
    row.generations_used = r.generations_used;
    row.wall_time_ms = r.wall_time_ms;
    row.l2_orig = l2_norm(sub(r.attack_image, r.seed_image));
    double top = 0.0;
    for (double p : r.confidence.data) top = std::max(top, p);
    row.top1_confidence = top;
    return row;
}

std::string result_row_csv_header(bool with_epsilon) {
    std::string h =
        "method,seed_index,true_label,predicted_label,success,ps,sd,ap,fitness,"
        "generations_used,wall_time_ms,l2_orig,top1_confidence";
    if (with_epsilon) h += ",epsilon";
    return h;
}

std::string result_row_csv(const ResultRow& row) {
    std::string out = row.method;
    out += ',' + std::to_string(row.seed_index);
    out += ',' + std::to_string(row.true_label);
    out += ',' + std::to_string(row.predicted_label);
    out += ',';
    out += row.success ? '1' : '0';
    out += ',';
    append_double(out, row.ps);
    out += ',';
    append_double(out, row.sd);
    out += ',';
    append_double(out, row.ap);
    out += ',';
    append_double(out, row.fitness);
    out += ',' + std::to_string(row.generations_used);
    out += ',';
    append_double(out, row.wall_time_ms);
    out += ',';
    append_double(out, row.l2_orig);
    out += ',';
    append_double(out, row.top1_confidence);
    if (row.epsilon) {
        out += ',';
        append_double(out, *row.epsilon);
    }
    return out;
}

std::vector<ResultRow> parse_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<ResultRow> rows;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    bool with_epsilon = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (!header_seen) {
            if (fields.size() < 13 || fields[0] != "method")
                throw FormatError(path + ": missing results header");
            with_epsilon = fields.size() >= 14 && fields[13] == "epsilon";
            header_seen = true;
            continue;
        }
        const std::size_t expected = with_epsilon ? 14 : 13;
        if (fields.size() != expected)
            throw FormatError(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(expected) + " fields, got " +
                              std::to_string(fields.size()));
        ResultRow r;
        r.method = fields[0];
        r.seed_index = static_cast<std::size_t>(parse_int_field(fields[1], path, line_no));
        r.true_label = static_cast<int>(parse_int_field(fields[2], path, line_no));
        r.predicted_label = static_cast<int>(parse_int_field(fields[3], path, line_no));
        r.success = parse_int_field(fields[4], path, line_no) != 0;
        r.ps = parse_double_field(fields[5], path, line_no);
        r.sd = parse_double_field(fields[6], path, line_no);
        r.ap = parse_double_field(fields[7], path, line_no);
        r.fitness = parse_double_field(fields[8], path, line_no);
        r.generations_used = static_cast<std::size_t>(parse_int_field(fields[9], path, line_no));
        r.wall_time_ms = parse_double_field(fields[10], path, line_no);
        r.l2_orig = parse_double_field(fields[11], path, line_no);
        r.top1_confidence = parse_double_field(fields[12], path, line_no);
        if (with_epsilon) r.epsilon = parse_double_field(fields[13], path, line_no);
        rows.push_back(std::move(r));
    }
    if (!header_seen) throw FormatError(path + ": empty results file");
    return rows;
}

BatchSummary summarize(const std::vector<AttackResult>& results, const std::string& method) {
    if (results.empty()) throw ConfigError("summarize: no results given");
    std::vector<ResultRow> rows;
    rows.reserve(results.size());
    for (const auto& r : results) rows.push_back(to_result_row(r, method));
    const bool latent = !results.front().reconstruction.data.empty();
    return summarize_rows(rows, method, latent);
}

BatchSummary summarize_rows(const std::vector<ResultRow>& rows, const std::string& method,
                            bool latent_metrics) {
    if (rows.empty()) throw ConfigError("summarize: no results given");
    BatchSummary s;
    s.method = method;
    s.n_seeds = rows.size();

    std::size_t successes = 0;
    double l2_orig_sum = 0.0, ps_sum = 0.0, sd_sum = 0.0, conf_sum = 0.0, time_sum = 0.0;
    std::size_t high_conf = 0;
    for (const auto& r : rows) {
        time_sum += r.wall_time_ms;
        if (!r.success) continue;
        ++successes;
        l2_orig_sum += r.l2_orig / 784.0;
        ps_sum += r.ps / 784.0;
        sd_sum += r.sd;
        conf_sum += r.top1_confidence;
        if (r.top1_confidence > 0.99) ++high_conf;
    }
    s.success_rate = static_cast<double>(successes) / static_cast<double>(rows.size());
    s.mean_wall_time_s = time_sum / 1000.0 / static_cast<double>(rows.size());
    if (successes > 0) {
        const double n = static_cast<double>(successes);
        s.mean_l2_per_pixel_vs_original = l2_orig_sum / n;
        s.mean_confidence_of_misclassification = conf_sum / n;
        s.frac_confidence_gt_99 = static_cast<double>(high_conf) / n;
        if (latent_metrics) {
            s.mean_l2_per_pixel_vs_reconstruction = ps_sum / n;
            s.mean_sd = sd_sum / n;
        }
    }
    return s;
}

std::string summary_csv_header() {
    return "method,n_seeds,success_rate,mean_l2_per_pixel_vs_original,"
           "mean_l2_per_pixel_vs_reconstruction,mean_sd,frac_confidence_gt_99,mean_time_s";
}

std::string summary_csv_row(const BatchSummary& s) {
    std::string out = s.method;
    out += ',' + std::to_string(s.n_seeds);
    out += ',';
    append_double(out, s.success_rate);
    out += ',';
    append_optional(out, s.mean_l2_per_pixel_vs_original);
    out += ',';
    append_optional(out, s.mean_l2_per_pixel_vs_reconstruction);
    out += ',';
    append_optional(out, s.mean_sd);
    out += ',';
    append_optional(out, s.frac_confidence_gt_99);
    out += ',';
    append_double(out, s.mean_wall_time_s);
    return out;
}

namespace {

std::string md_cell(const std::optional<double>& v) {
    if (!v) return "-";
    std::string s;
    append_double(s, *v);
    return s;
}

std::string md_cell(double v) {
    std::string s;
    append_double(s, v);
    return s;
}

} // namespace

void emit_report(const std::vector<BatchSummary>& summaries, const std::string& out_dir,
                 const std::vector<AttackResult>* grid_source, std::size_t grid_count) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

    const std::string csv_path = out_dir + "/summary.csv";
    {
        std::string out = summary_csv_header() + "\n";
        for (const auto& s : summaries) out += summary_csv_row(s) + "\n";
        std::ofstream f(csv_path, std::ios::binary);
        if (!f) throw IoError("cannot open " + csv_path + " for writing");
        f << out;
        if (!f) throw IoError("write failed for " + csv_path);
    }

    {
        std::string md = "# Attack comparison\n\n";
        md += "| method | seeds | success rate | mean L2/pixel vs original | "
              "mean L2/pixel vs reconstruction | mean SD | mean top-1 confidence | "
              "frac confidence > 0.99 | mean time (s) |\n";
        md += "|---|---|---|---|---|---|---|---|---|\n";
        for (const auto& s : summaries) {
            md += "| " + s.method + " | " + std::to_string(s.n_seeds) + " | " +
                  md_cell(s.success_rate) + " | " + md_cell(s.mean_l2_per_pixel_vs_original) +
                  " | " + md_cell(s.mean_l2_per_pixel_vs_reconstruction) + " | " +
                  md_cell(s.mean_sd) + " | " + md_cell(s.mean_confidence_of_misclassification) +
                  " | " + md_cell(s.frac_confidence_gt_99) + " | " + md_cell(s.mean_wall_time_s) +
                  " |\n";
        }
        md += "\nPerturbation and confidence columns average over successful attacks only.\n";
        const std::string md_path = out_dir + "/report.md";
        std::ofstream f(md_path, std::ios::binary);
        if (!f) throw IoError("cannot open " + md_path + " for writing");
        f << md;
        if (!f) throw IoError("write failed for " + md_path);
    }

    if (grid_source && !grid_source->empty()) {
        const std::string grid_dir = out_dir + "/grid";
        fs::create_directories(grid_dir, ec);
        if (ec) throw IoError("cannot create " + grid_dir + ": " + ec.message());
        const std::size_t n = std::min(grid_count, grid_source->size());
        for (std::size_t i = 0; i < n; ++i) {
            const AttackResult& r = (*grid_source)[i];
            char name[64];
            std::snprintf(name, sizeof name, "/seed_%03zu_", r.seed_index);
            export_pgm(r.seed_image, grid_dir + name + "original.pgm");
            if (!r.reconstruction.data.empty())
                export_pgm(r.reconstruction, grid_dir + name + "reconstruction.pgm");
            export_pgm(r.attack_image, grid_dir + name + "attack.pgm");
        }
    }
}

} // namespace latentga
