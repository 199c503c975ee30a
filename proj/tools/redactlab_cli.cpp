// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors
//
// redactlab — batch pipeline for the five-step redact/assess/predict/assess/
// score protocol over a corpus of scientific abstracts, with an append-only
// audit ledger, record/replay provider access, and the descriptive and
// inferential statistics derived from the parsed ratings.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "redactlab/config.hpp"
#include "redactlab/corpus.hpp"
#include "redactlab/ledger_stats.hpp"
#include "redactlab/orchestrator.hpp"
#include "redactlab/protocol.hpp"
#include "redactlab/provider.hpp"
#include "redactlab/report.hpp"
#include "redactlab/sha256.hpp"
#include "redactlab/stats.hpp"
#include "redactlab/version.hpp"

namespace fs = std::filesystem;
using namespace redactlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

corpus::CorpusFormat format_from_flag(const std::string& f) {
    if (f == "jsonl") return corpus::CorpusFormat::jsonl;
    if (f == "csv") return corpus::CorpusFormat::csv;
    throw config::ConfigError("unknown corpus format \"" + f + "\" (jsonl|csv)");
}

struct CommonRunArgs {
    std::string corpus_path;
    std::string config_path;
    std::string run_id;
    std::string out_dir = "out";
    std::string format = "jsonl";
    std::string mode_override;
    bool deterministic = false;
    bool parallel = false;
};

orchestrator::RunConfig make_run_config(const config::AppConfig& app,
                                        const CommonRunArgs& args) {
    orchestrator::RunConfig cfg;
    cfg.run_id = args.run_id;
    cfg.out_dir = args.out_dir;
    cfg.model_id = app.model_id;
    cfg.summary_model_id = app.summary_model_id;
    cfg.temperature = app.temperature;
    cfg.max_output_tokens = app.max_output_tokens;
    cfg.deterministic = args.deterministic;
    cfg.parallel_articles = args.parallel || app.parallel_articles;
    cfg.worker_threads = app.worker_threads;
    cfg.retry_failed_on_resume = app.retry_failed_on_resume;
    cfg.min_redaction_rating = app.min_redaction_rating;
    return cfg;
}

provider::Mode effective_mode(const config::AppConfig& app, const std::string& override_flag) {
    if (override_flag.empty()) return app.mode;
    return provider::mode_from_string(override_flag);
}

void print_corpus_summary(const corpus::CorpusSummary& s) {
    std::cout << "articles: " << s.total << "\n";
    std::cout << "journals:\n";
    for (const auto& [label, count] : s.journal_counts)
        std::cout << "  " << label << ": " << count << "\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "abstract length (chars): min %zu / median %.1f / mean %.1f / sd %.1f / "
                  "max %zu%s\n",
                  s.length_min, s.length_median, s.length_mean, s.length_sd, s.length_max,
                  s.length_sd_degenerate ? " (sd degenerate: single article)" : "");
    std::cout << buf;
    std::cout << "unique authors: " << s.unique_authors << "\n";
}

int cmd_ingest(const std::string& corpus_path, const std::string& format,
               const std::string& cutoff_str, std::size_t band_min, std::size_t band_max,
               const std::string& out_dir) {
    auto cutoff = corpus::parse_date(cutoff_str);
    if (!cutoff) {
        std::cerr << "error: invalid cutoff date \"" << cutoff_str << "\"\n";
        return kExitUsage;
    }
    auto articles = corpus::load_corpus(corpus_path, format_from_flag(format));
    if (articles.empty()) {
        std::cerr << "error: corpus is empty\n";
        return kExitFailure;
    }
    auto summary = corpus::corpus_stats(articles);
    print_corpus_summary(summary);

    corpus::LengthBand band{band_min, band_max};
    std::size_t pre_cutoff = 0, out_of_band = 0;
    nlohmann::ordered_json report_articles = nlohmann::ordered_json::array();
    for (const auto& a : articles) {
        auto report = corpus::validate_article(a, *cutoff, band);
        for (const auto& f : report.flags) {
            if (f == "pre-cutoff") ++pre_cutoff;
            if (f == "length-out-of-band") ++out_of_band;
        }
        if (!report.clean())
            report_articles.push_back(
                {{"article_id", report.article_id}, {"flags", report.flags}});
    }
    std::cout << "flagged: " << report_articles.size() << " articles (pre-cutoff: "
              << pre_cutoff << ", length-out-of-band: " << out_of_band << ")\n";

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        nlohmann::ordered_json report = {
            {"corpus", corpus_path},
            {"corpus_sha256", orchestrator::file_sha256(corpus_path)},
            {"cutoff", cutoff_str},
            {"band", {{"min_chars", band.min_chars}, {"max_chars", band.max_chars}}},
            {"total", summary.total},
            {"flagged", report_articles},
        };
        fs::path p = fs::path(out_dir) / "validation_report.json";
        std::ofstream out(p);
        out << report.dump(2) << '\n';
        std::cout << "validation report: " << p.string() << "\n";
    }
    return kExitOk;
}

int run_or_resume(const CommonRunArgs& args, bool is_resume) {
    auto app = config::load_config(args.config_path);
    auto mode = effective_mode(app, args.mode_override);
    auto run_cfg = make_run_config(app, args);

    std::string corpus_path = args.corpus_path;
    std::optional<orchestrator::LedgerIndex> existing;
    std::vector<orchestrator::LedgerEntry> prior_entries;

    if (is_resume) {
        auto manifest_file = orchestrator::manifest_path(run_cfg);
        if (!fs::exists(manifest_file)) {
            std::cerr << "error: no run manifest at " << manifest_file.string() << "\n";
            return kExitFailure;
        }
        std::ifstream in(manifest_file);
        nlohmann::json manifest = nlohmann::json::parse(in);
        if (corpus_path.empty()) corpus_path = manifest.at("corpus_path").get<std::string>();
        std::string expect_hash = manifest.at("corpus_sha256").get<std::string>();
        if (orchestrator::file_sha256(corpus_path) != expect_hash) {
            std::cerr << "error: corpus file has changed since the run started; "
                         "refusing to resume against a different corpus\n";
            return kExitFailure;
        }
        orchestrator::SalvageInfo salvage;
        prior_entries =
            orchestrator::read_ledger(orchestrator::ledger_path(run_cfg), &salvage, true);
        if (salvage.truncated_bytes > 0)
            std::cout << "ledger tail was corrupt; salvaged " << salvage.entries
                      << " entries, dropped " << salvage.truncated_bytes << " bytes\n";
        existing.emplace(prior_entries);
    }

    auto articles = corpus::load_corpus(corpus_path, format_from_flag(args.format));
    auto protocol = protocol::Protocol::load(app.prompts_dir);

    provider::Cassette cassette(app.cassette_path);
    auto client_cfg = config::client_config(app);
    client_cfg.mode = mode;
    provider::Client client(client_cfg, &cassette);

    if (!is_resume) {
        fs::create_directories(orchestrator::run_dir(run_cfg));
        if (fs::exists(orchestrator::ledger_path(run_cfg)) &&
            fs::file_size(orchestrator::ledger_path(run_cfg)) > 0) {
            std::cerr << "error: run \"" << run_cfg.run_id
                      << "\" already has a ledger; use resume\n";
            return kExitFailure;
        }
        orchestrator::write_run_manifest(run_cfg, protocol, corpus_path,
                                         orchestrator::file_sha256(corpus_path),
                                         provider::to_string(mode));
    }

    auto progress = [&](std::size_t idx, const std::string& id, bool ok) {
        std::cout << "[" << (idx + 1) << "/" << articles.size() << "] " << id << " ... "
                  << (ok ? "ok" : "FAILED") << "\n";
    };

    auto result = orchestrator::run_pipeline(articles, protocol, client, run_cfg,
                                             existing ? &*existing : nullptr, progress);

    auto artifacts = orchestrator::derive_artifacts(result.entries);
    orchestrator::write_artifact_files(artifacts, orchestrator::artifacts_dir(run_cfg));

    if (is_resume && result.provider_calls == 0)
        std::cout << "nothing to do: all steps already completed\n";
    std::cout << "articles: " << result.articles_completed << " completed, "
              << result.articles_failed << " failed (of " << result.articles_total
              << "); provider calls: " << result.provider_calls << "\n";
    std::cout << "ledger: " << result.ledger_file.string() << "\n";

    if (result.articles_failed > 0 && app.fail_on_article_error) return kExitFailure;
    return kExitOk;
}

int cmd_sample_summary(const CommonRunArgs& args, std::size_t n, std::uint64_t seed) {
    auto app = config::load_config(args.config_path);
    auto run_cfg = make_run_config(app, args);
    auto ledger_file = orchestrator::ledger_path(run_cfg);
    if (!fs::exists(ledger_file)) {
        std::cerr << "error: no ledger at " << ledger_file.string() << "\n";
        return kExitFailure;
    }
    auto entries = orchestrator::read_ledger(ledger_file);
    auto protocol = protocol::Protocol::load(app.prompts_dir);
    provider::Cassette cassette(app.cassette_path);
    auto client_cfg = config::client_config(app);
    client_cfg.mode = effective_mode(app, args.mode_override);
    provider::Client client(client_cfg, &cassette);

    auto entry = orchestrator::run_summarize(entries, protocol, client, run_cfg, n, seed);
    if (entry.status != orchestrator::Status::completed) {
        std::cerr << "error: summary request failed: " << entry.error << "\n";
        return kExitFailure;
    }
    std::cout << "sampled " << entry.sampled_article_ids.size() << " assessments (seed "
              << seed << ")\n";
    std::cout << entry.response->output_text << "\n";
    return kExitOk;
}

std::vector<stats::RatingGroup> read_ratings_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw stats::StatsError("cannot open ratings file: " + path);
    auto rows = corpus::detail::read_csv(in);
    if (rows.empty()) throw stats::StatsError("ratings file is empty");
    const auto& header = rows.front().second;
    int label_col = -1, rating_col = -1, count_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string h = corpus::trim(header[i]);
        if (h == "label") label_col = static_cast<int>(i);
        if (h == "rating") rating_col = static_cast<int>(i);
        if (h == "count") count_col = static_cast<int>(i);
    }
    if (label_col < 0 || rating_col < 0)
        throw stats::StatsError("ratings CSV needs \"label\" and \"rating\" columns");
    std::vector<std::string> order;
    std::map<std::string, std::vector<int>> buckets;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& [line_no, cells] = rows[r];
        if (cells.size() <= static_cast<std::size_t>(std::max(label_col, rating_col)))
            throw stats::StatsError("ratings CSV line " + std::to_string(line_no) +
                                    ": too few columns");
        std::string label = cells[label_col];
        int rating = std::stoi(cells[rating_col]);
        std::size_t count = 1;
        if (count_col >= 0 && static_cast<std::size_t>(count_col) < cells.size() &&
            !cells[count_col].empty())
            count = static_cast<std::size_t>(std::stoul(cells[count_col]));
        if (!buckets.count(label)) order.push_back(label);
        for (std::size_t k = 0; k < count; ++k) buckets[label].push_back(rating);
    }
    std::vector<stats::RatingGroup> groups;
    for (const auto& label : order) groups.push_back({label, buckets[label]});
    if (groups.empty()) throw stats::StatsError("ratings file has no data rows");
    return groups;
}

int cmd_stats(const std::string& ledger_arg, const std::string& ratings_arg,
              const std::string& corpus_arg, const std::string& format_flag,
              const std::string& out_dir, const std::string& report_format,
              const std::vector<std::string>& keywords, const std::string& mean_variant,
              const std::string& centering) {
    stats::TestConfig test_cfg;
    if (mean_variant == "welch") test_cfg.mean_variant = stats::MeanTestVariant::welch;
    else if (mean_variant == "pooled") test_cfg.mean_variant = stats::MeanTestVariant::pooled;
    else throw stats::StatsError("unknown mean test variant \"" + mean_variant + "\"");
    if (centering == "median") test_cfg.centering = stats::LeveneCentering::median;
    else if (centering == "mean") test_cfg.centering = stats::LeveneCentering::mean;
    else throw stats::StatsError("unknown Levene centering \"" + centering + "\"");

    stats::ReportTables tables;
    if (!ratings_arg.empty()) {
        auto groups = read_ratings_csv(ratings_arg);
        tables.distribution = stats::distribution_table(groups);
        if (groups.size() >= 2) tables.pairwise = stats::pairwise_matrix(groups, test_cfg);
    } else {
        if (corpus_arg.empty())
            throw stats::StatsError("--ledger needs --corpus for journal grouping");
        auto articles = corpus::load_corpus(corpus_arg, format_from_flag(format_flag));
        auto entries = orchestrator::read_ledger(ledger_arg);
        auto groups = stats::redaction_rating_groups(entries, articles);
        std::erase_if(groups, [](const auto& g) { return g.values.empty(); });
        if (groups.empty())
            throw stats::StatsError("ledger holds no parsed redaction ratings");
        tables.distribution = stats::distribution_table(groups);
        if (groups.size() >= 2) tables.pairwise = stats::pairwise_matrix(groups, test_cfg);
        tables.journal_alignment = stats::journal_alignment_rows(entries, articles);
        auto obs = stats::alignment_observations(entries, articles);
        if (!obs.empty())
            tables.keyword_facets = stats::keyword_facets(
                obs, keywords.empty() ? stats::default_facet_keywords() : keywords);
    }

    auto fmt = report_format == "markdown" ? stats::ReportFormat::markdown
                                           : stats::ReportFormat::csv;
    auto written = stats::emit_report(tables, fmt, out_dir);
    for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
    return kExitOk;
}

int cmd_replay_verify(const CommonRunArgs& args) {
    auto app = config::load_config(args.config_path);
    auto run_cfg = make_run_config(app, args);
    auto ledger_file = orchestrator::ledger_path(run_cfg);
    auto entries = orchestrator::read_ledger(ledger_file);
    auto derived = orchestrator::derive_artifacts(entries);

    std::size_t mismatches = 0, checked = 0;
    for (const auto& [id, artifacts] : derived) {
        fs::path p = orchestrator::artifacts_dir(run_cfg) /
                     (orchestrator::safe_file_stem(id) + ".json");
        std::string expected = orchestrator::artifacts_to_json(artifacts).dump(2) + "\n";
        std::ifstream in(p, std::ios::binary);
        if (!in) {
            std::cout << "missing artifact file: " << p.string() << "\n";
            ++mismatches;
            continue;
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        ++checked;
        if (ss.str() != expected) {
            std::cout << "artifact drift: " << p.string() << "\n";
            ++mismatches;
        }
    }
    std::cout << "replay verify: " << checked << " artifact files checked, " << mismatches
              << " mismatches\n";
    return mismatches == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"redactlab: five-step redact/assess/predict evaluation pipeline"};
    app.set_version_flag("--version", std::string("redactlab ") + kVersion);
    app.require_subcommand(1);

    // ingest
    std::string in_corpus, in_format = "jsonl", in_cutoff = "2021-09-30", in_out;
    std::size_t band_min = 630, band_max = 2364;
    auto* ingest = app.add_subcommand("ingest", "Load, validate and summarize a corpus");
    ingest->add_option("--corpus", in_corpus, "Corpus file (JSONL or CSV)")->required();
    ingest->add_option("--format", in_format, "Corpus format: jsonl|csv");
    ingest->add_option("--cutoff", in_cutoff, "Training-cutoff date (ISO-8601)");
    ingest->add_option("--band-min", band_min, "Plausible abstract length lower bound");
    ingest->add_option("--band-max", band_max, "Plausible abstract length upper bound");
    ingest->add_option("--out", in_out, "Directory for validation_report.json");

    // run / resume
    CommonRunArgs run_args;
    auto add_run_opts = [&](CLI::App* cmd, bool corpus_required) {
        auto* o = cmd->add_option("--corpus", run_args.corpus_path, "Corpus file");
        if (corpus_required) o->required();
        cmd->add_option("--config", run_args.config_path, "Config JSON")->required();
        cmd->add_option("--run-id", run_args.run_id, "Run identifier")->required();
        cmd->add_option("--out", run_args.out_dir, "Output directory (default: out)");
        cmd->add_option("--format", run_args.format, "Corpus format: jsonl|csv");
        cmd->add_option("--mode", run_args.mode_override,
                        "Provider mode override: record|replay|passthrough");
        cmd->add_flag("--deterministic", run_args.deterministic,
                      "Zero ledger timestamps for byte-stable output");
        cmd->add_flag("--parallel", run_args.parallel, "Article-level parallelism");
    };
    auto* run = app.add_subcommand("run", "Execute the five-step pipeline over a corpus");
    add_run_opts(run, true);
    auto* resume = app.add_subcommand("resume", "Resume an interrupted run");
    add_run_opts(resume, false);

    // sample-summary
    std::size_t sum_n = 100;
    std::uint64_t sum_seed = 0;
    auto* sample = app.add_subcommand(
        "sample-summary", "Sample step-4 assessments and request an abstractive summary");
    sample->add_option("--config", run_args.config_path, "Config JSON")->required();
    sample->add_option("--run-id", run_args.run_id, "Run identifier")->required();
    sample->add_option("--out", run_args.out_dir, "Output directory (default: out)");
    sample->add_option("--n", sum_n, "Sample size (default 100)");
    sample->add_option("--seed", sum_seed, "Sampling seed (required for reproducibility)")
        ->required();
    sample->add_option("--mode", run_args.mode_override, "Provider mode override");

    // stats / report
    std::string st_ledger, st_ratings, st_corpus, st_out = "out/reports";
    std::string st_format = "jsonl", st_report_format;
    std::string st_mean = "welch", st_center = "median";
    std::vector<std::string> st_keywords;
    auto add_stats_opts = [&](CLI::App* cmd) {
        cmd->add_option("--ledger", st_ledger, "Run ledger (JSONL)");
        cmd->add_option("--ratings", st_ratings, "Bare ratings CSV (label,rating[,count])");
        cmd->add_option("--corpus", st_corpus, "Corpus file (required with --ledger)");
        cmd->add_option("--format", st_format, "Corpus format: jsonl|csv");
        cmd->add_option("--out", st_out, "Report output directory");
        cmd->add_option("--report-format", st_report_format, "csv|markdown");
        cmd->add_option("--keywords", st_keywords, "Facet keywords (default: paper set)");
        cmd->add_option("--mean-test", st_mean, "welch|pooled (default welch)");
        cmd->add_option("--levene-center", st_center, "median|mean (default median)");
    };
    auto* stats_cmd = app.add_subcommand("stats", "Compute rating statistics and reports");
    add_stats_opts(stats_cmd);
    auto* report_cmd =
        app.add_subcommand("report", "Render the statistics as a markdown report");
    add_stats_opts(report_cmd);

    // replay
    auto* replay = app.add_subcommand(
        "replay", "Verify artifacts on disk re-derive byte-identically from the ledger");
    replay->add_option("--config", run_args.config_path, "Config JSON")->required();
    replay->add_option("--run-id", run_args.run_id, "Run identifier")->required();
    replay->add_option("--out", run_args.out_dir, "Output directory (default: out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (ingest->parsed())
            return cmd_ingest(in_corpus, in_format, in_cutoff, band_min, band_max, in_out);
        if (run->parsed()) return run_or_resume(run_args, false);
        if (resume->parsed()) return run_or_resume(run_args, true);
        if (sample->parsed()) return cmd_sample_summary(run_args, sum_n, sum_seed);
        if (stats_cmd->parsed() || report_cmd->parsed()) {
            if (st_report_format.empty())
                st_report_format = report_cmd->parsed() ? "markdown" : "csv";
            if (st_ledger.empty() == st_ratings.empty()) {
                std::cerr << "error: give exactly one of --ledger or --ratings\n";
                return kExitUsage;
            }
            return cmd_stats(st_ledger, st_ratings, st_corpus, st_format, st_out,
                             st_report_format, st_keywords, st_mean, st_center);
        }
        if (replay->parsed()) return cmd_replay_verify(run_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
