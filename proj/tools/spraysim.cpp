// spraysim: canopy-aware variable-rate sprayer simulator and WSP analysis
// toolkit. Subcommands: simulate, analyze, eval, report.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "spraysim/eval_io.hpp"
#include "spraysim/png.hpp"
#include "spraysim/report.hpp"
#include "spraysim/simulation.hpp"
#include "spraysim/version.hpp"

namespace fs = std::filesystem;
using namespace spraysim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitInvalid = 2;

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

BinaryMask load_raster_as_mask(const std::string& path) {
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".png") return segment_stains(read_png(path));
    const PnmKind kind = sniff_pnm(path);
    if (kind == PnmKind::Pgm) return binarize_gray(read_pgm(path));
    return segment_stains(read_ppm(path));
}

struct AnalyzeJob {
    std::string path;
    int paper_id = -1;
    std::string canopy_class;
    double resolution_um_per_px = 42.3;
};

int cmd_simulate(const std::string& config_path, std::optional<uint64_t> seed_flag,
                 const std::string& out_dir, bool ppm, bool latency_report) {
    Scene scene = Scene::from_file(config_path);
    uint64_t seed = scene.seed;
    const std::string env_seed = env_or("SPRAYSIM_SEED", "");
    if (!env_seed.empty()) seed = std::stoull(env_seed);
    if (seed_flag) seed = *seed_flag;
    scene.seed = seed;

    const SimRun run = simulate(scene, seed);
    WriteOptions opt;
    opt.write_ppm = ppm;
    opt.write_latency_report = latency_report;
    write_run(run, out_dir, opt);

    int64_t emitted = 0, hits = 0;
    for (const NozzleTotals& t : run.pass.per_nozzle) {
        emitted += t.emitted_droplets;
        hits += t.paper_hits;
    }
    std::cout << "simulated " << run.n_ticks << " ticks over "
              << report_detail::fmt("%.1f", run.duration_ms / 1000.0) << " s, " << emitted
              << " droplets emitted, " << hits << " on paper\n";
    std::cout << "artifacts written to " << out_dir << "\n";
    return kExitOk;
}

int cmd_analyze(std::vector<std::string> inputs, const std::string& run_dir, std::string out_dir,
                int jobs, const std::string& format) {
    std::vector<AnalyzeJob> jobs_list;
    if (!run_dir.empty()) {
        json manifest;
        std::ifstream mf(fs::path(run_dir) / "manifest.json");
        if (!mf) throw std::invalid_argument("no manifest.json under " + run_dir);
        mf >> manifest;
        const double res =
            manifest.at("config").at("papers").empty()
                ? 42.3
                : manifest.at("config").at("papers")[0].value("resolution_um_per_px", 42.3);
        for (const json& p : manifest.at("papers")) {
            AnalyzeJob j;
            j.path = (fs::path(run_dir) / p.at("file").get<std::string>()).string();
            j.paper_id = p.at("id").get<int>();
            j.canopy_class = p.at("canopy_class").get<std::string>();
            j.resolution_um_per_px = res;
            jobs_list.push_back(j);
        }
        if (out_dir.empty()) out_dir = (fs::path(run_dir) / "analysis").string();
    }
    for (const std::string& path : inputs) {
        AnalyzeJob j;
        j.path = path;
        jobs_list.push_back(j);
    }
    if (jobs_list.empty()) throw std::invalid_argument("nothing to analyze: give raster paths or --run");
    if (out_dir.empty()) out_dir = "analysis";
    fs::create_directories(out_dir);

    std::vector<std::optional<AnalyzedPaper>> results(jobs_list.size());
    std::vector<std::string> errors(jobs_list.size());
    std::mutex io_mutex;
    auto worker = [&](size_t begin, size_t stride) {
        for (size_t i = begin; i < jobs_list.size(); i += stride) {
            const AnalyzeJob& job = jobs_list[i];
            try {
                const BinaryMask mask = load_raster_as_mask(job.path);
                AnalyzedPaper ap;
                ap.source = job.path;
                ap.paper_id = job.paper_id;
                ap.canopy_class = job.canopy_class;
                ap.report = analyze_mask(mask, job.resolution_um_per_px);
                results[i] = std::move(ap);
            } catch (const std::exception& e) {
                errors[i] = e.what();
                std::lock_guard<std::mutex> lock(io_mutex);
                std::cerr << "analyze: " << job.path << ": " << e.what() << "\n";
            }
        }
    };
    jobs = std::max(1, jobs);
    if (jobs == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker, size_t(t), size_t(jobs));
        for (auto& t : pool) t.join();
    }

    std::vector<AnalyzedPaper> ok;
    for (auto& r : results)
        if (r) ok.push_back(std::move(*r));

    json analysis_index;
    analysis_index["papers"] = json::array();
    for (const AnalyzedPaper& ap : ok) {
        const std::string stem = fs::path(ap.source).stem().string();
        {
            std::ofstream txt(fs::path(out_dir) / (stem + "_report.txt"));
            write_paper_report_text(ap, txt);
        }
        write_droplet_csv(ap.report, (fs::path(out_dir) / (stem + "_droplets.csv")).string());
        write_pgm(kde_to_gray(ap.report.kde), (fs::path(out_dir) / (stem + "_heatmap.pgm")).string());
        analysis_index["papers"].push_back({{"source", ap.source},
                                            {"paper_id", ap.paper_id},
                                            {"canopy_class", ap.canopy_class},
                                            {"coverage_percent", ap.report.coverage_percent},
                                            {"droplets", ap.report.stats.n},
                                            {"mean_area_um2", ap.report.stats.mean_um2},
                                            {"grid_cv", ap.report.uniformity.grid_cv}});
        if (format == "txt") write_paper_report_text(ap, std::cout);
    }
    {
        std::ofstream idx(fs::path(out_dir) / "analysis.json");
        idx << analysis_index.dump(2) << '\n';
    }

    const auto summary = aggregate_coverage(ok);
    const bool have_classes =
        std::any_of(ok.begin(), ok.end(), [](const AnalyzedPaper& p) { return !p.canopy_class.empty() && p.canopy_class != "none"; });
    if (have_classes) {
        write_boxplot_csv(summary, (fs::path(out_dir) / "aggregate.csv").string());
        if (format == "csv") {
            std::cout << "canopy_class,n,mean_coverage_percent\n";
            for (const ClassSummary& s : summary)
                std::cout << s.canopy_class << ',' << s.n << ','
                          << report_detail::fmt("%.4f", s.mean) << "\n";
        } else {
            for (const ClassSummary& s : summary)
                std::cout << s.canopy_class << ": n=" << s.n
                          << " mean coverage=" << report_detail::fmt("%.2f%%", s.mean) << "\n";
        }
    } else if (format == "csv") {
        std::cout << "source,coverage_percent,droplets\n";
        for (const AnalyzedPaper& ap : ok)
            std::cout << ap.source << ',' << report_detail::fmt("%.4f", ap.report.coverage_percent)
                      << ',' << ap.report.stats.n << "\n";
    }

    const bool any_failed = std::any_of(errors.begin(), errors.end(),
                                        [](const std::string& e) { return !e.empty(); });
    return any_failed ? kExitPartial : kExitOk;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path, const std::string& out_dir,
             double iou_threshold, double min_conf) {
    auto preds = read_predictions(pred_path);
    const auto truths = read_truths(truth_path);
    if (min_conf > 0) {
        std::erase_if(preds, [&](const PredInstance& p) { return p.confidence < min_conf; });
    }
    const EvalReport rep = evaluate(preds, truths, iou_threshold);
    write_eval_report_text(rep, std::cout);
    fs::create_directories(out_dir);
    {
        std::ofstream txt(fs::path(out_dir) / "eval_report.txt");
        write_eval_report_text(rep, txt);
    }
    write_pr_curve_csv(rep, (fs::path(out_dir) / "pr_curve.csv").string());
    return kExitOk;
}

int cmd_report(const std::string& run_dir, std::string out_dir, const std::string& format) {
    const fs::path analysis = fs::path(run_dir) / "analysis" / "analysis.json";
    if (!fs::exists(analysis))
        throw std::invalid_argument("no analysis found under " + run_dir + " (run `spraysim analyze --run` first)");
    json idx;
    std::ifstream(analysis) >> idx;
    std::vector<AnalyzedPaper> papers;
    for (const json& p : idx.at("papers")) {
        AnalyzedPaper ap;
        ap.source = p.at("source").get<std::string>();
        ap.paper_id = p.at("paper_id").get<int>();
        ap.canopy_class = p.at("canopy_class").get<std::string>();
        ap.report.coverage_percent = p.at("coverage_percent").get<double>();
        papers.push_back(ap);
    }
    if (papers.empty()) throw std::invalid_argument("analysis index is empty");

    if (out_dir.empty()) out_dir = (fs::path(run_dir) / "report").string();
    fs::create_directories(out_dir);
    const auto summary = aggregate_coverage(papers);
    write_boxplot_csv(summary, (fs::path(out_dir) / "boxplot.csv").string());

    const ClassSummary* small = nullptr;
    const ClassSummary* medium = nullptr;
    const ClassSummary* large = nullptr;
    for (const ClassSummary& s : summary) {
        if (s.canopy_class == "small") small = &s;
        if (s.canopy_class == "medium") medium = &s;
        if (s.canopy_class == "large") large = &s;
    }
    std::ostringstream txt;
    txt << "spray coverage by canopy class\n";
    for (const ClassSummary& s : summary)
        txt << "  " << s.canopy_class << ": n=" << s.n << " mean=" << report_detail::fmt("%.2f%%", s.mean)
            << " median=" << report_detail::fmt("%.2f%%", s.median)
            << " q1=" << report_detail::fmt("%.2f%%", s.q1)
            << " q3=" << report_detail::fmt("%.2f%%", s.q3) << "\n";
    if (small && medium && large) {
        const bool trend = small->mean < medium->mean && large->mean >= medium->mean - 2.0;
        txt << "trend check (small < medium, large >= medium - 2pp): " << (trend ? "pass" : "fail")
            << "\n";
        txt << "reference trial means for comparison: small 16.22%, medium 21.46%, large 21.65%\n";
    }
    std::ofstream(fs::path(out_dir) / "summary.txt") << txt.str();
    if (format == "csv") {
        std::ifstream bp(fs::path(out_dir) / "boxplot.csv");
        std::cout << bp.rdbuf();
    } else {
        std::cout << txt.str();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"canopy-aware variable-rate sprayer simulator and WSP analysis toolkit"};
    app.set_version_flag("--version", std::string("spraysim ") + kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = env_or("SPRAYSIM_OUT", "");
    std::optional<uint64_t> seed_flag;
    uint64_t seed_value = 0;
    bool ppm = false, latency_report = false;
    int jobs = 1;
    std::string format = "txt";
    std::string run_dir;
    std::vector<std::string> inputs;
    std::string pred_path, truth_path;
    double iou_threshold = 0.5, min_conf = 0.0;

    CLI::App* sim = app.add_subcommand("simulate", "run the detection-to-deposition pipeline");
    sim->add_option("--config", config_path, "scene config JSON")->required();
    sim->add_option("--seed", seed_value, "override the config seed");
    sim->add_option("--out", out_dir, "output directory (default ./run, env SPRAYSIM_OUT)");
    sim->add_flag("--ppm", ppm, "also write chromatic PPM renders");
    sim->add_flag("--latency-report", latency_report,
                  "write wall-clock tick latencies (not reproducible run to run)");

    CLI::App* ana = app.add_subcommand("analyze", "analyze WSP rasters (PGM/PPM/PNG)");
    ana->add_option("paths", inputs, "raster files");
    ana->add_option("--run", run_dir, "analyze a simulate output directory");
    ana->add_option("--out", out_dir, "analysis output directory");
    ana->add_option("--jobs", jobs, "parallel workers (default 1)");
    ana->add_option("--format", format, "stdout summary format")->check(CLI::IsMember({"csv", "txt"}));

    CLI::App* ev = app.add_subcommand("eval", "detection metrics from prediction/truth files");
    ev->add_option("--pred", pred_path, "predictions file")->required();
    ev->add_option("--truth", truth_path, "ground-truth file")->required();
    ev->add_option("--out", out_dir, "output directory (default .)");
    ev->add_option("--iou", iou_threshold, "IoU match threshold (default 0.5)");
    ev->add_option("--min-conf", min_conf, "drop predictions below this confidence");

    CLI::App* rep = app.add_subcommand("report", "boxplot-ready coverage summary for a run");
    rep->add_option("--run", run_dir, "run directory with analysis/")->required();
    rep->add_option("--out", out_dir, "report output directory");
    rep->add_option("--format", format, "stdout format")->check(CLI::IsMember({"csv", "txt"}));

    CLI11_PARSE(app, argc, argv);
    if (sim->count("--seed")) seed_flag = seed_value;

    try {
        if (app.got_subcommand(sim))
            return cmd_simulate(config_path, seed_flag, out_dir.empty() ? "run" : out_dir, ppm,
                                latency_report);
        if (app.got_subcommand(ana)) return cmd_analyze(inputs, run_dir, out_dir, jobs, format);
        if (app.got_subcommand(ev))
            return cmd_eval(pred_path, truth_path, out_dir.empty() ? "." : out_dir, iou_threshold,
                            min_conf);
        if (app.got_subcommand(rep)) return cmd_report(run_dir, out_dir, format);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPartial;
    }
    return kExitOk;
}
