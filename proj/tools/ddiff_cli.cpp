// ddiff: offline index build, online search, baselines, evaluation and sweeps.

#include <ddiff/ddiff.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace ddiff;

struct DataOptions {
    std::string features;
    std::string format = "fvecs";
    std::string image_map;
    std::string queries;
    std::string query_map;
};

struct GraphOptions {
    std::size_t k = 50;
    double alpha = 0.99;
    double gamma = 3.0;
};

void add_data_options(CLI::App* app, DataOptions& d, bool need_queries) {
    app->add_option("--features", d.features, "Database features")->required();
    app->add_option("--format", d.format, "Feature file format")->check(CLI::IsMember({"fvecs", "raw"}));
    app->add_option("--image-map", d.image_map, "Image id of every database feature, one per line");
    auto* q = app->add_option("--queries", d.queries, "Query features");
    if (need_queries) q->required();
    app->add_option("--query-map", d.query_map, "Query id of every query feature row, one per line");
}

void add_graph_options(CLI::App* app, GraphOptions& g) {
    app->add_option("--k", g.k, "Graph neighbors")->check(CLI::PositiveNumber);
    app->add_option("--alpha", g.alpha, "Diffusion alpha")->check(CLI::Range(0.0, 1.0));
    app->add_option("--gamma", g.gamma, "Similarity exponent")->check(CLI::PositiveNumber);
}

FeatureFormat parse_format(const std::string& f) { return f == "raw" ? FeatureFormat::raw_f32 : FeatureFormat::fvecs; }

FeatureSet load_database(const DataOptions& d) {
    if (d.image_map.empty()) return load_features(d.features, parse_format(d.format));
    return load_features(d.features, parse_format(d.format), d.image_map);
}

std::vector<FeatureSet> load_query_sets(const DataOptions& d) {
    const FeatureSet q = load_features(d.queries, parse_format(d.format));
    if (d.query_map.empty()) return split_queries(q);
    const std::vector<Index> map = load_image_map(d.query_map);
    return split_queries(q, map);
}

std::vector<GroundTruth> truth_for(const std::string& path, std::size_t n_queries) {
    const auto gt = load_ground_truth(path);
    std::vector<GroundTruth> out;
    for (std::size_t q = 0; q < n_queries; ++q) {
        const auto it = gt.find(static_cast<Index>(q));
        if (it == gt.end()) throw FormatError("ground truth has no entry for query " + std::to_string(q));
        out.push_back(it->second);
    }
    return out;
}

void write_results(const std::string& path, const Retriever& r, const std::vector<FeatureSet>& queries) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("cannot write " + path);
    std::fprintf(f, "query_id\trank\timage_id\tscore\n");
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const auto top = r.top(queries[q]);
        for (std::size_t rank = 0; rank < top.size(); ++rank)
            std::fprintf(f, "%zu\t%zu\t%u\t%.6f\n", q, rank + 1, static_cast<unsigned>(top[rank].first),
                         top[rank].second);
    }
    if (std::fclose(f) != 0) throw IoError("error writing " + path);
}

SparseMatrix full_laplacian(const FeatureSet& db, const GraphOptions& g, std::size_t threads) {
    return build_database_laplacian(db, GraphParams{g.k, g.alpha, SimilarityConfig{g.gamma}}, threads);
}

std::vector<std::size_t> parse_sizes(const std::vector<std::string>& parts) {
    std::vector<std::size_t> out;
    for (const auto& p : parts) {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(p, &used);
        if (used != p.size() || v == 0) throw InvalidArgument("bad L value '" + p + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusion retrieval with a precomputed sparsified inverse"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "Print this help message and exit");  // --h is the query neighbor count
    std::size_t threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");

    // build
    DataOptions build_data;
    GraphOptions build_graph;
    std::size_t build_L = 5000;
    std::string build_out;
    std::size_t build_iters = CgConfig::offline().max_iters;
    double build_tol = CgConfig::offline().residual_tol;
    std::string build_dtype = "float32";
    auto* build = app.add_subcommand("build", "Precompute the sparsified inverse of a database");
    add_data_options(build, build_data, false);
    add_graph_options(build, build_graph);
    build->add_option("--L", build_L, "Truncation size")->check(CLI::PositiveNumber);
    build->add_option("--out", build_out, "Index file")->required();
    build->add_option("--max-iters", build_iters, "CG iteration cap per column")->check(CLI::PositiveNumber);
    build->add_option("--tol", build_tol, "CG relative residual tolerance")->check(CLI::PositiveNumber);
    build->add_option("--dtype", build_dtype, "Stored value type")->check(CLI::IsMember({"float32", "float64"}));

    // search / baseline / eval share these
    DataOptions data;
    GraphOptions graph;
    MethodParams mp;
    std::string index_path;
    std::string out_path;
    std::string method_name = "proposed";
    std::string gt_path;
    std::size_t repeats = 10;

    auto add_query_flags = [&](CLI::App* sub) {
        add_data_options(sub, data, true);
        sub->add_option("--h", mp.h, "Query neighbors forming the initial state")->check(CLI::PositiveNumber);
        sub->add_option("--topk", mp.topk, "Results per query")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_path, "Output file")->required();
    };
    auto add_baseline_flags = [&](CLI::App* sub) {
        add_graph_options(sub, graph);
        sub->add_option("--L", mp.L, "Truncation size for online diffusion")->check(CLI::PositiveNumber);
        sub->add_option("--k-exp", mp.k_exp, "Neighbors averaged by query expansion")->check(CLI::PositiveNumber);
        sub->add_option("--cg-iters", mp.online_cg.max_iters, "Online CG iteration cap")->check(CLI::PositiveNumber);
    };

    auto* search = app.add_subcommand("search", "Rank the database for each query with a prebuilt index");
    search->add_option("--index", index_path, "Index file")->required();
    add_query_flags(search);

    auto* baseline = app.add_subcommand("baseline", "Rank with a reference method");
    baseline->add_option("--method", method_name, "knn, aqe, online-early or online-late")
        ->required()
        ->check(CLI::IsMember({"knn", "aqe", "online-early", "online-late"}));
    add_query_flags(baseline);
    add_baseline_flags(baseline);

    auto* eval = app.add_subcommand("eval", "mAP and latency report for one method");
    eval->add_option("--method", method_name, "proposed, knn, aqe, online-early or online-late")
        ->check(CLI::IsMember({"proposed", "knn", "aqe", "online-early", "online-late"}));
    eval->add_option("--index", index_path, "Index file (proposed)");
    eval->add_option("--gt", gt_path, "Ground truth JSON")->required();
    eval->add_option("--repeats", repeats, "Timed runs per query")->check(CLI::PositiveNumber);
    add_query_flags(eval);
    add_baseline_flags(eval);

    // sweep
    std::vector<std::string> sweep_L{"200", "500", "1000", "2000", "5000"};
    std::vector<std::string> sweep_modes{"early", "late"};
    std::string synthetic;
    std::uint64_t seed = SynthConfig{}.seed;
    auto* sweep = app.add_subcommand("sweep", "mAP and latency of online diffusion over truncation sizes");
    sweep->add_option("--L", sweep_L, "Truncation sizes")->delimiter(',');
    sweep->add_option("--modes", sweep_modes, "Truncation modes")->delimiter(',')->check(CLI::IsMember({"early", "late"}));
    sweep->add_option("--synthetic", synthetic, "Use a generated benchmark instead of files")
        ->check(CLI::IsMember({"manifold", "truncation"}));
    sweep->add_option("--seed", seed, "Generator seed for --synthetic");
    sweep->add_option("--features", data.features, "Database features");
    sweep->add_option("--format", data.format, "Feature file format")->check(CLI::IsMember({"fvecs", "raw"}));
    sweep->add_option("--image-map", data.image_map, "Image id of every database feature");
    sweep->add_option("--queries", data.queries, "Query features");
    sweep->add_option("--query-map", data.query_map, "Query id of every query feature row");
    sweep->add_option("--gt", gt_path, "Ground truth JSON");
    sweep->add_option("--h", mp.h, "Query neighbors forming the initial state")->check(CLI::PositiveNumber);
    sweep->add_option("--cg-iters", mp.online_cg.max_iters, "Online CG iteration cap")->check(CLI::PositiveNumber);
    sweep->add_option("--repeats", repeats, "Timed runs per query")->check(CLI::PositiveNumber);
    sweep->add_option("--out", out_path, "CSV output")->required();
    add_graph_options(sweep, graph);

    // synth
    SynthConfig synth_cfg;
    std::string synth_preset = "manifold";
    std::string synth_dir;
    auto* synth = app.add_subcommand("synth", "Write a generated curved-manifold benchmark");
    synth->add_option("--preset", synth_preset, "Base configuration")->check(CLI::IsMember({"manifold", "truncation"}));
    synth->add_option("--clusters", synth_cfg.n_clusters, "Number of clusters");
    synth->add_option("--points", synth_cfg.points_per_cluster, "Database points per cluster");
    synth->add_option("--queries-per-cluster", synth_cfg.queries_per_cluster, "Queries per cluster");
    synth->add_option("--d", synth_cfg.d, "Dimension");
    synth->add_option("--curvature", synth_cfg.curvature, "Curve bending");
    synth->add_option("--noise", synth_cfg.noise_sigma, "Gaussian noise sigma");
    synth->add_option("--hub", synth_cfg.hub_weight, "Pull of clusters towards a shared direction");
    synth->add_option("--seed", synth_cfg.seed, "Generator seed");
    synth->add_option("--out-dir", synth_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build) {
            const FeatureSet db = load_database(build_data);
            const IndexParams p{build_graph.k, build_L, build_graph.alpha, SimilarityConfig{build_graph.gamma},
                                CgConfig{build_iters, build_tol}};
            if (build_dtype == "float64") {
                save_index(build_index<double>(db, p, threads).index, build_out);
            } else {
                save_index(build_index<float>(db, p, threads).index, build_out);
            }
            const IndexHeader h = read_index_header(build_out);
            std::cout << "wrote " << build_out << ": n=" << h.n << " L=" << h.L << " bytes=" << h.file_size() << "\n";
            return 0;
        }

        if (*synth) {
            SynthConfig base = synth_preset == "truncation" ? SynthConfig::truncation_benchmark()
                                                            : SynthConfig::manifold_benchmark();
            // Flags given explicitly override the preset.
            for (const auto* opt : synth->get_options()) {
                if (opt->count() == 0) continue;
                const std::string name = opt->get_name();
                if (name == "--clusters") base.n_clusters = synth_cfg.n_clusters;
                if (name == "--points") base.points_per_cluster = synth_cfg.points_per_cluster;
                if (name == "--queries-per-cluster") base.queries_per_cluster = synth_cfg.queries_per_cluster;
                if (name == "--d") base.d = synth_cfg.d;
                if (name == "--curvature") base.curvature = synth_cfg.curvature;
                if (name == "--noise") base.noise_sigma = synth_cfg.noise_sigma;
                if (name == "--hub") base.hub_weight = synth_cfg.hub_weight;
                if (name == "--seed") base.seed = synth_cfg.seed;
            }
            const SyntheticDataset ds = synth_manifolds(base);
            save_fvecs(synth_dir + "/database.fvecs", ds.database);
            save_fvecs(synth_dir + "/queries.fvecs", ds.queries);
            std::ofstream gt(synth_dir + "/gt.json");
            if (!gt) throw IoError("cannot write " + synth_dir + "/gt.json");
            gt << ground_truth_to_json(ds.truth).dump() << "\n";
            std::cout << "wrote " << ds.database.n() << " database and " << ds.queries.n() << " query vectors to "
                      << synth_dir << "\n";
            return 0;
        }

        mp.k = graph.k;
        mp.alpha = graph.alpha;
        mp.sim = SimilarityConfig{graph.gamma};

        if (*sweep) {
            std::optional<SyntheticDataset> ds;
            FeatureSet db;
            std::vector<FeatureSet> queries;
            std::vector<GroundTruth> truth;
            if (!synthetic.empty()) {
                SynthConfig c = synthetic == "truncation" ? SynthConfig::truncation_benchmark()
                                                          : SynthConfig::manifold_benchmark();
                c.seed = seed;
                ds = synth_manifolds(c);
                db = ds->database;
                queries = split_queries(ds->queries);
                truth = ds->truth;
            } else {
                if (data.features.empty() || data.queries.empty() || gt_path.empty())
                    throw InvalidArgument("sweep needs --synthetic or --features, --queries and --gt");
                db = load_database(data);
                queries = load_query_sets(data);
                truth = truth_for(gt_path, queries.size());
            }
            std::vector<TruncationMode> modes;
            for (const auto& m : sweep_modes) modes.push_back(m == "early" ? TruncationMode::early : TruncationMode::late);
            const auto Ls = parse_sizes(sweep_L);
            const SparseMatrix lap = full_laplacian(db, graph, threads);
            const auto rows = sweep_truncation(db, queries, truth, Ls, modes, mp, lap, repeats);
            std::ofstream out(out_path);
            if (!out) throw IoError("cannot write " + out_path);
            write_sweep_csv(out, rows);
            return 0;
        }

        const FeatureSet db = load_database(data);
        const std::vector<FeatureSet> queries = load_query_sets(data);
        const Method method = parse_method(method_name);

        std::optional<SparsifiedInverse> index;
        if (method == Method::proposed) {
            if (index_path.empty()) throw InvalidArgument("--index is required for the proposed method");
            index = load_index<float>(index_path);
        }
        std::optional<SparseMatrix> lap;
        if (method == Method::online_late) lap = full_laplacian(db, graph, threads);

        const Retriever retriever(method, db, mp, index ? &*index : nullptr, lap ? &*lap : nullptr);

        if (*search || *baseline) {
            write_results(out_path, retriever, queries);
            return 0;
        }

        const std::vector<GroundTruth> truth = truth_for(gt_path, queries.size());
        const BenchReport report = bench_latency(retriever, queries, truth, repeats);
        std::ofstream out(out_path);
        if (!out) throw IoError("cannot write " + out_path);
        out << report.to_json().dump(2) << "\n";
        std::cout << report.method << ": mAP=" << report.map << " mean latency=" << report.latency.mean_ms << " ms\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
