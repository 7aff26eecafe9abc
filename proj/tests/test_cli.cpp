#include "test_util.hpp"

#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef DDIFF_CLI_PATH
#error "DDIFF_CLI_PATH must point at the built command-line tool"
#endif

namespace {

struct Outcome {
    int code = -1;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string f; std::getline(ss, f, sep);) out.push_back(f);
    return out;
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new testing_util::TempDir();
        ASSERT_EQ(run("synth --preset manifold --clusters 4 --points 50 --out-dir " + dir_->path()).code, 0);
        ASSERT_EQ(run("build --features " + f("database.fvecs") + " --k 8 --L 40 --out " + f("idx.bin")).code, 0);
    }
    static void TearDownTestSuite() { delete dir_; }

    static Outcome run(const std::string& args) {
        const std::string err = dir_->file("stderr.txt");
        const std::string cmd = std::string(DDIFF_CLI_PATH) + " " + args + " > " + dir_->file("stdout.txt") +
                                " 2> " + err;
        const int status = std::system(cmd.c_str());
        Outcome r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.err = slurp(err);
        return r;
    }
    static std::string f(const std::string& name) { return dir_->file(name); }
    static std::string data() {
        return " --features " + f("database.fvecs") + " --queries " + f("queries.fvecs");
    }

    static testing_util::TempDir* dir_;
};
testing_util::TempDir* Cli::dir_ = nullptr;

void expect_ranking_tsv(const std::string& path, std::size_t n_queries, std::size_t topk) {
    const auto rows = lines(path);
    ASSERT_EQ(rows.size(), 1 + n_queries * topk);
    EXPECT_EQ(rows[0], "query_id\trank\timage_id\tscore");
    double prev = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto cols = split(rows[i], '\t');
        ASSERT_EQ(cols.size(), 4u);
        const std::size_t q = (i - 1) / topk;
        const std::size_t rank = (i - 1) % topk + 1;
        EXPECT_EQ(std::stoul(cols[0]), q);
        EXPECT_EQ(std::stoul(cols[1]), rank);
        EXPECT_LT(std::stoul(cols[2]), 200u);
        const double score = std::stod(cols[3]);
        if (rank > 1) {
            EXPECT_LE(score, prev + 1e-6);
        }
        prev = score;
    }
}

}  // namespace

TEST_F(Cli, SynthWritesDatasetFiles) {
    EXPECT_EQ(std::filesystem::file_size(f("database.fvecs")), 200u * (4 + 16 * 4));
    EXPECT_EQ(std::filesystem::file_size(f("queries.fvecs")), 8u * (4 + 16 * 4));
    const auto gt = nlohmann::json::parse(slurp(f("gt.json")));
    EXPECT_EQ(gt.size(), 8u);
    EXPECT_EQ(gt.at("0").at("positives").size(), 50u);
}

TEST_F(Cli, BuildWritesExpectedSize) {
    EXPECT_EQ(std::filesystem::file_size(f("idx.bin")), 80u + 200u * 40u * 8u + 4u);
    ASSERT_EQ(run("build --features " + f("database.fvecs") + " --k 8 --L 40 --dtype float64 --out " + f("idx64.bin"))
                  .code,
              0);
    EXPECT_EQ(std::filesystem::file_size(f("idx64.bin")), 80u + 200u * 40u * 12u + 4u);
}

TEST_F(Cli, SearchWritesRankedTsv) {
    ASSERT_EQ(run("search --index " + f("idx.bin") + data() + " --h 5 --topk 7 --out " + f("res.tsv")).code, 0);
    expect_ranking_tsv(f("res.tsv"), 8, 7);
}

TEST_F(Cli, SearchWithQueryMapGroupsRows) {
    std::ofstream(f("qmap.txt")) << "0\n0\n1\n1\n2\n2\n3\n3\n";
    ASSERT_EQ(
        run("search --index " + f("idx.bin") + data() + " --query-map " + f("qmap.txt") + " --topk 5 --out " +
            f("grouped.tsv"))
            .code,
        0);
    expect_ranking_tsv(f("grouped.tsv"), 4, 5);
}

TEST_F(Cli, BaselinesWriteRankedTsv) {
    for (const std::string m : {"knn", "aqe", "online-early"}) {
        ASSERT_EQ(run("baseline --method " + m + data() + " --k 8 --L 40 --topk 4 --out " + f(m + ".tsv")).code, 0)
            << m;
        expect_ranking_tsv(f(m + ".tsv"), 8, 4);
    }
    ASSERT_EQ(run("baseline --method online-late" + data() + " --k 8 --L 40 --topk 4 --out " + f("late.tsv")).code, 0);
    expect_ranking_tsv(f("late.tsv"), 8, 4);
}

TEST_F(Cli, EvalWritesReport) {
    ASSERT_EQ(run("eval --method proposed --index " + f("idx.bin") + data() + " --gt " + f("gt.json") +
                  " --repeats 3 --out " + f("rep.json"))
                  .code,
              0);
    const auto j = nlohmann::json::parse(slurp(f("rep.json")));
    EXPECT_EQ(j.at("method"), "proposed");
    EXPECT_EQ(j.at("n_repeats"), 3);
    EXPECT_EQ(j.at("n_queries"), 8);
    EXPECT_GE(j.at("map").get<double>(), 0.0);
    EXPECT_LE(j.at("map").get<double>(), 1.0);
    EXPECT_GE(j.at("latency_ms").at("mean").get<double>(), 0.0);
    EXPECT_TRUE(j.contains("knn_latency_ms"));

    ASSERT_EQ(run("eval --method knn" + data() + " --gt " + f("gt.json") + " --out " + f("knn.json")).code, 0);
    EXPECT_EQ(nlohmann::json::parse(slurp(f("knn.json"))).at("method"), "knn");
}

TEST_F(Cli, SweepWritesCsv) {
    ASSERT_EQ(run("sweep --L 20,40,200" + data() + " --gt " + f("gt.json") + " --k 8 --out " + f("sweep.csv")).code, 0);
    const auto rows = lines(f("sweep.csv"));
    ASSERT_EQ(rows.size(), 7u);
    EXPECT_EQ(rows[0], "L,mode,mAP,latency_ms");
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(split(rows[i], ',').size(), 4u);
    // At L = n both truncation modes diffuse over the same graph.
    EXPECT_EQ(split(rows[5], ',')[2], split(rows[6], ',')[2]);
}

TEST_F(Cli, ErrorsExitNonZeroWithMessage) {
    Outcome r = run("build --features " + f("missing.fvecs") + " --out " + f("x.bin"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("missing.fvecs"), std::string::npos) << r.err;

    r = run("build --features " + f("database.fvecs") + " --L 500 --out " + f("x.bin"));
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(r.err.empty());

    std::ofstream(f("junk.bin"), std::ios::binary) << "not an index at all, just text";
    r = run("search --index " + f("junk.bin") + data() + " --out " + f("x.tsv"));
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(r.err.empty());

    r = run("baseline --method nope" + data() + " --out " + f("x.tsv"));
    EXPECT_NE(r.code, 0);

    r = run("eval --method proposed" + data() + " --gt " + f("gt.json") + " --out " + f("x.json"));
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(r.err.empty());

    EXPECT_NE(run("").code, 0);
}
