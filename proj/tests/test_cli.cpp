#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliRun {
    int status = -1;
    std::string out;
    std::string err;
};

const std::string data_dir = RAPIDLOG_TEST_DATA;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / (std::string("rapidlog_cli_") + info->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    CliRun run(const std::string& args, const std::string& env = "") {
        const auto err = dir / "stderr.txt";
        const std::string cmd = env + " '" + std::string(RAPIDLOG_CLI) + "' " + args + " 2>'" + err.string() + "'";
        CliRun r;
        FILE* pipe = popen(cmd.c_str(), "r");
        if (!pipe) return r;
        char buf[4096];
        std::size_t n;
        while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
        const int raw = pclose(pipe);
        r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        r.err = slurp(err);
        return r;
    }

    std::string path(const std::string& name) const { return "'" + (dir / name).string() + "'"; }
    static std::string data(const std::string& name) { return "'" + data_dir + "/" + name + "'"; }

    std::string build_db() {
        const auto r = run("build-db --input " + data("history.jsonl") + " --out " + path("d.rpdb"));
        EXPECT_EQ(r.status, 0) << r.err;
        return path("d.rpdb");
    }
};

std::vector<nlohmann::json> jsonl(const std::string& text) {
    std::vector<nlohmann::json> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(nlohmann::json::parse(line));
    return out;
}

}  // namespace

TEST_F(Cli, DetectWritesOneResultPerRecord) {
    const auto db = build_db();
    const auto r = run("detect --db " + db + " --test " + data("test.jsonl") + " --aggregation mean");
    ASSERT_EQ(r.status, 0) << r.err;
    const auto rows = jsonl(r.out);
    ASSERT_EQ(rows.size(), 20u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i]["index"], i);
        for (const char* key : {"seq_id", "score", "pred", "threshold", "nearest_doc"}) {
            EXPECT_TRUE(rows[i].contains(key)) << key;
        }
    }
}

TEST_F(Cli, ConfigIsEchoedAndReplays) {
    const auto db = build_db();
    const std::string args = "detect --db " + db + " --test " + data("test.jsonl") + " --core-k 2 --aggregation mean";
    const auto first = run(args);
    ASSERT_EQ(first.status, 0) << first.err;
    const auto config = nlohmann::json::parse(first.err);
    EXPECT_EQ(config["core-k"], 2);
    EXPECT_EQ(config["aggregation"], "mean");
    {
        std::ofstream(dir / "config.json") << first.err;
    }
    const auto replay = run("--config " + path("config.json"));
    ASSERT_EQ(replay.status, 0) << replay.err;
    EXPECT_EQ(replay.out, first.out);
}

TEST_F(Cli, WorkersDoNotChangeOutput) {
    const auto db = build_db();
    const std::string args = "detect --db " + db + " --test " + data("test.jsonl");
    const auto one = run(args, "RAPIDLOG_WORKERS=1");
    const auto many = run("--workers 4 " + args);
    ASSERT_EQ(one.status, 0);
    ASSERT_EQ(many.status, 0);
    EXPECT_EQ(one.out, many.out);
}

TEST_F(Cli, EmbeddingsFileMatchesInlineProvider) {
    const auto db = build_db();
    ASSERT_EQ(run("embed --db " + db + " --out " + path("d.rpde")).status, 0);
    const std::string args = "detect --db " + db + " --test " + data("test.jsonl");
    const auto inline_run = run(args);
    const auto file_run = run(args + " --embeddings " + path("d.rpde"));
    ASSERT_EQ(file_run.status, 0) << file_run.err;
    EXPECT_EQ(file_run.out, inline_run.out);
}

TEST_F(Cli, EvalBestF1OnFrozenFixture) {
    const auto r = run("eval --results " + data("eval_results.jsonl") + " --labels " + data("eval_labels.jsonl") +
                       " --best-f1 --auroc");
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(r.out, "best_f1 0.666667 threshold 0.6\nauroc 0.666667\n");
}

TEST_F(Cli, EvalEndToEnd) {
    const auto db = build_db();
    const auto r = run("eval --db " + db + " --test " + data("test.jsonl") + " --aggregation mean --json");
    ASSERT_EQ(r.status, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["n"], 20);
    EXPECT_EQ(j["positives"], 2);
    EXPECT_EQ(j["best_f1"], 1.0);
    EXPECT_EQ(j["auroc"], 1.0);
}

TEST_F(Cli, Coverage) {
    const auto db = build_db();
    const auto r = run("coverage --db " + db + " --test " + data("history.jsonl"));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    // History includes its abnormal records, which build-db left out.
    EXPECT_LT(j["seq_coverage"].get<double>(), 1.0);
    EXPECT_GT(j["seq_coverage"].get<double>(), 0.8);
    EXPECT_TRUE(j.contains("token_coverage_unique"));
}

TEST_F(Cli, Ablate) {
    const auto r = run("ablate --corpus " + data("history.jsonl") +
                       " --axis core_ratios --values 1.0,0.5 --aggregation mean --report-format csv");
    ASSERT_EQ(r.status, 0) << r.err;
    const auto lines = std::count(r.out.begin(), r.out.end(), '\n');
    EXPECT_EQ(lines, 3);
    EXPECT_EQ(r.out.rfind("axis,value,", 0), 0u);
}

TEST_F(Cli, UsageErrorsExitOne) {
    const auto db = build_db();
    const auto zero = run("detect --db " + db + " --test " + data("test.jsonl") + " --core-ratio 0");
    EXPECT_EQ(zero.status, 1);
    EXPECT_NE(zero.err.find("--core-ratio"), std::string::npos);
    EXPECT_EQ(run("detect --db " + db + " --test " + data("test.jsonl") + " --score-mode median").status, 1);
    EXPECT_EQ(run("frobnicate").status, 1);
    EXPECT_EQ(run("eval").status, 1);
    EXPECT_EQ(run("--help").status, 0);
}

TEST_F(Cli, DataErrorsExitTwo) {
    {
        std::ofstream(dir / "bad.jsonl") << "{\"text\":\"ok\"}\n{not json\n";
        std::ofstream(dir / "junk.rpdb") << "definitely not a database";
    }
    const auto db = build_db();
    const auto bad = run("detect --db " + db + " --test " + path("bad.jsonl"));
    EXPECT_EQ(bad.status, 2);
    EXPECT_NE(bad.err.find("line 2"), std::string::npos) << bad.err;
    EXPECT_EQ(run("detect --db " + path("junk.rpdb") + " --test " + data("test.jsonl")).status, 2);
}
