#include <smalldil/io.hpp>
#include <smalldil/pipeline.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>

using namespace smalldil;
namespace fs = std::filesystem;

namespace {

std::string data(const std::string& f) { return std::string(SMALLDIL_DATA_DIR) + "/" + f; }

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args) {
    std::string cmd = std::string(SMALLDIL_CLI) + " " + args + " 2>/dev/null";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    for (size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

nlohmann::json run_json(const std::string& args, int expect_code = 0) {
    auto r = run("--json " + args);
    EXPECT_EQ(r.code, expect_code) << args;
    return nlohmann::json::parse(r.out);
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("smalldil_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& f) const { return (dir_ / f).string(); }
    fs::path dir_;
};

// flattened leaves of a JSON report, as the text rendering prints them
void leaves(const nlohmann::ordered_json& j, const std::string& prefix, std::vector<std::string>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) leaves(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array() && std::any_of(j.begin(), j.end(), [](const auto& e) { return e.is_structured(); })) {
        for (size_t i = 0; i < j.size(); ++i) leaves(j[i], prefix + "[" + std::to_string(i) + "]", out);
    } else {
        out.push_back(prefix + ": " + (j.is_string() ? j.get<std::string>() : j.dump()));
    }
}

}  // namespace

TEST_F(Cli, ValidateAcceptsE2) {
    auto r = run("validate " + data("e2.json"));
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(contains(r.out, "valid: true"));
    EXPECT_TRUE(contains(r.out, "euler_characteristic: -1"));
}

TEST_F(Cli, ValidateNamesTheBrokenSegment) {
    auto j = run_json("validate " + data("e2_broken.json"), 1);
    EXPECT_FALSE(j["valid"].get<bool>());
    ASSERT_FALSE(j["errors"].empty());
    EXPECT_TRUE(contains(j["errors"][0].get<std::string>(), "segment 1"));
}

TEST_F(Cli, MissingFileIsExitThree) {
    EXPECT_EQ(run("validate " + path("absent.json")).code, 3);
    EXPECT_EQ(run("analyze " + path("absent.json")).code, 3);
    EXPECT_EQ(run("pf hamsong " + path("absent.json")).code, 3);
}

TEST_F(Cli, UsageErrorsAreExitFour) {
    EXPECT_EQ(run("build " + data("e2.json") + " --stage bogus").code, 4);
    EXPECT_EQ(run("frobnicate").code, 4);
    EXPECT_EQ(run("").code, 4);
    EXPECT_EQ(run("pf random --trials many").code, 4);
}

TEST_F(Cli, AnalyzeE2) {
    auto j = run_json("analyze " + data("e2.json"));
    EXPECT_EQ(j["verdict"], "pass");
    EXPECT_EQ(j["euler_characteristic"], -1);
    Rat lo = parse_rational(j["dilatation"]["lo"].get<std::string>());
    Rat hi = parse_rational(j["dilatation"]["hi"].get<std::string>());
    EXPECT_LE(lo, parse_rational("2.618034"));
    EXPECT_GE(hi, parse_rational("2.618033"));
    EXPECT_LT(hi - lo, parse_rational("1e-8"));
}

TEST_F(Cli, AnalyzeE3Passes) { EXPECT_EQ(run_json("analyze " + data("e3.json"))["verdict"], "pass"); }

TEST_F(Cli, AnalyzeWithSmallPFailsMembership) {
    auto j = run_json("analyze " + data("e2.json") + " --P 1.5", 2);
    EXPECT_EQ(j["verdict"], "fail");
    for (const auto& c : j["checks"])
        EXPECT_EQ(c["pass"].get<bool>(), c["name"] != "psi membership") << c["name"];
}

TEST_F(Cli, AnalyzeRejectsInvalidInput) { EXPECT_EQ(run("analyze " + data("e2_broken.json")).code, 1); }

TEST_F(Cli, BuildStageXReportsEuler) {
    auto j = run_json("build " + data("e2.json") + " --stage x -o " + path("out"));
    ASSERT_EQ(j["stages"].size(), 1u);
    EXPECT_EQ(j["stages"][0]["punctured_euler"], -1);
    EXPECT_TRUE(fs::exists(path("out/x.json")));
    EXPECT_FALSE(fs::exists(path("out/y.json")));
}

TEST_F(Cli, BuildQuotientMatchesMappingTorus) {
    auto j = run_json("build " + data("e2.json") + " --stage quotient -o " + path("out"));
    EXPECT_EQ(j["verdict"], "pass");
    ASSERT_EQ(j["stages"].size(), 4u);
    EXPECT_EQ(j["stages"][2]["canonical_form_sha256"], j["stages"][3]["canonical_form_sha256"]);
    EXPECT_EQ(j["stages"][2]["betti"], nlohmann::json({1, 1, 1, 1}));
    auto q = nlohmann::json::parse(read_text_file(path("out/quotient.json")));
    auto h = nlohmann::json::parse(read_text_file(path("out/hat-y.json")));
    EXPECT_EQ(q["canonical_form"], h["canonical_form"]);
    auto hex = q["canonical_form"].get<std::string>();
    EXPECT_FALSE(hex.empty());
    EXPECT_EQ(hex.find_first_not_of("0123456789abcdef"), std::string::npos);
}

TEST_F(Cli, BuildStopsAtTheFailingCheck) {
    auto j = run_json("build " + data("e3.json") + " --stage quotient --no-forms", 2);
    EXPECT_EQ(j["verdict"], "fail");
    const auto& last = j["checks"].back();
    EXPECT_FALSE(last["pass"].get<bool>());
    EXPECT_TRUE(contains(last["name"].get<std::string>(), "phi cellular"));
}

TEST_F(Cli, StagedAndDirectBuildsAgree) {
    ASSERT_EQ(run("build " + data("cover4.json") + " --stage quotient -o " + path("direct")).code, 0);
    ASSERT_EQ(run("build " + data("cover4.json") + " --stage hat-y -o " + path("staged")).code, 0);
    ASSERT_EQ(run("build " + data("cover4.json") + " --stage quotient -o " + path("staged")).code, 0);
    for (auto f : {"x.json", "y.json", "hat-y.json", "quotient.json"})
        EXPECT_EQ(read_text_file(path(std::string("direct/") + f)), read_text_file(path(std::string("staged/") + f))) << f;
    // the stored form is the form of the stored complex
    auto stored = read_complex_file(path("direct/quotient.json"));
    EXPECT_EQ(form_hex(canonical_form(stored.cx)), stored.tags["canonical_form"].get<std::string>());
}

TEST_F(Cli, ClassifyEmptyList) {
    auto j = run_json("classify");
    EXPECT_EQ(j["group_count"], 0);
}

TEST_F(Cli, ClassifyGroupsRelabeledQuotient) {
    ASSERT_EQ(run("build " + data("e2.json") + " --stage quotient --no-forms -o " + path("e2")).code, 0);
    ASSERT_EQ(run("build " + data("cover4.json") + " --stage quotient --no-forms -o " + path("cover4")).code, 0);
    auto w = read_complex_file(path("e2/quotient.json"));
    std::mt19937_64 rng(5);
    write_json_file(path("relabeled.json"), complex_to_json(relabeled(w.cx, rng)));
    auto one = run_json("classify " + path("e2/quotient.json") + " " + path("relabeled.json"));
    EXPECT_EQ(one["group_count"], 1);
    auto two = run_json("classify " + path("e2/quotient.json") + " " + path("cover4/quotient.json"));
    EXPECT_EQ(two["group_count"], 2);
}

TEST_F(Cli, ClassifyTaggedSeparatesPairs) {
    ASSERT_EQ(run("build " + data("e2.json") + " --stage quotient --no-forms -o " + path("e2")).code, 0);
    auto j = nlohmann::json::parse(read_text_file(path("e2/quotient.json")));
    j["marked"] = nlohmann::json::array();
    write_text_file(path("untagged.json"), j.dump());
    auto plain = run_json("classify " + path("e2/quotient.json") + " " + path("untagged.json"));
    EXPECT_EQ(plain["group_count"], 1);
    auto tagged = run_json("classify --tagged " + path("e2/quotient.json") + " " + path("untagged.json"));
    EXPECT_EQ(tagged["group_count"], 2);
}

TEST_F(Cli, ClassifyRejectsInvalidFile) {
    write_text_file(path("bad.json"), R"({"cells": [{"id": 1, "dim": 1, "boundary": []}]})");
    EXPECT_EQ(run("classify " + path("bad.json")).code, 1);
}

TEST_F(Cli, PfHamsongOnThreeByThree) {
    auto j = run_json("pf hamsong " + data("pf3.json"));
    EXPECT_EQ(j["report"]["lhs"], "4");
    EXPECT_EQ(j["report"]["min_row_sum_of_power"], "5");
    EXPECT_TRUE(j["report"]["holds"].get<bool>());
}

TEST_F(Cli, PfSpectralAndDot) {
    auto j = run_json("pf spectral " + data("pf3.json") + " --dot " + path("g.dot"));
    Rat lo = parse_rational(j["spectral_radius"]["lo"].get<std::string>());
    Rat hi = parse_rational(j["spectral_radius"]["hi"].get<std::string>());
    Rat mid = parse_rational(j["spectral_radius"]["midpoint"].get<std::string>());
    EXPECT_GE(mid, parse_rational("1.839286"));
    EXPECT_LE(mid, parse_rational("1.839288"));
    EXPECT_LE(lo, parse_rational("1.8392867552"));
    EXPECT_GE(hi, parse_rational("1.8392867553"));
    auto dot = read_text_file(path("g.dot"));
    EXPECT_TRUE(contains(dot, "digraph"));
}

TEST_F(Cli, PfRefusesNonPrimitive) {
    EXPECT_EQ(run("pf spectral " + data("swap2.json")).code, 1);
    EXPECT_EQ(run("pf hamsong " + data("swap2.json")).code, 1);
}

TEST_F(Cli, PfRandomFindsNoCounterexample) {
    auto j = run_json("pf random --n 5 --trials 1000 --seed 7");
    EXPECT_EQ(j["counterexamples"], 0);
    long total = 0;
    for (const auto& c : j["matrices_by_size"]) total += c.get<long>();
    EXPECT_EQ(total, 1000);
}

TEST_F(Cli, ReportsAreByteIdentical) {
    for (std::string args : {"analyze " + data("e3.json"), std::string("pf random --n 4 --trials 50 --seed 3"),
                             "build " + data("e2.json") + " --stage quotient"}) {
        auto a = run(args), b = run(args);
        EXPECT_EQ(a.out, b.out) << args;
        auto c = run("--json " + args), d = run("--json " + args);
        EXPECT_EQ(c.out, d.out) << args;
    }
}

TEST_F(Cli, TextAndJsonAgree) {
    for (std::string args : {"analyze " + data("e2.json"), "pf hamsong " + data("pf3.json"),
                             "build " + data("e2.json") + " --stage hat-y"}) {
        auto text = run(args).out;
        auto j = nlohmann::ordered_json::parse(run("--json " + args).out);
        std::vector<std::string> ls;
        leaves(j, "", ls);
        std::string joined;
        for (const auto& l : ls) joined += l + "\n";
        EXPECT_EQ(text, joined) << args;
    }
}

TEST_F(Cli, ReportFileMatchesStdout) {
    auto r = run("--json analyze " + data("e2.json") + " -o " + path("r.json"));
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(read_text_file(path("r.json")), r.out);
}
