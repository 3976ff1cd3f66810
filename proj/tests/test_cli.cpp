#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
};

CliRun run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" + TRAFNET_CLI_PATH + "' " + args + " 2>&1";
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string data(const std::string& name) { return std::string("'") + TRAFNET_DATA_DIR + "/" + name + "'"; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("trafnet_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(Cli, ValidateAcceptsBundledNetworks) {
    for (const char* name : {"example1.json", "example2.json", "freeway.json"}) {
        const CliRun r = run("validate " + data(name));
        EXPECT_EQ(r.code, 0) << name << ": " << r.out;
        EXPECT_NE(r.out.find("network OK"), std::string::npos);
    }
}

TEST(Cli, ValidateRejectsCycle) {
    const CliRun r = run(std::string("validate '") + TRAFNET_TEST_DATA_DIR + "/cyclic.json'");
    EXPECT_EQ(r.code, 1) << r.out;
    EXPECT_NE(r.out.find("acyclicity violated"), std::string::npos) << r.out;
}

TEST(Cli, EquilibriumOfOverloadedMerge) {
    const CliRun r = run("equilibrium " + data("example2.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("classification: infeasible"), std::string::npos) << r.out;
    for (const char* v : {"2000", "1000", "3000", "270", "inf"}) EXPECT_NE(r.out.find(v), std::string::npos) << v;
}

TEST(Cli, MeterReportsPlanAndThroughput) {
    const CliRun r = run("meter " + data("example2.json") + " --verify");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("2500"), std::string::npos);
    EXPECT_NE(r.out.find("1750"), std::string::npos);
    EXPECT_NE(r.out.find("throughput: 4250"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("verification: passed"), std::string::npos) << r.out;
}

TEST(Cli, DemandOverride) {
    const CliRun r = run("equilibrium " + data("example2.json") + " -d 1=1000 -d 4=1000");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("classification: strictly feasible"), std::string::npos) << r.out;
}

TEST(Cli, BadArguments) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("simulate").code, 2);
    EXPECT_EQ(run("simulate /nonexistent/net.json").code, 2);
    EXPECT_EQ(run("simulate " + data("example2.json") + " --dt -1").code, 2);
    EXPECT_EQ(run("simulate " + data("example2.json") + " -d 2=10").code, 2);
    EXPECT_EQ(run("simulate " + data("example2.json") + " -d 1=abc").code, 2);
    EXPECT_EQ(run("simulate " + data("example2.json") + " -d nosuch=1").code, 2);
}

TEST(Cli, SimulateWritesDeterministicCsv) {
    const fs::path dir = scratch("simulate");
    const fs::path a = dir / "a.csv", b = dir / "b.csv";
    ASSERT_EQ(run("simulate " + data("example2.json") + " --horizon 1 -o '" + a.string() + "'").code, 0);
    ASSERT_EQ(run("simulate " + data("example2.json") + " --horizon 1 -o '" + b.string() + "'").code, 0);
    const std::string text = slurp(a);
    EXPECT_EQ(text, slurp(b));
    EXPECT_EQ(text.rfind("t,", 0), 0u) << text.substr(0, 80);
    EXPECT_NE(text.find("rho_1"), std::string::npos);
    EXPECT_NE(text.find("fout_5"), std::string::npos);
    // 1000 steps at stride 10 plus the initial row plus the header.
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 102);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
    const fs::path dir = scratch("env");
    const CliRun r = run("simulate " + data("freeway.json") + " --horizon 0.1 --compact",
                      "TRAFNET_OUTPUT_DIR='" + dir.string() + "'");
    ASSERT_EQ(r.code, 0) << r.out;
    bool found = false;
    for (const auto& entry : fs::directory_iterator(dir)) {
        found = true;
        EXPECT_NE(slurp(entry.path()).find("rhohat_r0"), std::string::npos);
    }
    EXPECT_TRUE(found);
}

TEST(Cli, AnalyzeReportsViolationsAndWeights) {
    const CliRun diverge = run("analyze " + data("example1.json") + " --samples 500");
    EXPECT_NE(diverge.out.find("cooperative at all samples: no"), std::string::npos) << diverge.out;
    EXPECT_NE(diverge.out.find("not applicable"), std::string::npos) << diverge.out;

    const CliRun merge = run("analyze " + data("freeway.json") + " --samples 500 -o -");
    EXPECT_EQ(merge.code, 0) << merge.out;
    EXPECT_NE(merge.out.find("cooperative at all samples: yes"), std::string::npos) << merge.out;
    EXPECT_NE(merge.out.find("weighted Jacobian compartmental: 500/500"), std::string::npos) << merge.out;
}
