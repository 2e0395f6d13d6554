#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "chmcts/gdst.hpp"
#include "chmcts/momdp.hpp"

namespace {

struct Result {
    int code;
    std::string out;
};

// Runs the CLI with stderr merged into the captured output when `merge`.
Result run(const std::string& args, bool merge = false) {
    const std::string cmd = std::string(CHMCTS_CLI_PATH) + " -q " + args + (merge ? " 2>&1" : " 2>/dev/null");
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("chmcts_cli_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

const std::string fixtures = CHMCTS_FIXTURE_DIR;

} // namespace

TEST_SUITE("cli") {

TEST_CASE("checked-in fixtures match the built-in ones") {
    for (const auto& name : chmcts::fixture_names()) {
        const auto path = fixtures + "/" + name + ".json";
        REQUIRE(std::filesystem::exists(path));
        CHECK(chmcts::model_to_json(chmcts::load_model(path)) == chmcts::model_to_json(chmcts::fixture(name)));
    }
    const auto dir = temp_dir("fixtures");
    CHECK(run("fixtures --out " + dir).code == 0);
    CHECK(slurp(dir + "/example1.json") == slurp(fixtures + "/example1.json"));
    CHECK(std::filesystem::exists(dir + "/manifest.json"));
}

TEST_CASE("solve and search agree on example1") {
    const auto s = run("solve --model " + fixtures + "/example1.json");
    REQUIRE(s.code == 0);
    const auto js = nlohmann::json::parse(s.out);
    CHECK(js["ccs"] == nlohmann::json::parse("[[6,0],[0,6]]"));
    CHECK(js["hypervolume"] == 0.0);

    const auto dir = temp_dir("search");
    const auto t = run("search --model " + fixtures + "/example1.json --strategy zooming --trials 1000 --seed 7 --out " + dir);
    REQUIRE(t.code == 0);
    const auto jt = nlohmann::json::parse(t.out);
    CHECK(jt["ccs"] == js["ccs"]);
    const auto m = nlohmann::json::parse(slurp(dir + "/manifest.json"));
    CHECK(m["seed"] == 7);
    CHECK(m.contains("search_seed"));
}

TEST_CASE("usage errors exit with 1") {
    const auto r = run("bench-regret --config missing.json", true);
    CHECK(r.code == 1);
    CHECK(r.out.find("missing.json") != std::string::npos);
    CHECK(run("solve --bogus").code == 1);
    CHECK(run("").code == 1);
    CHECK(run("solve --model /no/such/model.json", true).out.find("/no/such/model.json") != std::string::npos);
    CHECK(run("search --fixture example1 --strategy greedy").code == 1);
}

TEST_CASE("runtime errors exit with 2") {
    const auto dir = temp_dir("infeasible");
    const auto bad = dir + "/cfg.json";
    std::ofstream(bad) << R"({"instance":{"columns":9},"trials":1,"exact_limit":5})";
    const auto r = run("bench-regret --config " + bad + " --out " + dir, true);
    CHECK(r.code == 2);
    CHECK(r.out.find("reduce the number of columns") != std::string::npos);
}

TEST_CASE("gen-env") {
    const auto dir = temp_dir("gen");
    REQUIRE(run("gen-env --columns 4 --noise 0.01 --seed 3 --out " + dir + "/a.json").code == 0);
    REQUIRE(run("gen-env --columns 4 --noise 0.01 --seed 3 --out " + dir + "/b.json").code == 0);
    CHECK(slurp(dir + "/a.json") == slurp(dir + "/b.json"));
    CHECK(slurp(dir + "/a.meta.json") == slurp(dir + "/b.meta.json"));
    const auto meta = nlohmann::json::parse(slurp(dir + "/a.meta.json"));
    CHECK(meta["treasures"].size() == 4);
    CHECK(meta.contains("utopia"));
    CHECK(std::filesystem::exists(dir + "/a.manifest.json"));
    const auto m = chmcts::load_model(dir + "/a.json");
    CHECK(m.horizon() == 400);
}

TEST_CASE("bench-regret is reproducible from its manifest") {
    const auto dir = temp_dir("bench1");
    REQUIRE(run("bench-regret --fixture theorem1 --strategy zooming,hypervolume --trials 300 --replications 2 --seed 5 "
                "--workers 2 --out " + dir).code == 0);
    const auto csv = slurp(dir + "/regret.csv");
    CHECK(csv.rfind("trial,strategy,replication,context_w0,cum_regret\n", 0) == 0);

    const auto manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
    CHECK(manifest["derived_seeds"].size() == 2);
    const auto dir2 = temp_dir("bench2");
    auto cfg = manifest["config"];
    cfg["out_dir"] = dir2;
    std::ofstream(dir2 + "/cfg.json") << cfg.dump();
    REQUIRE(run("bench-regret --config " + dir2 + "/cfg.json --workers 1").code == 0);
    CHECK(slurp(dir2 + "/regret.csv") == csv);
}

TEST_CASE("bench-offline and bench-scale") {
    const auto dir = temp_dir("bench3");
    REQUIRE(run("bench-offline --columns 3 --noise 0 --strategy hypervolume --backup-budget 500 --out " + dir).code == 0);
    CHECK(slurp(dir + "/offline.csv").rfind("backups,strategy,replication,hypervolume\n", 0) == 0);
    REQUIRE(run("bench-scale --scale-columns 3 --strategy zooming --backup-budget 500 --out " + dir).code == 0);
    CHECK(slurp(dir + "/scale.csv").rfind("columns,noise,strategy,ratio,replication\n", 0) == 0);
}

} // TEST_SUITE
