#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>

#include <json.hpp>

#include "echotriage/pipeline.hpp"
#include "echotriage/store.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int status = -1;
    std::string out;
};

Result cli(const std::string& args) {
    const std::string cmd = std::string("'") + ET_CLI + "' " + args + " 2>&1";
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    Result r;
    char buf[4096];
    while (const auto n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
    const int raw = ::pclose(p);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string q(const fs::path& p) {
    return "'" + p.string() + "'";
}

}  // namespace

TEST_CASE("workload subcommand", "[cli]") {
    auto r = cli("workload");
    CHECK(r.status == 0);
    CHECK(r.out == "180.00 hours/year\n");
    r = cli("workload --studies 10000 --prevalence 0.4 --sensitivity 1.0 --minutes 10");
    CHECK(r.out == "666.67 hours/year\n");
    CHECK(cli("workload --prevalence 1.5").status != 0);
}

TEST_CASE("calibrate subcommand", "[cli]") {
    const auto r = cli("calibrate --cohort " + q(et_test::fixture("cohort_example.csv")) + " --precision-floor 0.8");
    REQUIRE(r.status == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["chosen_cutoff"] == 61.0);
    CHECK(j["achieved_precision"] == 1.0);
    CHECK(j["feasible"] == true);

    et_test::TempDir tmp;
    et_test::write_text(tmp / "inv.csv", "study_id,estimated_lvef,truly_normal\na,30,1\nb,70,0\n");
    CHECK(cli("calibrate --cohort " + q(tmp / "inv.csv")).status == 4);
}

TEST_CASE("phantom, run and serve-side store from the command line", "[cli][e2e]") {
    et_test::TempDir tmp;
    auto r = cli("phantom --spec " + q(et_test::config("phantom_sweep.toml")) + " --out " + q(tmp / "sweep"));
    REQUIRE(r.status == 0);
    CHECK(r.out == "wrote 6 clip(s) to " + (tmp / "sweep").string() + "\n");
    CHECK(fs::exists(tmp / "sweep" / "ef15" / "ef15-a4c.dcm"));

    r = cli("run " + q(tmp / "sweep") + " --config " + q(et_test::config("pipeline.toml")) + " --store " +
            q(tmp / "store") + " --report-dir " + q(tmp / "reports"));
    REQUIRE(r.status == 0);
    INFO(r.out);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 6);
    CHECK(r.out.find("ef15\tABNORMAL\t") != std::string::npos);
    CHECK(r.out.find("ef55\tGREY\t") != std::string::npos);
    CHECK(r.out.find("ef75\tNORMAL\t") != std::string::npos);

    const echotriage::ReportStore store(tmp / "store");
    CHECK(store.list().size() == 6);
    CHECK(et_test::read_text(tmp / "reports" / "ef65.json") == *store.load_machine_json("ef65"));

    r = cli("verify --store " + q(tmp / "store"));
    CHECK(r.status == 0);
    CHECK(r.out.find("0 corrupt") != std::string::npos);

    CHECK(cli("run " + q(tmp / "sweep") + " --config " + q(tmp / "missing.toml")).status != 0);
}

TEST_CASE("ingest with anonymization", "[cli][anon]") {
    et_test::TempDir tmp;
    fs::create_directories(tmp / "in");
    fs::copy_file(et_test::fixture("phi_all.dcm"), tmp / "in" / "phi_all.dcm");
    fs::copy_file(et_test::fixture("minimal_4x4x2.dcm"), tmp / "in" / "minimal.dcm");

    auto r = cli("ingest " + q(tmp / "in") + " --out " + q(tmp / "store") + " --anonymize");
    INFO(r.out);
    REQUIRE(r.status == 0);
    std::vector<fs::path> ingested;
    for (const auto& e : fs::recursive_directory_iterator(tmp / "store" / "studies")) {
        if (e.path().filename() == "phi_all.dcm") ingested.push_back(e.path());
    }
    REQUIRE(ingested.size() == 1);
    CHECK(et_test::read_bytes(ingested[0]) == et_test::read_bytes(et_test::fixture("phi_all_anon.dcm")));

    // Without the flag, files are copied untouched.
    r = cli("ingest " + q(tmp / "in") + " --out " + q(tmp / "raw"));
    REQUIRE(r.status == 0);
    for (const auto& e : fs::recursive_directory_iterator(tmp / "raw" / "studies")) {
        if (e.path().filename() == "phi_all.dcm") {
            CHECK(et_test::read_bytes(e.path()) == et_test::read_bytes(et_test::fixture("phi_all.dcm")));
        }
    }

    et_test::write_text(tmp / "in" / "bad.dcm", "nope");
    r = cli("ingest " + q(tmp / "in") + " --out " + q(tmp / "store2"));
    CHECK(r.status == 3);
    CHECK(r.out.find("error\tbad.dcm\t") != std::string::npos);
}

TEST_CASE("classify subcommand", "[cli]") {
    auto r = cli("classify " + q(et_test::fixture("minimal_4x4x2.dcm")) + " --backend constant:A2C");
    CHECK(r.status == 0);
    CHECK(r.out.find("\tA2C\t") != std::string::npos);
    r = cli("classify " + q(et_test::fixture("minimal_4x4x2.dcm")) + " --backend " + q(std::string("external:") + ET_PLUGIN_A2C));
    CHECK(r.status == 0);
    CHECK(r.out.find("\tA2C\t0.750") != std::string::npos);
    CHECK(cli("classify " + q(et_test::fixture("minimal_4x4x2.dcm")) + " --backend nonsense").status != 0);
}

TEST_CASE("serve refuses a missing store", "[cli]") {
    CHECK(cli("serve --store /nonexistent/store --port 0").status != 0);
}
