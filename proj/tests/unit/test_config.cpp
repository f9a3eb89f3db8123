#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "voshm/config.hpp"
#include "voshm/errors.hpp"
#include "voshm/report.hpp"

using namespace voshm;

namespace {

std::string config_error_key(const std::string& text, ConfigFormat format = ConfigFormat::ini) {
    try {
        parse_config(text, format).validate();
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<none>";
}

}  // namespace

TEST_CASE("empty configuration gives the defaults") {
    const auto c = parse_config("", ConfigFormat::ini);
    const RunConfig d;
    CHECK(c.costs.c_F == d.costs.c_F);
    CHECK(c.mc.n_mcs == d.mc.n_mcs);
    CHECK(c.case_number == 1);
    CHECK(c.policy.p_th_I == d.policy.p_th_I);
    CHECK(c.filter.n_particles == c.mc.n_p);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("violations name the key path") {
    CHECK(config_error_key("[costs]\nc_F = -1\n") == "costs.c_F");
    CHECK(config_error_key("[mc]\nn_p = 10\n") == "mc.n_p");
    CHECK(config_error_key("[costs]\nc_X = 1\n") == "costs.c_X");
    CHECK(config_error_key("[nonsense]\na = 1\n") == "nonsense");
    CHECK(config_error_key("[costs]\nc_F = abc\n") == "costs.c_F");
    CHECK(config_error_key("[case]\nnumber = 9\n") != "<none>");
}

TEST_CASE("INI echo round trip") {
    auto c = parse_config("[case]\nnumber = 3\n[mc]\nn_mcs = 17\nseed = 99\n[policy]\np_th_I = 3.3e-5\n", ConfigFormat::ini);
    CHECK(c.case_config.closedown);
    CHECK(c.policy.p_th_I == 3.3e-5);
    const std::string text = to_ini(c);
    const auto back = parse_config(text, ConfigFormat::ini);
    CHECK(to_ini(back) == text);
    CHECK(back.mc.n_mcs == 17);
    CHECK(back.mc.seed == 99);
    CHECK(back.policy.p_th_I == 3.3e-5);
}

TEST_CASE("JSON input") {
    const auto c = parse_config(R"({"costs": {"c_I": 1000}, "model": {"spans_m": [20, 30]}})", ConfigFormat::json);
    CHECK(c.costs.c_I == 1000.0);
    CHECK(c.bridge.span_lengths[0] == 20.0);
    CHECK(c.bridge.span_lengths[1] == 30.0);
}

TEST_CASE("missing file and missing surrogate") {
    CHECK_THROWS_AS(load_config("/nonexistent/run.ini"), ConfigError);
    RunConfig c;
    c.surrogate_path = "/nonexistent/surrogate.json";
    CHECK_THROWS_AS(build_context(c), PrerequisiteError);
}

TEST_CASE("schema lists every section") {
    const auto schema = config_schema();
    std::vector<std::string> names;
    for (const auto& s : schema) names.push_back(s.first);
    for (const char* n : {"model", "env", "deterioration", "observation", "filter", "reliability", "costs", "policy",
                          "case", "mc", "optimize", "output"}) {
        CHECK(std::find(names.begin(), names.end(), n) != names.end());
    }
}

TEST_CASE("empty estimate serializes as nulls") {
    const CostEstimate empty;
    const auto j = cost_estimate_json(empty);
    CHECK(j["n"] == 0);
    CHECK(j["mean"]["total"].is_null());
    CHECK(j["se"]["total"].is_null());
    CHECK(estimate_json(Estimate{}).at("mean").is_null());
}

TEST_CASE("summary means equal the column means of the episode table") {
    CostEstimate est;
    std::vector<double> totals;
    for (int i = 0; i < 5; ++i) {
        EpisodeRow r;
        r.scenario = static_cast<std::uint64_t>(i);
        r.branch = "shm";
        r.inspection = 1000.0 * i;
        r.risk = 0.1 * i * i;
        r.total = r.inspection + r.risk;
        totals.push_back(r.total);
        est.rows.push_back(r);
    }
    est.total = estimate_of(totals);
    const auto j = cost_estimate_json(est);

    std::istringstream csv(episodes_csv(est.rows));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "scenario,branch,C_I,C_R,C_clsdn,R_F,total,degenerate");
    double sum = 0.0;
    int n = 0;
    while (std::getline(csv, line)) {
        const auto pos = line.find_last_of(',');
        const auto prev = line.find_last_of(',', pos - 1);
        sum += std::stod(line.substr(prev + 1, pos - prev - 1));
        ++n;
    }
    CHECK(n == 5);
    CHECK(j["mean"]["total"].get<double>() == doctest::Approx(sum / n).epsilon(1e-15));
}

TEST_CASE("number formatting round trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.0}) CHECK(std::stod(format_number(v)) == v);
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("write_text creates directories and reports failures") {
    const auto dir = std::filesystem::temp_directory_path() / "voshm_unit_write";
    std::filesystem::remove_all(dir);
    write_text(dir / "a" / "b.txt", "hello");
    std::ifstream in(dir / "a" / "b.txt");
    std::string s;
    in >> s;
    CHECK(s == "hello");
    CHECK_THROWS_AS(write_text("/proc/voshm_cannot_write/x.txt", "x"), IoError);
    std::filesystem::remove_all(dir);
}
