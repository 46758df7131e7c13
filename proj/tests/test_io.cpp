#include "doctest.h"

#include <filesystem>
#include <sstream>

#include "kpo/errors.hpp"
#include "kpo/io.hpp"

using namespace kpo;

namespace {

int count_lines(const std::string& s) {
    int n = 0;
    for (char ch : s)
        n += ch == '\n';
    return n;
}

std::string first_line(const std::string& s) {
    return s.substr(0, s.find('\n'));
}

}

TEST_SUITE("io") {

TEST_CASE("instance round trip keeps entries, class and seed") {
    auto c = gen_sk7(7, 11);
    auto back = io::parse_instance(io::instance_json(c));
    CHECK(back.entries() == c.entries());
    CHECK(back.problem_class() == ProblemClass::SK7);
    REQUIRE(back.seed());
    CHECK(*back.seed() == 11);
}

TEST_CASE("instance file stores the upper triangle row by row") {
    Eigen::MatrixXd m(3, 3);
    m << 0, 0.5, -1, 0.5, 0, 0.25, -1, 0.25, 0;
    auto text = io::instance_json(CouplingMatrix(m));
    auto back = io::parse_instance(R"({"n": 3, "entries": [0.5, -1, 0.25]})");
    CHECK(back.entries() == m);
    CHECK(back.problem_class() == ProblemClass::Custom);
    CHECK(text.find("\"entries\"") != std::string::npos);
}

TEST_CASE("malformed instances are rejected") {
    CHECK_THROWS_AS(io::parse_instance("{"), InvalidInput);
    CHECK_THROWS_AS(io::parse_instance(R"({"n": 3, "entries": [1, 2]})"), InvalidInput);
    CHECK_THROWS_AS(io::parse_instance(R"({"entries": [1]})"), InvalidInput);
    CHECK_THROWS_AS(io::parse_instance(R"({"n": 2, "entries": ["a"]})"), InvalidInput);
    CHECK_THROWS_AS(io::parse_instance(R"({"n": 2.5, "entries": [1]})"), InvalidInput);
    // not normalized
    CHECK_THROWS_AS(io::parse_instance(R"({"n": 2, "entries": [3]})"), InvalidInput);
}

TEST_CASE("params round trip is exact and flags units") {
    auto c = gen_sk7(6, 2);
    auto p = prescribe(c, ProblemClass::SK7, Tolerances::classical());
    auto text = io::params_json(p);
    CHECK(text.find("\"units\": \"chi\"") != std::string::npos);
    auto q = io::parse_params(text);
    CHECK(q.lambda_c_tilde == p.lambda_c_tilde);
    CHECK(q.lambda_big_tilde == p.lambda_big_tilde);
    CHECK(q.delta_tilde == p.delta_tilde);
    CHECK(q.j_tilde == p.j_tilde);
    CHECK(q.g_tilde == p.g_tilde);
    CHECK(q.a_factor == 200.0);
    CHECK(q.problem_class == ProblemClass::SK7);
    CHECK(io::params_json(q) == text);
}

TEST_CASE("params with broken invariants are rejected") {
    auto p = prescribe(gen_sk7(4, 1), ProblemClass::SK7);
    auto text = io::params_json(p);
    auto pos = text.find("\"r_max\": ");
    REQUIRE(pos != std::string::npos);
    auto end = text.find(',', pos);
    auto bad = text.substr(0, pos) + "\"r_max\": -1.0" + text.substr(end);
    CHECK_THROWS_AS(io::parse_params(bad), InvalidInput);
    CHECK_THROWS_AS(io::parse_params(R"({"units": "SI"})"), InvalidInput);
}

TEST_CASE("design round trip carries F and its instance") {
    auto c = gen_sk7(5, 4);
    DesignProblem prob(c, 0.16, uniform_native(5, 1.0));
    auto d = solve_design(prob, DesignMode::SecondOrder);
    auto text = io::design_json(d, c, prob.eta(), prob.lambda_c);
    auto back = io::parse_design(text);
    CHECK(back.f == d.f);
    CHECK(back.method == d.method);
    CHECK(back.error == d.error);
    CHECK(io::design_instance(text).entries() == c.entries());
    CHECK_THROWS_AS(io::parse_design(R"({"instance": {"n": 3, "entries": [1, 0, 0]}, "F": [[0, 0]]})"),
                    InvalidInput);
}

TEST_CASE("classical CSV has one row per recorded time") {
    EnsembleResult e;
    e.series.t = Eigen::VectorXd::LinSpaced(5, 0, 4);
    e.series.p = Eigen::VectorXd::Constant(5, 0.5);
    e.series.sem = Eigen::VectorXd::Constant(5, 0.1);
    io::ClassicalRecord r;
    r.static_run = &e;
    r.dynamical_run = &e;
    auto csv = io::classical_csv(r);
    CHECK(count_lines(csv) == 6);
    CHECK(first_line(csv) == "t,p_static,sem_static,p_dynamical,sem_dynamical");
    r.dynamical_run = nullptr;
    CHECK(first_line(io::classical_csv(r)) == "t,p_static,sem_static");
    auto json = io::classical_json(r);
    CHECK(json.find("\"units\": \"chi\"") != std::string::npos);
    CHECK(json.find("dynamical") == std::string::npos);
}

TEST_CASE("quantum output folds flip pairs") {
    QuantumEnsemble e;
    e.t = Eigen::VectorXd::LinSpaced(2, 0, 1);
    e.p = Eigen::VectorXd::Constant(2, 0.5);
    e.sem = Eigen::VectorXd::Zero(2);
    e.config_probs = Eigen::MatrixXd::Constant(2, 4, 0.25);
    io::QuantumRecord r;
    r.static_run = &e;
    r.n = 2;
    auto csv = io::quantum_csv(r);
    CHECK(first_line(csv) == "t,p_static,sem_static,P++_static,P-+_static");
    CHECK(csv.find(",0.5,0.5\n") != std::string::npos);
}

TEST_CASE("files round trip and missing files are invalid input") {
    auto dir = std::filesystem::temp_directory_path() / "kpo_io_test";
    std::filesystem::remove_all(dir);
    auto path = dir / "nested" / "x.txt";
    io::write_text(path, "hello\n");
    CHECK(io::read_text(path) == "hello\n");
    CHECK_THROWS_AS(io::read_text(dir / "missing.json"), InvalidInput);
    std::filesystem::remove_all(dir);
}

TEST_CASE("number lists") {
    CHECK(io::parse_list("1, 2.5,3") == std::vector<double>{1, 2.5, 3});
    CHECK_THROWS_AS(io::parse_list("1,x"), InvalidInput);
    CHECK_THROWS_AS(io::parse_list(""), InvalidInput);
}

}
