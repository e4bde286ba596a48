#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "proxflow/altproj.hpp"
#include "proxflow/experiments.hpp"
#include "support.hpp"

using namespace proxflow;
using proxflow::testing::xml_well_formed;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("proxflow_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

RunOptions quick(std::size_t iters) {
    RunOptions o;
    o.iterations = iters;
    return o;
}

}  // namespace

TEST_CASE("gen_sensing") {
    const auto a = gen_sensing(50, 100, SpectrumKind::exp_decay, 7);
    const auto b = gen_sensing(50, 100, SpectrumKind::exp_decay, 7);
    CHECK(a.A == b.A);
    CHECK(a.b == b.b);
    CHECK(a.A.rows() == 50);
    CHECK(a.A.cols() == 100);
    CHECK((a.x_true.array() != 0.0).count() == 10);
    CHECK((a.A * a.x_true - a.b).norm() <= 1e-12);

    Eigen::JacobiSVD<Matrix> svd(a.A);
    const Vector s = svd.singularValues();
    for (Eigen::Index r = 0; r < 50; ++r) CHECK(std::abs(s[r] / s[0] - std::exp(-static_cast<double>(r))) <= 1e-8);

    const auto u = gen_sensing(20, 50, SpectrumKind::uniform, 3);
    CHECK(u.singular_values.maxCoeff() <= 1.0);
    CHECK(u.singular_values.minCoeff() >= 0.5);
    const auto inv = gen_sensing(20, 50, SpectrumKind::inverse_r, 3);
    CHECK(inv.singular_values[4] == doctest::Approx(0.2));
    CHECK(gen_sensing(20, 50, SpectrumKind::uniform, 4).A != u.A);

    CHECK_THROWS_AS(gen_sensing(50, 50, SpectrumKind::uniform, 1), ValidationError);
    CHECK(parse_spectrum_kind("exp") == SpectrumKind::exp_decay);
    CHECK_THROWS_AS(parse_spectrum_kind("gaussian"), ValidationError);
}

TEST_CASE("run_l1 on the default instance") {
    const auto p = gen_sensing(50, 100, SpectrumKind::uniform, 7);
    const auto res = run_l1(p, 0.1, {1, 2, 3}, quick(5000));
    REQUIRE(res.traces.size() == 3);
    for (const auto& t : res.traces) {
        CHECK(t.metric_name == "objective_gap");
        CHECK_FALSE(t.diverged);
        const auto hit = iterations_to(t, 1e-6);
        REQUIRE(hit.has_value());
        for (const auto& pt : t.points) CHECK(std::isfinite(pt.value));
    }
    CHECK(*iterations_to(res.traces[1], 1e-6) <= *iterations_to(res.traces[0], 1e-6));
}

TEST_CASE("run_l1 without regularisation on the identity") {
    SensingProblem p;
    p.A = Matrix::Identity(5, 5);
    p.b = Vector::LinSpaced(5, -1, 3);
    p.x_true = p.b;
    p.singular_values = Vector::Ones(5);
    RunOptions o = quick(60);
    o.beta = 1e6;
    o.inner_m = 50;
    const auto res = run_l1(p, 0.0, {1}, o);
    CHECK((res.runs[0].final_iterate - p.b).norm() <= 1e-9);
    CHECK(res.runs[0].records.back().objective <= 1e-18);
    CHECK(res.runs[0].records[1].objective <= 1e-10);  // one deep inner solve at huge beta is already the answer
}

TEST_CASE("run_lsp") {
    const auto p = gen_sensing(20, 50, SpectrumKind::uniform, 7);
    RunOptions o = quick(5000);
    o.beta = 0.5;
    o.stop_tol = 1e-6;
    const auto res = run_lsp(p, 10.0, {2}, o);
    CHECK(res.traces[0].metric_name == "stationarity");
    CHECK(res.traces[0].points.back().value <= 1e-6);
    CHECK(res.traces[0].points.size() < 5001);

    // small theta, the planted sparse vector starts closer to stationarity than a random start
    RunOptions one = quick(1);
    one.beta = 0.5;
    one.x0 = p.x_true;
    const double planted = run_lsp(p, 0.01, {1}, one).traces[0].points[0].value;
    Rng rng(99);
    one.x0 = rng.normal_vector(50);
    const double random = run_lsp(p, 0.01, {1}, one).traces[0].points[0].value;
    CHECK(planted <= random);
}

TEST_CASE("lsp with large theta tracks l1 with weight 1/theta") {
    const auto p = gen_sensing(20, 50, SpectrumKind::uniform, 5);
    RunOptions o = quick(200);
    const double theta = 100.0;
    const auto lsp = run_lsp(p, theta, {1, 2}, o);
    const auto l1 = run_l1(p, 1.0 / theta, {1, 2}, o);
    for (std::size_t i = 0; i < 2; ++i) {
        const Vector& a = lsp.runs[i].final_iterate;
        const Vector& b = l1.runs[i].final_iterate;
        CHECK((a - b).norm() <= 1e-3 * std::max(1.0, b.norm()));
    }
}

TEST_CASE("runner validation") {
    const auto p = gen_sensing(10, 20, SpectrumKind::uniform, 1);
    CHECK_THROWS_AS(run_l1(p, -1.0, {1}, quick(10)), ValidationError);
    CHECK_THROWS_AS(run_l1(p, 0.1, {6}, quick(10)), UnsupportedOrderError);
    CHECK_THROWS_AS(run_l1(p, 0.1, {}, quick(10)), ValidationError);
    CHECK_THROWS_AS(run_lsp(p, 0.0, {1}, quick(10)), ValidationError);
    RunOptions bad = quick(10);
    bad.beta = 0.0;
    CHECK_THROWS_AS(run_l1(p, 0.1, {1}, bad), ValidationError);
    CHECK(runner_xi(5).size() == 5);
}

TEST_CASE("gen_subspaces") {
    const auto same = gen_subspaces(30, 10, 0.0, 3);
    for (double c : principal_cosines(same)) CHECK(std::abs(c - 1.0) <= 1e-8);

    const auto indep = gen_subspaces(50, 10, 1.0, 11);
    const double largest_cos = principal_cosines(indep).maxCoeff();
    CHECK(std::acos(largest_cos) > 1e-3);

    const auto big = gen_subspaces(500, 400, 0.1, 7);
    CHECK(big.C1.rows() == 500);
    CHECK(big.C2.cols() == 400);
    CHECK(gen_subspaces(20, 5, 0.3, 9).C2 == gen_subspaces(20, 5, 0.3, 9).C2);
    CHECK_THROWS_AS(gen_subspaces(10, 10, 0.1, 1), ValidationError);
    CHECK_THROWS_AS(gen_subspaces(10, 3, 1.5, 1), ValidationError);
}

TEST_CASE("run_altproj") {
    // a shared direction is a fixed point
    const auto pair = subspaces_with_angles(12, {0.0, 0.4, 0.9}, 2);
    AltProjOptions o;
    o.iterations = 20;
    o.x0 = orthonormal_basis(pair.C1).col(0);
    const auto fixed = run_altproj_xi(pair, {1.0}, o);
    for (const auto& pt : fixed.trace.points) CHECK(pt.value <= 1e-14);

    // tau = 1 never increases the residual
    const auto rnd = gen_subspaces(40, 15, 0.2, 4);
    AltProjOptions d;
    d.iterations = 100;
    const auto runs = run_altproj(rnd, {1, 2, 3}, d);
    REQUIRE(runs.size() == 3);
    const auto& pts = runs[0].trace.points;
    for (std::size_t k = 1; k < pts.size(); ++k) CHECK(pts[k].value <= pts[k - 1].value + 1e-12);
    CHECK(runs[2].trace.tau == 3);
    CHECK(runs[0].trace.metric_name == "residual");
}

TEST_CASE("run_altproj single-step rate equals the largest nontrivial cosine squared") {
    const std::vector<double> angles{0.3, 0.5, 0.8, 1.2};
    const auto pair = subspaces_with_angles(10, angles, 6);
    AltProjOptions o;
    o.iterations = 200;
    const auto run = run_altproj_xi(pair, {1.0}, o);
    const double want = std::pow(std::cos(0.3), 2);
    CHECK(std::abs(fit_rate(run.trace).rate - want) <= 0.02 * want);
}

TEST_CASE("run_altproj: two steps beat one on an ill-conditioned pair") {
    // rho ~ 0.01; pinned counts 1368 / 908 / 743
    const auto pair = gen_subspaces(40, 10, 0.2, 13);
    AltProjOptions o;
    o.iterations = 5000;
    o.stop_tol = 1e-8;
    const auto runs = run_altproj(pair, {1, 2, 3}, o);
    const auto k1 = iterations_to(runs[0].trace, 1e-8);
    const auto k2 = iterations_to(runs[1].trace, 1e-8);
    const auto k3 = iterations_to(runs[2].trace, 1e-8);
    REQUIRE(k1.has_value());
    REQUIRE(k2.has_value());
    REQUIRE(k3.has_value());
    CHECK(*k2 < *k1);
    CHECK(*k3 < *k2);
    CHECK(*k1 == 1368);
    CHECK(*k2 == 908);
}

TEST_CASE("matfac flags divergence under unstable weights") {
    // xi = (-5, 6) puts a root near 5 for every well-solved direction
    const auto problem = gen_matfac(20, 3, 1.0, 7);
    MatFacOptions o;
    o.iterations = 100;
    const auto r = run_matfac_xi(problem, {-5.0, 6.0}, 2, o);
    CHECK(r.trace.diverged);
    CHECK(r.trace.points.size() < 101);
}

TEST_CASE("matfac fixed point and block optimality") {
    Rng rng(8);
    MatFacProblem p;
    p.U0 = rng.normal_matrix(12, 3);
    p.V0 = rng.normal_matrix(12, 3);
    p.R = p.U0 * p.V0.transpose();
    p.rank = 3;
    p.alpha = 0.7;
    MatFacOptions o;
    o.iterations = 10;
    const auto run = run_matfac_xi(p, runner_xi(2), 2, o);
    for (const auto& pt : run.trace.points) CHECK(pt.value <= 1e-20);
    CHECK((run.U - p.U0).norm() <= 1e-10);
    CHECK((run.V - p.V0).norm() <= 1e-10);

    const Matrix R = rng.normal_matrix(15, 12), W = rng.normal_matrix(12, 4), anchor = rng.normal_matrix(15, 4);
    const double alpha = 0.3;
    const Matrix U = ridge_block_solve(R, W, anchor, alpha);
    const Matrix grad = (U * W.transpose() - R) * W + (U - anchor) / alpha;
    CHECK(grad.norm() <= 1e-9 * (R.norm() * W.norm() + anchor.norm() / alpha));
}

TEST_CASE("run_matfac at full scale") {
    const auto p = gen_matfac(100, 10, 1.0, 7);
    CHECK(p.R.rows() == 100);
    MatFacOptions o;
    o.iterations = 30;
    const auto runs = run_matfac(p, {1, 2}, o);
    for (const auto& r : runs) {
        CHECK(r.trace.points.size() == 31);
        CHECK(r.trace.points.back().value < r.trace.points.front().value);
    }
    // single-step alternating minimisation is monotone
    const auto& pts = runs[0].trace.points;
    for (std::size_t k = 1; k < pts.size(); ++k) CHECK(pts[k].value <= pts[k - 1].value * (1 + 1e-12));
}

TEST_CASE("csv round trip") {
    ExperimentTrace a{"l1", 7, 2, "objective_gap", {{0, 0.1, 0.0}, {1, 1.0 / 3.0, 0.25}, {2, 1e-300, 0.5}}, false};
    ExperimentTrace b{"l1", 7, 3, "objective_gap", {{0, 2.0, 0.0}}, true};
    const std::string text = traces_to_csv({a, b});
    CHECK(text.rfind("experiment,seed,tau,k,metric_name,metric_value,walltime_s,diverged\n", 0) == 0);
    CHECK(text.find('\r') == std::string::npos);
    CHECK(text.find("l1,7,2,1,objective_gap,0.33333333333333331,0.25,0\n") != std::string::npos);
    const auto back = parse_csv(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].points[1].value == a.points[1].value);
    CHECK(back[0].points[2].value == a.points[2].value);
    CHECK(back[1].diverged);
    CHECK(traces_to_csv(back) == text);

    CHECK_THROWS_AS(traces_to_csv({}), ValidationError);
    ExperimentTrace bad = a;
    bad.experiment = "a,b";
    CHECK_THROWS_AS(traces_to_csv({bad}), ValidationError);
    CHECK_THROWS_AS(parse_csv("nope\n"), ValidationError);

    const auto dir = scratch_dir("csv");
    emit_csv({a, b}, dir / "t.csv");
    CHECK(traces_to_csv(read_csv(dir / "t.csv")) == text);
    CHECK_THROWS_AS(emit_csv({a}, dir / "missing" / "t.csv"), IoError);
    CHECK_THROWS_AS(read_csv(dir / "missing.csv"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("svg output") {
    ExperimentTrace a{"x<y", 1, 1, "residual", {{0, 1.0, 0}, {1, 0.1, 0}, {2, 0.0, 0}, {3, 1e-5, 0}}, false};
    ExperimentTrace b{"x<y", 1, 2, "residual", {{0, 1.0, 0}, {1, 1e3, 0}}, true};
    const std::string svg = traces_to_svg({a, b}, {"title & more", "k", "residual"});
    CHECK(xml_well_formed(svg));
    CHECK(svg.find("viewBox") != std::string::npos);
    CHECK(svg.find("<script") == std::string::npos);
    CHECK(svg.find("tau = 2 (diverged)") != std::string::npos);
    CHECK(svg.find("title &amp; more") != std::string::npos);
    std::size_t lines = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++lines;
    CHECK(lines == 2);
    CHECK_THROWS_AS(traces_to_svg({}, {}), ValidationError);

    XYSeries s{"curve", {0.01, 0.1, 1.0}, {0.5, std::nan(""), 0.9}};
    CHECK(xml_well_formed(xy_svg({s}, {"t", "beta", "rho"}, true, false)));
    CHECK_FALSE(xml_well_formed("<svg><g></svg>"));
}
