#include "oracles.hpp"

#include "pnk/catalog.hpp"
#include "pnk/linalg.hpp"
#include "pnk/persistence.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace pnk;

namespace {

constexpr double kPi = std::numbers::pi;

StraightenedSystem offset_system(bool cubic = false) {
  StraightenedSpec spec;
  spec.k = 2;
  spec.r = 2;
  spec.p = 1;
  if (cubic) {
    spec.A = {Eigen::Vector2d(-0.3, -0.1).asDiagonal().toDenseMatrix(),
              Eigen::Vector2d(0.05, -0.2).asDiagonal().toDenseMatrix()};
    spec.cubic = true;
    spec.kappa = Eigen::Vector2d(2.0, 5.0);
  } else {
    Matrix a1(2, 2), a2(2, 2);
    a1 << -0.2, 0.15, -0.15, -0.2;
    a2 << 0.05, -0.1, 0.1, 0.05;
    spec.A = {a1, a2};
  }
  spec.C = Eigen::Vector2d(1.0, -0.5);
  return make_straightened(spec);
}

SectionFrame seed_frame(const StraightenedSystem& sys) {
  return build_section(sys.family, sys.seed, sys.seed.base_point(), sys.seed.eps0());
}

}  // namespace

TEST_CASE("hyperbolicity_report") {
  SUBCASE("L = 0") {
    const auto rep = hyperbolicity_report(Matrix::Zero(2, 2));
    CHECK(rep.dist_from_one == 1.0);
    CHECK(rep.dist_from_unit_circle == 1.0);
    CHECK(rep.B_invertible);
    CHECK(rep.B_condition == doctest::Approx(1.0));
  }
  SUBCASE("eigenvalue at 1") {
    const auto rep = hyperbolicity_report(Eigen::Vector2d(1.0, 0.3).asDiagonal());
    CHECK(rep.dist_from_one == 0.0);
    CHECK_FALSE(rep.B_invertible);
  }
  SUBCASE("Hopf multiplier") {
    const double mu = make_hopf(1.0, 0.1).multiplier(0.1);
    const auto rep = hyperbolicity_report(Matrix::Constant(1, 1, mu));
    CHECK(rep.dist_from_one == doctest::Approx(1.0 - std::exp(-0.4 * kPi)).epsilon(1e-14));
    CHECK(rep.B_invertible);
    CHECK(isolation_check(rep));
  }
}

TEST_CASE("isolation_check") {
  CHECK(isolation_check(hyperbolicity_report(Eigen::Vector2d(0.5, 2.0).asDiagonal())));
  Matrix rot(2, 2);
  rot << std::cos(kPi / 4), -std::sin(kPi / 4), std::sin(kPi / 4), std::cos(kPi / 4);
  const auto rep = hyperbolicity_report(rot);
  CHECK(rep.B_invertible);
  CHECK_FALSE(isolation_check(rep));
}

TEST_CASE("newton_fixed_point") {
  const auto sys = offset_system();
  const SectionFrame f = seed_frame(sys);
  SUBCASE("invariant torus needs no iteration") {
    const auto fp = newton_fixed_point(sys.family, sys.seed, HomotopyClass{1, 0}, f, Vector::Zero(1),
                                       Vector::Zero(2));
    CHECK(fp.iterations == 0);
    CHECK(fp.u.norm() == 0.0);
  }
  SUBCASE("offset torus u* = -C eps") {
    const Vector eps = Vector::Constant(1, 0.07);
    const auto fp = newton_fixed_point(sys.family, sys.seed, HomotopyClass{1, 1}, f, eps, Vector::Zero(2));
    CHECK((fp.u - sys.oracle.fixed_point(eps)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(fp.residual <= 1e-10);
    CHECK(oracle::matching_distance(oracle::to_list(fp.spectrum),
                                    oracle::to_list(sys.oracle.transversal_spectrum(HomotopyClass{1, 1}))) <
          1e-8);
  }
  SUBCASE("far guess on an affine map takes one step") {
    const Vector eps = Vector::Constant(1, -0.04);
    const auto fp = newton_fixed_point(sys.family, sys.seed, HomotopyClass{1, 0}, f, eps,
                                       Eigen::Vector2d(0.5, -0.4));
    CHECK(fp.iterations == 1);
    CHECK((fp.u - sys.oracle.fixed_point(eps)).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("two guesses in the trust region give the same point") {
    const auto cub = offset_system(true);
    const SectionFrame fc = seed_frame(cub);
    const Vector eps = Vector::Constant(1, 0.08);
    const auto a = newton_fixed_point(cub.family, cub.seed, HomotopyClass{1, 0}, fc, eps, Vector::Zero(2));
    const auto b = newton_fixed_point(cub.family, cub.seed, HomotopyClass{1, 0}, fc, eps,
                                      Eigen::Vector2d(-0.05, 0.05));
    CHECK((a.u - b.u).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((a.u - cub.oracle.fixed_point(eps)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(a.iterations > 1);
  }
  SUBCASE("multiplier at 1 is singular") {
    StraightenedSpec spec;
    spec.k = 1;
    spec.r = 2;
    spec.A = {Eigen::Vector2d(0.0, -1.0).asDiagonal().toDenseMatrix()};
    spec.C = Eigen::Vector2d(1.0, 1.0);
    const auto deg = make_straightened(spec);
    try {
      newton_fixed_point(deg.family, deg.seed, HomotopyClass{1}, seed_frame(deg), Vector::Constant(1, 0.0),
                         Eigen::Vector2d(0.0, 0.02));
      FAIL("expected SingularJacobian");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SingularJacobian);
    }
  }
  SUBCASE("iteration budget") {
    try {
      newton_fixed_point(sys.family, sys.seed, HomotopyClass{1, 0}, f, Vector::Constant(1, 0.05),
                         Vector::Zero(2), 1e-10, 0);
      FAIL("expected NoConvergence");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoConvergence);
    }
  }
}

TEST_CASE("continue_branch") {
  SUBCASE("21 steps on the offset torus") {
    const auto sys = offset_system();
    const auto path = linear_path(Vector::Constant(1, -0.1), Vector::Constant(1, 0.1), 21);
    const auto br = continue_branch(sys.family, sys.seed, HomotopyClass{1, 0}, path);
    CHECK(br.status == BranchStatus::Completed);
    REQUIRE(br.points.size() == 21);
    for (std::size_t i = 0; i < br.points.size(); ++i) {
      const auto& pt = br.points[i];
      CHECK((pt.eps - path[i]).norm() == 0.0);
      CHECK((pt.u - sys.oracle.fixed_point(pt.eps)).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK(pt.residual <= 1e-10);
      CHECK(pt.verify_residual <= 1e-9);
      CHECK(pt.beta_defect <= 1e-8);
    }
  }
  SUBCASE("cubic terms: Newton in at most 6 iterations per slice") {
    const auto sys = offset_system(true);
    const auto path = linear_path(Vector::Constant(1, -0.1), Vector::Constant(1, 0.1), 21);
    const auto br = continue_branch(sys.family, sys.seed, HomotopyClass{1, 1}, path);
    CHECK(br.status == BranchStatus::Completed);
    for (const auto& pt : br.points) {
      CHECK(pt.newton_iters <= 6);
      CHECK((pt.u - sys.oracle.fixed_point(pt.eps)).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
  SUBCASE("path into a multiplier at 1 stops") {
    const auto pf = make_pitchfork_flow();
    const auto path = linear_path(Vector::Constant(1, -0.1), Vector::Constant(1, 0.1), 21);
    const auto br = continue_branch(pf.family, pf.seed, HomotopyClass{1}, path);
    CHECK(br.status == BranchStatus::StoppedAtCritical);
    CHECK(br.points.size() == 10);
    CHECK(std::abs(br.stop_eps[0]) < 1e-12);
  }
  SUBCASE("single point") {
    const auto sys = offset_system();
    const auto br = continue_branch(sys.family, sys.seed, HomotopyClass{0, 1}, {Vector::Zero(1)});
    CHECK(br.status == BranchStatus::Completed);
    CHECK(br.points.size() == 1);
  }
  SUBCASE("parallel mode agrees with the sequential one") {
    const auto sys = offset_system(true);
    const auto path = linear_path(Vector::Constant(1, 0.0), Vector::Constant(1, 0.1), 9);
    ContinuationOptions par;
    par.parallel = true;
    par.threads = 3;
    const auto a = continue_branch(sys.family, sys.seed, HomotopyClass{1, 0}, path);
    const auto b = continue_branch(sys.family, sys.seed, HomotopyClass{1, 0}, path, par);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i)
      CHECK((a.points[i].u - b.points[i].u).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("reconstruct_torus") {
  const auto sys = offset_system();
  const SectionFrame f = seed_frame(sys);
  SUBCASE("u = 0 at eps = 0 reproduces the seed torus") {
    const double tol = 1e-9;
    const auto tor = reconstruct_torus(sys.family, sys.seed, Vector::Zero(1), f, Vector::Zero(2), 8, tol);
    REQUIRE(tor.points.size() == 64);
    for (int j1 = 0; j1 < 8; ++j1)
      for (int j2 = 0; j2 < 8; ++j2) {
        const Vector phi = Eigen::Vector2d(2 * kPi * j1 / 8, 2 * kPi * j2 / 8);
        CHECK(sys.seed.displacement(tor.points[j1 + 8 * j2], sys.seed.embed(phi)).cwiseAbs().maxCoeff() <=
              10 * tol);
      }
  }
  SUBCASE("offset torus is u = -C eps over the grid") {
    const Vector eps = Vector::Constant(1, 0.06);
    const Vector u = sys.oracle.fixed_point(eps);
    const auto tor = reconstruct_torus(sys.family, sys.seed, eps, f, u, 16, 1e-8);
    CHECK(tor.closure_defect <= 1e-8);
    for (const auto& x : tor.points) CHECK((x.tail(2) - u).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("wrong fixed point leaves the torus open") {
    try {
      reconstruct_torus(sys.family, sys.seed, Vector::Constant(1, 0.06), f, Eigen::Vector2d(0.01, 0.0), 8,
                        1e-8);
      FAIL("expected OpenTorus");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::OpenTorus);
    }
  }
  SUBCASE("neighbouring tori are close") {
    const auto path = linear_path(Vector::Constant(1, 0.0), Vector::Constant(1, 0.02), 3);
    const auto br = continue_branch(sys.family, sys.seed, HomotopyClass{1, 0}, path);
    const auto t0 = reconstruct_torus(sys.family, sys.seed, br.points[0].eps, f, br.points[0].u, 8);
    const auto t1 = reconstruct_torus(sys.family, sys.seed, br.points[1].eps, f, br.points[1].u, 8);
    const auto t2 = reconstruct_torus(sys.family, sys.seed, br.points[2].eps, f, br.points[2].u, 8);
    const double d01 = hausdorff_distance(sys.seed, t0, t1);
    const double d02 = hausdorff_distance(sys.seed, t0, t2);
    CHECK(d01 == doctest::Approx(0.01 * std::sqrt(1.25)).epsilon(1e-6));
    CHECK(d02 == doctest::Approx(2 * d01).epsilon(1e-6));
  }
}
