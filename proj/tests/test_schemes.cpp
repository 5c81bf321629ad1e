#include <doctest.h>

#include <cmath>
#include <limits>

#include "nlh/schemes.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace nlh;
using namespace nlh::test;

TEST_CASE("scheme names round-trip") {
  CHECK(kAllSchemes.size() == 10);
  for (SchemeId id : kAllSchemes) CHECK(parse_scheme(scheme_name(id)) == id);
  CHECK_FALSE(parse_scheme("lax_friedrichs").has_value());
  const std::string list = scheme_name_list();
  for (const char* n : {"upwind", "maccormack", "fsm", "qsa", "qsa_center", "qsa_bw", "qsa_lw", "qsa_minmod",
                        "qsa_superbee", "qsa_mc"})
    CHECK(list.find(n) != std::string::npos);
  CHECK_FALSE(is_qsa_family(SchemeId::Upwind));
  CHECK(is_qsa_family(SchemeId::QSA_MC));
}

TEST_CASE("minmod") {
  CHECK(minmod(1.0, 2.0) == 1.0);
  CHECK(minmod(2.0, 1.0) == 1.0);
  CHECK(minmod(-1.0, -3.0) == -1.0);
  CHECK(minmod(1.0, -1.0) == 0.0);
  CHECK(minmod(0.0, 5.0) == 0.0);
  CHECK(minmod(-2.0, 0.0) == 0.0);
  CHECK(minmod(2.0, 2.0) == 2.0);
}

TEST_CASE("maxmod") {
  CHECK(maxmod(1.0, 2.0) == 2.0);
  CHECK(maxmod(-1.0, -3.0) == -3.0);
  CHECK(maxmod(1.0, -1.0) == 0.0);
  CHECK(maxmod(0.0, 4.0) == 0.0);
}

TEST_CASE("monotonized central limiter") {
  CHECK(mc_limit(1.5, 2.0, 4.0) == 1.5);
  CHECK(mc_limit(3.0, 2.0, 4.0) == 2.0);
  CHECK(mc_limit(3.0, 8.0, 1.0) == 1.0);
  CHECK(mc_limit(-1.0, -4.0, -0.5) == -0.5);
  CHECK(mc_limit(1.0, -2.0, 4.0) == 0.0);
  CHECK(mc_limit(0.0, 2.0, 4.0) == 0.0);
}

TEST_CASE("superbee slope from the two minmod candidates") {
  // up = 1, down = 0.25: candidates minmod(1, 0.5) = 0.5, minmod(2, 0.25) = 0.25
  CHECK(maxmod(minmod(1.0, 0.5), minmod(2.0, 0.25)) == 0.5);
  // up = 1, down = 3: candidates 1 and 2
  CHECK(maxmod(minmod(1.0, 6.0), minmod(2.0, 3.0)) == 2.0);
}

TEST_CASE("qsa split offsets") {
  ModelParams p;
  const GridSpec g = GridSpec::make(p, 0.015625, 0.03125, 1.0);
  SourceField s;
  s.s_plus = {0.2, -0.4};
  s.s_minus = {-0.2, 0.4};
  const QsaSplit d = qsa_split(s, g, p);
  CHECK(d.delta_plus[0] == doctest::Approx(g.dx * 0.2 / (2.0 * p.gamma)));
  CHECK(d.delta_minus[0] == doctest::Approx(g.dx * 0.2 / (2.0 * p.gamma)));
  CHECK(d.delta_plus[1] == doctest::Approx(-g.dx * 0.4 / (2.0 * p.gamma)));
}

TEST_CASE("slope wiring on a smooth profile without sources") {
  const std::size_t n = 12;
  const GridSpec g{0.5, 0.25, 1.0, 6.0, n, 4};
  PopulationState s;
  for (std::size_t i = 0; i < n; ++i) {
    s.u_plus.push_back(static_cast<double>(i * i % 7));
    s.u_minus.push_back(static_cast<double>((3 * i + 1) % 5));
  }
  QsaSplit zero{Field(n, 0.0), Field(n, 0.0)};
  auto up = [&](const Field& u, std::size_t i) { return (u[i] - u[(i + n - 1) % n]) / g.dx; };
  auto dn = [&](const Field& u, std::size_t i) { return (u[(i + 1) % n] - u[i]) / g.dx; };

  const SlopeField bw = compute_slopes(SchemeId::QSA_BW, s, zero, g);
  const SlopeField lw = compute_slopes(SchemeId::QSA_LW, s, zero, g);
  const SlopeField ce = compute_slopes(SchemeId::QSA_Center, s, zero, g);
  const SlopeField mm = compute_slopes(SchemeId::QSA_Minmod, s, zero, g);
  const SlopeField q0 = compute_slopes(SchemeId::QSA, s, zero, g);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(bw.sigma_plus[i] == up(s.u_plus, i));
    CHECK(bw.sigma_minus[i] == dn(s.u_minus, i));
    CHECK(lw.sigma_plus[i] == dn(s.u_plus, i));
    CHECK(lw.sigma_minus[i] == up(s.u_minus, i));
    CHECK(ce.sigma_plus[i] == doctest::Approx(0.5 * (up(s.u_plus, i) + dn(s.u_plus, i))));
    CHECK(mm.sigma_plus[i] == minmod(up(s.u_plus, i), dn(s.u_plus, i)));
    CHECK(q0.sigma_plus[i] == 0.0);
    CHECK(q0.sigma_minus[i] == 0.0);
  }
}

TEST_CASE("one step conserves mass for every scheme") {
  const ModelParams p;
  const GridSpec g = GridSpec::make(p, 10.0 / 256.0, 10.0 / 128.0, 1.0);
  const KernelTable k = build_kernel_table(p, g);
  for (SchemeId id : kAllSchemes) {
    CAPTURE(scheme_name(id));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const PopulationState s = random_state(g.nx, seed);
      const double m0 = total_mass(s, g.dx);
      const PopulationState out = step(id, s, p, g, k);
      CHECK(std::abs(total_mass(out, g.dx) - m0) <= 1e-13 * m0);
      CHECK(out.time_index == s.time_index + 1);
    }
  }
}

TEST_CASE("homogeneous state is a fixed point of every scheme") {
  const ModelParams p;
  const GridSpec g = GridSpec::make(p, 0.03125, 0.0625, 1.0);
  const KernelTable k = build_kernel_table(p, g);
  for (SchemeId id : kAllSchemes) {
    CAPTURE(scheme_name(id));
    PopulationState s = uniform_state(g.nx, 1.0);
    for (int n = 0; n < 50; ++n) s = step(id, s, p, g, k);
    CHECK(s.u_plus == Field(g.nx, 1.0));
    CHECK(s.u_minus == Field(g.nx, 1.0));
  }
}

TEST_CASE("plain qsa is the upwind scheme with averaged sources") {
  const ModelParams p;
  const GridSpec g = GridSpec::make(p, 0.015625, 0.03125, 1.0);
  const KernelTable k = build_kernel_table(p, g);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PopulationState s = random_state(g.nx, 100 + seed);
    const PopulationState got = step(SchemeId::QSA, s, p, g, k);
    const PopulationState want = upwind_averaged_source(s, p, g, k);
    CHECK(got == want);
  }
}

TEST_CASE("translation and reflection equivariance") {
  ModelParams p;
  SUBCASE("reference parameters") {}
  SUBCASE("with alignment") { p.q_al = 0.5; }
  const GridSpec g = GridSpec::make(p, 0.03125, 0.0625, 1.0);
  const KernelTable k = build_kernel_table(p, g);
  const PopulationState s = random_state(g.nx, 77);
  for (SchemeId id : kAllSchemes) {
    CAPTURE(scheme_name(id));
    const PopulationState base = step(id, s, p, g, k);
    CHECK(step(id, rotate(s, 37), p, g, k) == rotate(base, 37));
    CHECK(step(id, reflect(s), p, g, k) == reflect(base));
  }
}

TEST_CASE("step is independent of the thread count") {
  const ModelParams p;
  const GridSpec g = GridSpec::make(p, 0.0078125, 0.015625, 1.0);
  const KernelTable k = build_kernel_table(p, g);
  const PopulationState s = random_state(g.nx, 5);
  for (SchemeId id : {SchemeId::Upwind, SchemeId::MacCormack, SchemeId::QSA_MC})
    CHECK(step(id, s, p, g, k, 1) == step(id, s, p, g, k, 3));
}

TEST_CASE("non-finite values abort the step") {
  const ModelParams p;
  const GridSpec g = GridSpec::make(p, 0.03125, 0.0625, 1.0);
  const KernelTable k = build_kernel_table(p, g);
  PopulationState s = uniform_state(g.nx, 1.0);
  s.u_plus[17] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(step(SchemeId::Upwind, s, p, g, k), NonFiniteError);
}

TEST_CASE("advection error shrinks with the grid") {
  for (SchemeId id : {SchemeId::Upwind, SchemeId::MacCormack, SchemeId::QSA_LW}) {
    CAPTURE(scheme_name(id));
    const double coarse = advection_error(id, 0.03125, 0.2, 5.0);
    const double fine = advection_error(id, 0.015625, 0.2, 5.0);
    CHECK(fine < coarse);
  }
}
