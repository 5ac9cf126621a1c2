// Acceptance runner: one line per criterion, "criterion N: PASS|FAIL ...".
// Usage: oulab_acceptance [N ...]   (no arguments runs all twelve)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "oulab/harness.hpp"
#include "oulab/matkit.hpp"

using namespace oulab;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream note;
};

constexpr std::uint64_t kSeed = 20240607;

Vec unit(int d, int k) {
  Vec e = Vec::Zero(d);
  e[k] = 1.0;
  return e;
}

Suite suite_1d(double a = 1.0) {
  Suite s = builtin_suite("symmetric-1d");
  s.a = -a * Mat::Identity(1, 1);
  s.seed = kSeed;
  return s;
}

Suite suite_rotation() {
  Suite s = builtin_suite("rotation-2d");
  s.seed = kSeed;
  return s;
}

Suite suite_sym2d() {
  Suite s;
  s.name = "symmetric-2d";
  s.a = Mat::Zero(2, 2);
  s.a(0, 0) = -1.0;
  s.a(1, 1) = -2.0;
  s.domain = Domain::half_space(unit(2, 0), 0.0);
  s.seed = kSeed;
  return s;
}

std::string values(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v[i];
  return os.str();
}

// Runs one harness check through the suite runner (so statistical checks
// get their single retry) and records the verdict.
CheckResult run_one(Outcome& o, Suite s, const std::string& id, const std::string& label) {
  s.checks = {id};
  const SuiteReport rep = run_suite(s);
  const CheckResult& r = rep.results.at(0);
  const bool ok = r.verdict == Verdict::pass;
  o.pass = o.pass && ok;
  o.note << " [" << label << " " << id << " " << verdict_name(r.verdict) << " measured=" << values(r.measured)
         << (r.rerun ? " rerun" : "") << "]";
  return r;
}

void c1(Outcome& o) {
  std::mt19937_64 gen(kSeed);
  double lyap = 0.0, bsym = 0.0, dual = 0.0, lyap_vs_kron = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int d = 1 + k % 8;
    const Mat a = oracle::random_stable(d, gen);
    const OUModel m = build_model(a);
    const Mat id = Mat::Identity(d, d);
    const double res = (a * m.q_inf + m.q_inf * a.transpose() + id).norm();
    lyap = std::max(lyap, res / d);
    lyap_vs_kron = std::max(lyap_vs_kron, (m.q_inf - oracle::lyapunov_kron(a, id)).norm() / m.q_inf.norm());
    bsym = std::max(bsym, (m.b + m.b.transpose() - id).norm());
    Suite s;
    s.a = a;
    s.seed = kSeed + k;
    s.checks = {"model.duality"};
    const SuiteReport rep = run_suite(s);
    dual = std::max(dual, rep.results[0].measured[0]);
    o.pass = o.pass && rep.results[0].verdict == Verdict::pass;
  }
  o.pass = o.pass && lyap <= 1e-10 && bsym <= 1e-12 && dual <= 1e-8 && lyap_vs_kron <= 1e-8;
  o.note << " max Lyapunov residual/d=" << lyap << " |B+B^T-I|=" << bsym << " duality=" << dual
         << " Q vs Kronecker solve=" << lyap_vs_kron;
}

void c2(Outcome& o) {
  const CheckResult r = run_one(o, suite_1d(), "sg.oracle", "1d");
  const double ref = r.measured.at(1);
  const bool ref_ok = std::abs(ref - std::exp(-1.0 / 16.0)) <= 1e-12;
  o.pass = o.pass && ref_ok;
  o.note << " reference value " << ref << (ref_ok ? " = e^{-1/16}" : " != e^{-1/16}");
  run_one(o, suite_rotation(), "sg.oracle", "rotation");
}

void c3(Outcome& o) {
  run_one(o, suite_1d(), "fk.resolvent4", "1d");
  run_one(o, suite_rotation(), "fk.resolvent4", "rotation");
}

void c4(Outcome& o) {
  for (auto [s, label] : {std::pair{suite_1d(), "1d"}, std::pair{suite_sym2d(), "sym2d"},
                          std::pair{suite_rotation(), "rotation"}}) {
    run_one(o, s, "grid.gradres", label);
    run_one(o, s, "grid.ndr", label);
  }
}

void c5(Outcome& o) {
  Suite ball = suite_rotation();
  ball.domain = Domain::ball(Vec::Zero(2), 1.5);
  Suite outside = suite_rotation();
  outside.domain = Domain::complement(Domain::ball(Vec::Zero(2), 0.7));
  Suite box = suite_sym2d();
  box.domain = Domain::box(Vec::Constant(2, -1.0), Vec::Constant(2, 1.2));
  for (auto [s, label] : {std::pair{suite_1d(), "1d"}, std::pair{suite_rotation(), "rotation"},
                          std::pair{ball, "ball"}, std::pair{outside, "exterior"}, std::pair{box, "box"}})
    run_one(o, s, "grid.identities", label);
}

void c6(Outcome& o) {
  run_one(o, suite_1d(), "grid.riesz", "1d");
  run_one(o, suite_sym2d(), "grid.riesz", "sym2d");
  run_one(o, suite_rotation(), "grid.riesz", "rotation");
}

void c7(Outcome& o) {
  run_one(o, suite_1d(), "grid.bisector", "1d");
  run_one(o, suite_sym2d(), "grid.bisector", "sym2d");
  run_one(o, suite_rotation(), "grid.bisector", "rotation");
}

void c8(Outcome& o) {
  for (double a : {0.5, 1.0, 2.0}) run_one(o, suite_1d(a), "grid.poincare.whole", "a=" + std::to_string(a).substr(0, 3));
}

void c9(Outcome& o) {
  for (double a : {0.5, 1.0, 2.0}) run_one(o, suite_1d(a), "grid.poincare.domain", "a=" + std::to_string(a).substr(0, 3));
  run_one(o, suite_rotation(), "grid.poincare.domain", "rotation");
}

void c10(Outcome& o) { run_one(o, suite_1d(), "kill.eigen", "1d"); }

void c11(Outcome& o) { run_one(o, suite_1d(), "pen.sweep", "1d"); }

void c12(Outcome& o) {
  for (double a : {0.5, 1.0, 2.0}) run_one(o, suite_1d(a), "sg.ergodic", "a=" + std::to_string(a).substr(0, 3));
  run_one(o, suite_1d(), "paths.increment", "1d");
  run_one(o, suite_rotation(), "paths.increment", "rotation");
}

struct Criterion {
  int number;
  const char* title;
  void (*fn)(Outcome&);
};

const Criterion kCriteria[] = {
    {1, "structural identities", c1},
    {2, "exponential oracle", c2},
    {3, "discrete resolvent estimates", c3},
    {4, "gradient and NDR bounds", c4},
    {5, "matrix identities", c5},
    {6, "Riesz equivalence", c6},
    {7, "bisectoriality", c7},
    {8, "Poincare, whole space", c8},
    {9, "Poincare, domain", c9},
    {10, "killed-semigroup oracle", c10},
    {11, "penalization limit", c11},
    {12, "ergodic limit and increment bound", c12},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  if (wanted.empty())
    for (const Criterion& c : kCriteria) wanted.push_back(c.number);

  bool all = true;
  for (int n : wanted) {
    const Criterion* c = nullptr;
    for (const Criterion& k : kCriteria)
      if (k.number == n) c = &k;
    if (!c) {
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 2;
    }
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c->fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.note << " error: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d (%s): %s in %.1fs;%s\n", c->number, c->title, o.pass ? "PASS" : "FAIL", secs,
                o.note.str().c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
