#include <doctest.h>

#include "oracles.hpp"
#include "simrec/numerics.hpp"
#include "simrec/rng.hpp"

#include <cmath>
#include <numeric>

using namespace simrec;

namespace {

MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index r = 0;
  for (const auto& row : rows) {
    Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index j = 0;
  for (double x : v) out[j++] = x;
  return out;
}

}  // namespace

TEST_CASE("rng streams are reproducible and forks are independent of parent draws") {
  RngStream a(7, 3), b(7, 3);
  for (int j = 0; j < 10; ++j) CHECK(a() == b());
  const RngStream parent(7, 3);
  RngStream p2 = parent;
  p2();
  CHECK(parent.fork(5)() == p2.fork(5)());
  CHECK(parent.fork(5)() != parent.fork(6)());
  CHECK(RngStream(1, 0)() != RngStream(2, 0)());
  RngStream r(0, 0);
  for (int j = 0; j < 1000; ++j) {
    const auto x = r.below(7);
    CHECK(x < 7);
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
  }
}

TEST_CASE("inner product scores") {
  CHECK(inner_product_scores(mat({{1, 0}, {0, 1}}), mat({{2}, {3}})) == mat({{2}, {3}}));
  CHECK(inner_product_scores(mat({{0, 0}}), mat({{5}, {7}})) == mat({{0}}));
  CHECK(inner_product_scores(mat({{1, 2}}), mat({{3}, {4}})) == mat({{11}}));
  CHECK_THROWS_AS(inner_product_scores(mat({{1, 2}}), mat({{3, 4}})), ConfigError);
}

TEST_CASE("inner product scores: dense and sparse agree bitwise") {
  RngStream rng(1, 1);
  MatrixXd u(7, 5), i(5, 9);
  for (Index j = 0; j < u.size(); ++j) u.data()[j] = rng.bernoulli(0.5) ? rng.uniform() : 0.0;
  for (Index j = 0; j < i.size(); ++j) i.data()[j] = rng.bernoulli(0.5) ? rng.uniform() : 0.0;
  const SparseMatrix<double> us = u.sparseView(), is = i.sparseView();
  CHECK(inner_product_scores(u, i) == inner_product_scores(us, is));
  CHECK(cosine_scores(u, i) == cosine_scores(us, is));
}

TEST_CASE("cosine scores") {
  CHECK(cosine_scores(mat({{1, 0}}), mat({{1}, {1}}))(0, 0) == doctest::Approx(0.70710678118654752));
  CHECK(cosine_scores(mat({{2, 0}}), mat({{1}, {0}}))(0, 0) == doctest::Approx(1.0));
  CHECK(cosine_scores(mat({{0, 0}}), mat({{1}, {0}}))(0, 0) == 0.0);
}

TEST_CASE("cosine equals inner product on unit-norm rows and columns") {
  RngStream rng(2, 0);
  MatrixXd u(6, 4), i(4, 8);
  for (Index j = 0; j < u.size(); ++j) u.data()[j] = rng.uniform() - 0.5;
  for (Index j = 0; j < i.size(); ++j) i.data()[j] = rng.uniform() - 0.5;
  u.rowwise().normalize();
  i.colwise().normalize();
  CHECK((cosine_scores(u, i) - inner_product_scores(u, i)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("nnls hand instances") {
  const VectorXd a = nnls(MatrixXd::Identity(2, 2), vec({3, -2}));
  CHECK(a[0] == doctest::Approx(3.0));
  CHECK(a[1] == 0.0);
  const VectorXd b = nnls(mat({{1}, {2}}), vec({1, 2}));
  CHECK(b[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(nnls(mat({{1}, {2}}), vec({1})), ConfigError);
}

TEST_CASE("nnls matches active-set enumeration") {
  RngStream rng(3, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const Index m = 2 + static_cast<Index>(rng.below(6));
    const Index n = 1 + static_cast<Index>(rng.below(6));
    MatrixXd a(m, n);
    VectorXd b(m);
    for (Index j = 0; j < a.size(); ++j) a.data()[j] = 2.0 * rng.uniform() - 1.0;
    for (Index j = 0; j < m; ++j) b[j] = 2.0 * rng.uniform() - 1.0;
    const VectorXd x = nnls(a, b);
    CHECK((x.array() >= 0.0).all());
    const double got = oracle::lsq_objective(a, b, x);
    CHECK(got <= b.squaredNorm() + 1e-12);
    CHECK(std::abs(got - oracle::nnls_brute_force(a, b)) < 1e-6);
  }
}

TEST_CASE("nnls through the normal equations agrees with the direct form") {
  RngStream rng(4, 0);
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXd a(12, 5);
    VectorXd b(12);
    for (Index j = 0; j < a.size(); ++j) a.data()[j] = rng.uniform();
    for (Index j = 0; j < b.size(); ++j) b[j] = rng.uniform() - 0.3;
    const VectorXd direct = nnls(a, b);
    const VectorXd normal = nnls_normal(a.transpose() * a, a.transpose() * b);
    CHECK((normal.array() >= 0.0).all());
    CHECK(std::abs(oracle::lsq_objective(a, b, normal) - oracle::lsq_objective(a, b, direct)) < 1e-9);
  }
}

TEST_CASE("als on a rank-one matrix recovers its structure") {
  // Implicit ALS fits the interaction indicator, so the rank-one truth is an
  // outer product of non-negative indicator vectors.
  RngStream rng(5, 0);
  const Index users = 30, items = 40;
  VectorXd p(users), q(items);
  for (Index j = 0; j < users; ++j) p[j] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  for (Index j = 0; j < items; ++j) q[j] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  const MatrixXd truth = p * q.transpose();
  AlsOptions options;
  options.factors = 1;
  options.iterations = 30;
  const AlsFactors f = als_factorize(truth, options, rng);
  const MatrixXd pred = f.users * f.items;
  std::vector<double> x(truth.data(), truth.data() + truth.size());
  std::vector<double> y(pred.data(), pred.data() + pred.size());
  CHECK(pearson_correlation(x, y) > 0.99);
  for (std::size_t j = 1; j < f.objective.size(); ++j)
    CHECK(f.objective[j] <= f.objective[j - 1] + 1e-9);
}

TEST_CASE("als degenerate and deterministic cases") {
  AlsOptions options;
  options.factors = 3;
  RngStream rng(6, 0);
  const AlsFactors zero = als_factorize(MatrixXd::Zero(5, 4), options, rng);
  CHECK(zero.users.allFinite());
  CHECK(zero.items.allFinite());
  const double reg = options.regularization * (zero.users.squaredNorm() + zero.items.squaredNorm());
  CHECK(zero.objective.back() ==
        doctest::Approx(reg + (zero.users * zero.items).squaredNorm()).epsilon(1e-12));
  CHECK((zero.users * zero.items).cwiseAbs().maxCoeff() < 1e-12);

  MatrixXd counts = MatrixXd::Zero(6, 7);
  counts(0, 1) = counts(2, 3) = counts(4, 6) = counts(5, 0) = 2;
  RngStream r1(9, 9), r2(9, 9);
  const AlsFactors a = als_factorize(counts, options, r1);
  const AlsFactors b = als_factorize(counts, options, r2);
  CHECK(a.users == b.users);
  CHECK(a.items == b.items);

  options.factors = 10;
  CHECK_THROWS_AS(als_factorize(counts, options, r1), ConfigError);
}

TEST_CASE("als warm start accepts new item columns") {
  AlsOptions options;
  options.factors = 2;
  RngStream rng(7, 0);
  MatrixXd counts = MatrixXd::Zero(4, 3);
  counts(0, 0) = counts(1, 1) = counts(2, 2) = counts(3, 0) = 1;
  const AlsFactors first = als_factorize(SparseMatrix<double>(counts.sparseView()), options, rng);
  MatrixXd grown = MatrixXd::Zero(4, 5);
  grown.leftCols(3) = counts;
  grown(1, 4) = 1;
  options.iterations = 3;
  const AlsFactors warm = als_factorize(SparseMatrix<double>(grown.sparseView()), options, first, rng);
  CHECK(warm.items.cols() == 5);
  CHECK(warm.users.allFinite());
}

TEST_CASE("slerp") {
  const VectorXd half = slerp(vec({1, 0}), vec({0, 1}), 0.5);
  CHECK(half[0] == doctest::Approx(0.70710678118654752));
  CHECK(half[1] == doctest::Approx(0.70710678118654752));
  const VectorXd full = slerp(vec({2, 0}), vec({0, 1}), 1.0);
  CHECK(full[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(full[1] == doctest::Approx(2.0));
  const VectorXd anti = slerp(vec({1, 0, 0}), vec({-1, 0, 0}), 0.5);
  CHECK(anti.allFinite());
  CHECK(anti.norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(slerp(vec({0, 0}), vec({1, 0}), 0.5), DomainError);
}

TEST_CASE("slerp preserves norm and fixes its endpoints") {
  RngStream rng(8, 0);
  for (int trial = 0; trial < 200; ++trial) {
    VectorXd u(5), v(5);
    for (Index j = 0; j < 5; ++j) {
      u[j] = rng.uniform() * 3.0 - 1.0;
      v[j] = rng.uniform() * 3.0 - 1.0;
    }
    const double t = rng.uniform();
    CHECK(std::abs(slerp(u, v, t).norm() - u.norm()) < 1e-12);
    CHECK((slerp(u, v, 0.0) - u).norm() < 1e-12);
    CHECK((slerp(u, u, t) - u).norm() < 1e-12);
  }
}

TEST_CASE("dirichlet sampling") {
  RngStream rng(10, 0);
  const VectorXd alpha = VectorXd::Constant(20, 10.0);
  VectorXd mean = VectorXd::Zero(20);
  const int draws = 10000;
  for (int j = 0; j < draws; ++j) {
    const VectorXd x = sample_dirichlet(alpha, rng);
    CHECK(std::abs(x.sum() - 1.0) < 1e-12);
    CHECK((x.array() >= 0.0).all());
    mean += x;
  }
  mean /= draws;
  for (Index j = 0; j < 20; ++j) CHECK(std::abs(mean[j] - 0.05) < 0.01);

  VectorXd peaked = VectorXd::Constant(5, 1e-9);
  peaked[0] = 1e6;
  CHECK(sample_dirichlet(peaked, rng)[0] == doctest::Approx(1.0));

  RngStream a(11, 0), b(11, 0);
  CHECK(sample_dirichlet(alpha, a) == sample_dirichlet(alpha, b));

  const VectorXd sparse = sample_dirichlet(VectorXd::Constant(20, 0.01), rng);
  CHECK(std::abs(sparse.sum() - 1.0) < 1e-12);
  for (Index j = 0; j < 20; ++j)
    CHECK((sparse[j] == 0.0 || sparse[j] >= std::numeric_limits<double>::min()));
  CHECK_THROWS_AS(sample_dirichlet(VectorXd::Zero(3), rng), DomainError);
}

TEST_CASE("beta by mean") {
  RngStream rng(12, 0);
  double sum = 0.0;
  for (int j = 0; j < 10000; ++j) sum += sample_beta_mean(0.5, 1000.0, rng);
  CHECK(std::abs(sum / 10000 - 0.5) < 0.01);
  CHECK(sample_beta_mean(0.0, 10.0, rng) == 0.0);
  CHECK(sample_beta_mean(1.0, 10.0, rng) == 1.0);
  CHECK_THROWS_AS(sample_beta_mean(1.5, 10.0, rng), DomainError);
}

TEST_CASE("jaccard") {
  const std::vector<ItemId> a{1, 2}, b{2, 3}, e{};
  CHECK(jaccard(a, b) == doctest::Approx(1.0 / 3.0));
  CHECK(jaccard(a, a) == 1.0);
  CHECK(jaccard(e, e) == 1.0);
  CHECK(jaccard(a, e) == 0.0);
  CHECK(jaccard(a, b) == jaccard(b, a));
}

TEST_CASE("shannon entropy") {
  CHECK(shannon_entropy(VectorXd::Constant(20, 0.05)) == doctest::Approx(std::log(20.0)));
  CHECK(shannon_entropy(VectorXd::Unit(20, 3)) == 0.0);
  CHECK(shannon_entropy(vec({0.5, 0.5})) == doctest::Approx(0.69314718055994531));
  RngStream rng(13, 0);
  for (int j = 0; j < 100; ++j) {
    const VectorXd p = sample_dirichlet(VectorXd::Constant(6, 0.7), rng);
    CHECK(shannon_entropy(p) <= std::log(6.0) + 1e-12);
  }
  CHECK_THROWS_AS(shannon_entropy(vec({0.5, 0.6})), DomainError);
}

TEST_CASE("dirichlet differential entropy") {
  // The flat Dirichlet on the 2-simplex has density 1 on an interval of length 1.
  CHECK(dirichlet_entropy(vec({1, 1})) == doctest::Approx(0.0));
  // Flat on the 3-simplex: density 2, so entropy is -ln 2.
  CHECK(dirichlet_entropy(vec({1, 1, 1})) == doctest::Approx(-std::log(2.0)));
}

TEST_CASE("power-law degree sampler mean matches the zeta ratio") {
  const std::int64_t kmax = 1000000;
  const PowerLawDegreeSampler sampler(2.5, kmax);
  const double expected = oracle::power_law_mean(2.5, kmax);
  CHECK(expected == doctest::Approx(1.947).epsilon(0.01));
  CHECK(sampler.mean() == doctest::Approx(expected).epsilon(1e-6));
  RngStream rng(14, 0);
  double sum = 0.0;
  const int draws = 1000000;
  for (int j = 0; j < draws; ++j) sum += static_cast<double>(sampler(rng));
  CHECK(std::abs(sum / draws - expected) < 0.02 * expected);

  const PowerLawDegreeSampler steep(10.0, 1000);
  int ones = 0;
  for (int j = 0; j < 10000; ++j) ones += steep(rng) == 1 ? 1 : 0;
  CHECK(ones >= 9900);
  CHECK(steep.probability(1) == doctest::Approx(1.0 / oracle::truncated_zeta(10.0, 1000)));

  RngStream a(15, 0), b(15, 0);
  for (int j = 0; j < 100; ++j) CHECK(sampler(a) == sampler(b));
}

TEST_CASE("power-law degree sequences are truncated and even") {
  RngStream rng(16, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto degrees = sample_power_law_degrees(50, 1.5, rng);
    const std::int64_t total = std::accumulate(degrees.begin(), degrees.end(), std::int64_t{0});
    CHECK(total % 2 == 0);
    for (auto d : degrees) CHECK((d >= 0 && d <= 49));
  }
  CHECK_THROWS_AS(sample_power_law_degrees(10, 1.0, rng), DomainError);
}

TEST_CASE("pearson correlation") {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1}, c{1, 1, 1, 1};
  CHECK(pearson_correlation(x, y) == doctest::Approx(1.0));
  CHECK(pearson_correlation(x, z) == doctest::Approx(-1.0));
  CHECK(pearson_correlation(x, c) == 0.0);
}
