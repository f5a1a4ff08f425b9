#include "hcmm/errors.hpp"
#include "hcmm/tensor.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace hcmm;
using hcmm::test::random_minor_symmetric;
using hcmm::test::random_symmetric;
using hcmm::test::random_tensor;

namespace
{
  // Naive index-loop references, written without the pair storage.
  double loop_dyad(const Tensor2& a, const Tensor2& b, int i, int j, int k, int l) { return a(i, j) * b(k, l); }

  double loop_sym_outer(const Tensor2& a, const Tensor2& b, int i, int j, int k, int l)
  {
    return 0.5 * (a(i, k) * b(j, l) + a(i, l) * b(j, k));
  }

  double loop_push_forward(const Tensor4& C, const Tensor2& F, double J, int i, int j, int k, int l)
  {
    double s = 0.0;
    for (int I = 0; I < 3; ++I)
      for (int JJ = 0; JJ < 3; ++JJ)
        for (int K = 0; K < 3; ++K)
          for (int L = 0; L < 3; ++L) s += F(i, I) * F(j, JJ) * F(k, K) * F(l, L) * C(I, JJ, K, L);
    return s / J;
  }

  template <class A, class B>
  double rel_4(const A& got, const B& ref)
  {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
          {
            const double d = got(i, j, k, l) - ref(i, j, k, l);
            num = std::max(num, std::abs(d));
            den = std::max(den, std::abs(ref(i, j, k, l)));
          }
    return num / den;
  }
}  // namespace

TEST(Tensor2, DeterminantAndInverse)
{
  std::mt19937_64 rng(1);
  for (int n = 0; n < 100; ++n)
  {
    Tensor2 a = random_tensor(rng);
    for (int i = 0; i < 3; ++i) a(i, i) += 2.0;
    const Tensor2 prod = a * inverse(a);
    EXPECT_LT(hcmm::test::max_diff(prod, Tensor2::identity()), 1e-13);
  }
  EXPECT_DOUBLE_EQ(det(Tensor2::diagonal(2.0, 3.0, 4.0)), 24.0);
}

TEST(Tensor2, SingularInverseRejected)
{
  Tensor2 a = Tensor2::diagonal(1.0, 1.0, 0.0);
  EXPECT_THROW(inverse(a), Error);
}

TEST(Tensor2, SymmetricConstructionIsExact)
{
  std::mt19937_64 rng(2);
  for (int n = 0; n < 20; ++n)
  {
    const Tensor2 s = random_symmetric(rng);
    EXPECT_EQ(s, transpose(s));
  }
}

TEST(Dyad, IdentityDyadGivesTraceTimesIdentity)
{
  std::mt19937_64 rng(3);
  const Tensor2 X = random_symmetric(rng);
  const Tensor2 r = contract(dyad(Tensor2::identity(), Tensor2::identity()), X);
  EXPECT_LT(hcmm::test::max_diff(r, trace(X) * Tensor2::identity()), 1e-15);
}

TEST(Dyad, ContractionIsScaledFirstFactor)
{
  std::mt19937_64 rng(4);
  const Tensor2 A = random_symmetric(rng), B = random_symmetric(rng), C = random_symmetric(rng);
  const Tensor2 r = contract(dyad(A, B), C);
  EXPECT_LT(hcmm::test::max_diff(r, ddot(B, C) * A), 1e-14);
}

TEST(Dyad, ComponentMatchesLoop)
{
  std::mt19937_64 rng(5);
  const Tensor2 A = random_symmetric(rng), B = random_symmetric(rng);
  EXPECT_DOUBLE_EQ(dyad(A, B)(0, 1, 2, 2), A(0, 1) * B(2, 2));
  const FullTensor4 full = dyad_full(random_tensor(rng), random_tensor(rng));
  (void)full;
}

TEST(SymOuter, IdentityIsSymmetricIdentity)
{
  std::mt19937_64 rng(6);
  const Tensor4 S = sym_outer(Tensor2::identity(), Tensor2::identity());
  for (int n = 0; n < 100; ++n)
  {
    const Tensor2 X = random_symmetric(rng);
    EXPECT_EQ(contract(S, X), X);
  }
  EXPECT_EQ(identity_sym().m, S.m);
}

TEST(SymOuter, InverseRightCauchyGreenComponent)
{
  const Tensor2 Cinv = inverse(Tensor2::diagonal(4.0, 1.0, 1.0));
  EXPECT_NEAR(sym_outer(Cinv, Cinv)(0, 0, 0, 0), 1.0 / 16.0, 1e-16);
  EXPECT_NEAR(loop_sym_outer(Cinv, Cinv, 0, 0, 0, 0), 1.0 / 16.0, 1e-16);
}

TEST(SymOuter, MinorSymmetry)
{
  std::mt19937_64 rng(7);
  // i <-> j symmetry needs A = B or the symmetrized pair A ⊙ B + B ⊙ A;
  // k <-> l symmetry holds for any A, B.
  const Tensor2 A = random_symmetric(rng), B = random_symmetric(rng);
  const auto pair = [&](int i, int j, int k, int l) {
    return loop_sym_outer(A, B, i, j, k, l) + loop_sym_outer(B, A, i, j, k, l);
  };
  const Tensor4 T = sym_outer(A, B) + sym_outer(B, A);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
        {
          EXPECT_NEAR(loop_sym_outer(A, A, i, j, k, l), loop_sym_outer(A, A, j, i, k, l), 1e-15);
          EXPECT_NEAR(loop_sym_outer(A, B, i, j, k, l), loop_sym_outer(A, B, i, j, l, k), 1e-15);
          EXPECT_NEAR(pair(i, j, k, l), pair(j, i, k, l), 1e-15);
          EXPECT_NEAR(T(i, j, k, l), pair(i, j, k, l), 1e-15);
        }
}

TEST(SquareDyads, IdentityGivesFourthOrderIdentities)
{
  const auto [under, over] = square_dyads(Tensor2::identity(), Tensor2::identity());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
        {
          EXPECT_EQ(under(i, j, k, l), (i == k && j == l) ? 1.0 : 0.0);
          EXPECT_EQ(over(i, j, k, l), (i == l && j == k) ? 1.0 : 0.0);
        }
}

TEST(SquareDyads, AverageEqualsSymOuter)
{
  std::mt19937_64 rng(8);
  const Tensor2 A = random_symmetric(rng);
  const auto [under, over] = square_dyads(A, A);
  const Tensor4 s = sym_outer(A, A);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          EXPECT_NEAR(0.5 * (under(i, j, k, l) + over(i, j, k, l)), s(i, j, k, l), 1e-15);
}

TEST(PushForward, IdentityAndIsotropicScaling)
{
  std::mt19937_64 rng(9);
  const Tensor4 C = random_minor_symmetric(rng);
  const Tensor4 same = push_forward(C, Tensor2::identity(), 1.0);
  for (int n = 0; n < 36; ++n) EXPECT_DOUBLE_EQ(same.m[n], C.m[n]);
  const Tensor4 scaled = push_forward(C, 2.0 * Tensor2::identity(), 8.0);
  for (int n = 0; n < 36; ++n) EXPECT_NEAR(scaled.m[n], 2.0 * C.m[n], 1e-14);
}

TEST(PushForward, RejectsNonPositiveJacobian)
{
  EXPECT_THROW(push_forward(Tensor4{}, Tensor2::identity(), 0.0), InvertedConfiguration);
  EXPECT_THROW(push_forward(Tensor4{}, Tensor2::identity(), -1.0), InvertedConfiguration);
}

// Property: every product agrees with the index-loop reference on 100 random inputs.
TEST(TensorProperties, ProductsAgreeWithLoopReference)
{
  std::mt19937_64 rng(10);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n)
  {
    const Tensor2 A = random_symmetric(rng), B = random_symmetric(rng);
    const Tensor2 Ag = random_tensor(rng), Bg = random_tensor(rng);
    worst = std::max(worst, rel_4(dyad(A, B), [&](int i, int j, int k, int l) { return loop_dyad(A, B, i, j, k, l); }));
    worst = std::max(worst, rel_4(dyad_full(Ag, Bg), [&](int i, int j, int k, int l) {
      return loop_dyad(Ag, Bg, i, j, k, l);
    }));
    worst = std::max(worst, rel_4(sym_outer(A, B) + sym_outer(B, A), [&](int i, int j, int k, int l) {
      return loop_sym_outer(A, B, i, j, k, l) + loop_sym_outer(B, A, i, j, k, l);
    }));
    worst = std::max(worst, rel_4(sym_outer(A, A), [&](int i, int j, int k, int l) {
      return loop_sym_outer(A, A, i, j, k, l);
    }));
    const auto [under, over] = square_dyads(Ag, Bg);
    worst = std::max(worst, rel_4(under, [&](int i, int j, int k, int l) { return Ag(i, k) * Bg(j, l); }));
    worst = std::max(worst, rel_4(over, [&](int i, int j, int k, int l) { return Ag(i, l) * Bg(j, k); }));
  }
  EXPECT_LT(worst, 1e-14);
}

TEST(TensorProperties, PushForwardAgreesWithLoopAndKeepsMinorSymmetry)
{
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n)
  {
    const Tensor4 C = random_minor_symmetric(rng);
    Tensor2 F = random_tensor(rng, -0.3, 0.3);
    for (int i = 0; i < 3; ++i) F(i, i) += 1.0;
    const double J = det(F);
    const Tensor4 c = push_forward(C, F, J);
    // c is stored through the pair map, so minor symmetry holds by construction; compare
    // every (i,j,k,l) including the transposed pairs against the unsymmetrized loop.
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
          {
            const double ref = loop_push_forward(C, F, J, i, j, k, l);
            EXPECT_NEAR(ref, loop_push_forward(C, F, J, j, i, k, l), 1e-12 * (1.0 + std::abs(ref)));
            EXPECT_NEAR(ref, loop_push_forward(C, F, J, i, j, l, k), 1e-12 * (1.0 + std::abs(ref)));
            num = std::max(num, std::abs(c(i, j, k, l) - ref));
            den = std::max(den, std::abs(ref));
          }
    worst = std::max(worst, num / den);
  }
  EXPECT_LT(worst, 1e-14);
}
