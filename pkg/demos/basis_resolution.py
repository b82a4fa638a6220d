"""
Can Eve tell neighbouring bases apart?
======================================

Two views of the same question.  The angular-momentum picture gives a band
of phases consistent with the noise; converted to basis units it is Delta k,
and Delta k > 1 means adjacent bases blur together.  The mutual-information
table shows Eve learns about basis k only when her own guess k_E is close.
"""

from otpb import BasisGrid, delta_k_resolution, j_moments, mutual_information_table

m = j_moments(0.3, 700.0)
print("variances (x, y, z):", m.variances, " <n>/4 =", 700 / 4)

for n_mean, M in [(700, 1000), (700, 100), (1e12, 100)]:
    g = BasisGrid(n_mean, M)
    dk = delta_k_resolution(M // 3, g)
    print(f"<n>={n_mean:g}, M={M}: Delta k at k=M/3 is {dk:.3g} -> "
          f"{'bases blur' if dk > 1 else 'bases resolvable'}")

t = mutual_information_table(20, BasisGrid(100, 100))
for k_e in (20, 21, 25, 30, 50, 70):
    print(f"k_E={k_e:3d}: r_I/H = {t.ratio[k_e]:.5f}")
