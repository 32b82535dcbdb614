"""Independent oracles used to freeze expected values in the C++ tests.

Nothing here shares code with the library: laws are computed at the level of
whole permutations (all n! of them) rather than on integer partitions.
"""
import itertools
import math

import numpy as np


def survival_bisection(s, iters=200):
    if s <= 1:
        return 0.0
    lo, hi = 1e-15, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if 1 - mid - math.exp(-s * mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cycle_type(perm):
    n = len(perm)
    seen = [False] * n
    sizes = []
    for v in range(n):
        if not seen[v]:
            k = 0
            w = v
            while not seen[w]:
                seen[w] = True
                w = perm[w]
                k += 1
            sizes.append(k)
    return tuple(sorted(sizes, reverse=True))


def permutation_level_laws(n, t_max):
    """Law of the cycle type of T_t o ... o T_1 for t = 0..t_max, by exact
    evolution of the distribution over all n! permutations."""
    perms = list(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    # successor of perm p under left-composition with (a b): (T o p)(x) = T(p(x))
    nxt = np.empty((len(perms), len(pairs)), dtype=np.int64)
    for i, p in enumerate(perms):
        for j, (a, b) in enumerate(pairs):
            q = tuple(b if y == a else a if y == b else y for y in p)
            nxt[i, j] = index[q]
    types = [cycle_type(p) for p in perms]
    dist = np.zeros(len(perms))
    dist[index[tuple(range(n))]] = 1.0
    laws = []
    for t in range(t_max + 1):
        law = {}
        for i, pr in enumerate(dist):
            if pr:
                law[types[i]] = law.get(types[i], 0.0) + pr
        laws.append(law)
        new = np.zeros_like(dist)
        for j in range(len(pairs)):
            np.add.at(new, nxt[:, j], dist / len(pairs))
        dist = new
    return laws


def tv(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


if __name__ == "__main__":
    print("z(2) =", repr(survival_bisection(2.0)))
    for s in (1.5, 3.0, 5.0):
        print(f"z({s}) =", repr(survival_bisection(s)))

    # n = 3 one-step law from (2,1): enumerate ordered vertex pairs
    base = (1, 0, 2)  # the 2-cycle (0 1) and fixed point 2
    out = {}
    for a in range(3):
        for b in range(3):
            if a != b:
                q = tuple(b if y == a else a if y == b else y for y in base)
                out[cycle_type(q)] = out.get(cycle_type(q), 0) + 1
    print("n=3 from (2,1):", {k: f"{v}/6" for k, v in out.items()})

    for n in (3, 4):
        counts = {}
        for p in itertools.permutations(range(n)):
            counts[cycle_type(p)] = counts.get(cycle_type(p), 0) + 1
        print(f"uniform law n={n}:", {k: f"{v}/{math.factorial(n)}" for k, v in counts.items()})

    laws3 = permutation_level_laws(3, 42)
    print("n=3 t=2 law:", laws3[2])
    print("n=3 TV(t,t+2):", [repr(tv(laws3[t], laws3[t + 2])) for t in (0, 1, 2, 5, 10, 20, 40)])

    laws8 = permutation_level_laws(8, 42)
    print("n=8 TV(t,t+2) for t=8..40:")
    for t in range(8, 41):
        print(t, repr(tv(laws8[t], laws8[t + 2])))
    print("n=8 law at t=5 (for CLI check):", len(laws8[5]))
