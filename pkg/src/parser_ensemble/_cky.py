"""Viterbi CKY over a binary grammar (numba kernel).

Rules must be sorted by (lhs, left, right).  Within a cell the first
(rule, split) pair reaching the maximum wins, so ties resolve to the
lowest-index derivation.
"""
import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def viterbi_chart(lex, r_lhs, r_left, r_right, r_logp):
    n = lex.shape[0]
    n_labels = lex.shape[1]
    score = np.full((n, n + 1, n_labels), -np.inf)
    back_rule = np.full((n, n + 1, n_labels), -1, dtype=np.int32)
    back_split = np.full((n, n + 1, n_labels), -1, dtype=np.int32)
    for i in range(n):
        for a in range(n_labels):
            score[i, i + 1, a] = lex[i, a]
    n_rules = r_lhs.shape[0]
    for length in range(2, n + 1):
        for i in range(0, n - length + 1):
            j = i + length
            for r in range(n_rules):
                a = r_lhs[r]
                b = r_left[r]
                c = r_right[r]
                lp = r_logp[r]
                best = score[i, j, a]
                for k in range(i + 1, j):
                    lb = score[i, k, b]
                    if lb == -np.inf:
                        continue
                    rc = score[k, j, c]
                    if rc == -np.inf:
                        continue
                    s = lp + lb + rc
                    if s > best:
                        best = s
                        back_rule[i, j, a] = r
                        back_split[i, j, a] = k
                score[i, j, a] = best
    return score, back_rule, back_split
