#!/usr/bin/env python3
"""The linear-chain CRF dynamic programs, checked against brute force on an
enumerable instance."""

import itertools

import numpy as np

from dialact import autodiff as ad
from dialact.crf import crf_gold_score, crf_log_partition, crf_nll, viterbi_decode

rng = np.random.default_rng(8)
length, n_labels = 4, 3
unary = rng.normal(size=(length, n_labels))
trans = rng.normal(size=(n_labels, n_labels))

# brute force: score all 3^4 = 81 paths directly
paths = {}
for path in itertools.product(range(n_labels), repeat=length):
    s = unary[0, path[0]] + sum(
        unary[t, path[t]] + trans[path[t - 1], path[t]] for t in range(1, length)
    )
    paths[path] = float(s)
scores = np.array(list(paths.values()))
m = scores.max()
brute_log_z = m + np.log(np.exp(scores - m).sum())
brute_best = max(paths, key=paths.get)

unaries = [ad.constant(unary[t]) for t in range(length)]
log_z = float(crf_log_partition(unaries, ad.constant(trans)).value)
print(f"log partition: forward algorithm {log_z:.10f} vs enumeration {brute_log_z:.10f}")

best = tuple(viterbi_decode(unary, trans))
print(f"argmax path:   viterbi {best} vs enumeration {brute_best}")

# path scores exponentiate to a proper distribution
total = sum(np.exp(s - log_z) for s in paths.values())
print(f"sum of all path probabilities: {total:.12f}")

gold = brute_best
nll = float(crf_nll(unaries, ad.constant(trans), gold).value)
gold_prob = np.exp(float(crf_gold_score(unaries, ad.constant(trans), gold).value) - log_z)
print(f"NLL of the best path: {nll:.6f}  (its probability: {gold_prob:.4f})")

# gradients flow through the forward recursion
store = ad.ParamStore()
unary_p = store.add("unary", unary)
trans_p = store.add("trans", trans)
err = ad.grad_check(
    lambda: crf_nll([ad.row(unary_p, t) for t in range(length)], trans_p, gold), store
)
print(f"gradient check through the DP: max rel err {err:.2e}")
