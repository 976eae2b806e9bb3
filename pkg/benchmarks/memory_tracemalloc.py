#
# This program is for profiling memory usage of repeated EM runs with tracemalloc.
#
# https://docs.python.org/3/library/tracemalloc.html#module-tracemalloc
#
#     python benchmarks/memory_tracemalloc.py [runs]
#

import sys, os
# We need this sys.path line for running this benchmark, especially in VSCode debugger.
sys.path.insert(0, os.path.join(sys.path[0], '..'))
import tracemalloc

import mcse
from mcse.synthetic import make_corpus

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 20

decoder = mcse.GruDecoder.random(16, 129, 32, seed=0)
corpus = make_corpus(decoder, runs, 64, snrs_db=(0.0,), seed=0)
cfg = mcse.EmConfig(J=10, sampler=mcse.SamplerConfig(kind="mala"))


if __name__ == "__main__":
    tracemalloc.start()

    snapshots = []
    for i, mixture in enumerate(corpus):
        mcse.run_em(mixture.mixture, decoder, cfg)
        if i == 1 or i == runs - 1:
            snapshots.append(tracemalloc.take_snapshot())

    top_stats = snapshots[1].compare_to(snapshots[0], 'lineno')

    print("[ Top 10 ]")
    for stat in top_stats[:10]:
        print(stat)
