"""Anonymous walks on small graphs: exact laws against sampled corpora."""
from anonfp.graphs import GraphSet
from anonfp.synthetic import complete_graph, cycle_graph, path_graph, star_graph
from anonfp.walks import (anonymize, anonymous_walk_distribution, build_corpus,
                          count_anonymous_walks, key_to_str, total_variation)

# a walk forgets node identities and keeps only the pattern of revisits
print(anonymize(["C", "N", "C", "O"]))   # (1, 2, 1, 3)
print(anonymize([4, 7, 4, 7, 9]))        # (1, 2, 1, 2, 3)

# how many distinct patterns exist for r steps
for r in range(1, 9):
    print(f"r={r}: {count_anonymous_walks(r)} anonymous walks")

# exact distribution on a triangle at r=2: go back, or close the loop
print(anonymous_walk_distribution(complete_graph(3), 2))

graphs = {"K3": complete_graph(3), "C4": cycle_graph(4), "P4": path_graph(4), "star": star_graph(4)}
r = 4
for name, g in graphs.items():
    exact = anonymous_walk_distribution(g, r)
    top = sorted(exact.items(), key=lambda kv: -kv[1])[:3]
    print(name, ", ".join(f"{key_to_str(k)}={p:.3f}" for k, p in top))

# sampling t walks from every node converges to the exact law
g = graphs["P4"]
for t in (10, 100, 1000, 10_000):
    corpus = build_corpus(GraphSet((g,)), r, t, master_seed=1)
    tv = total_variation(corpus.empirical(0), anonymous_walk_distribution(g, r))
    print(f"t={t:>6}: total variation {tv:.4f}")
