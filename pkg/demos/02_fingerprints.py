"""Train fingerprints on a synthetic two-class dataset and inspect them."""
import numpy as np

from anonfp.embed import TrainConfig, train
from anonfp.synthetic import ring_dataset
from anonfp.walks import build_corpus

# class 1 molecules are made of 5-rings, class 0 of 6-rings
gs = ring_dataset(60, seed=0)
print(gs.summary())

corpus = build_corpus(gs, r=6, t=20, master_seed=0)
print(f"vocabulary {corpus.vocab_size}, walks {corpus.total_walks}")
print("distinct walks per graph:", corpus.distinct_counts()[:10], "...")

model = train(corpus, TrainConfig(d=32, epochs=10, seed=0))
for epoch, loss in enumerate(model.epoch_losses):
    print(f"epoch {epoch}: loss {loss:.4f}")

# cosine similarity within and across classes
G = model.graph_vectors / np.linalg.norm(model.graph_vectors, axis=1, keepdims=True)
S = G @ G.T
y = np.array(gs.labels)
same = (y[:, None] == y[None, :]) & ~np.eye(len(y), dtype=bool)
print(f"mean cosine, same class      {S[same].mean():.3f}")
print(f"mean cosine, different class {S[y[:, None] != y[None, :]].mean():.3f}")

# walks most aligned with each class centroid
M = model.walk_vectors
inv = {i: k for k, i in corpus.vocabulary.items()}
for label in (0, 1):
    centroid = model.graph_vectors[y == label].mean(axis=0)
    best = np.argsort(-(M @ centroid))[:3]
    print(label, [inv[i] for i in best])
