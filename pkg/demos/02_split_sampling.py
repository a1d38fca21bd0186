"""The split-composition rules on a 10,000-point pool with equal classes.

Training draws with replacement inside each class (duplicates simulate
repeated records); the test set then draws without replacement from the
untouched observations, so the two sides never share a point.
"""

import numpy as np

from mixrobust import DatasetPool, SamplingConfig, class_counts, compose_split
from mixrobust.seeding import generator

per_class = [3334, 3333, 3333]
labels = np.concatenate([np.full(c, j + 1, dtype=int)
                         for j, c in enumerate(per_class)])
pool = DatasetPool(features=np.zeros((10000, 1)), labels=labels)

mixture = (0.01, 0.01, 0.98)
print("pool: 10,000 observations, equal classes")
print(f"training mixture {mixture}, train 10%, test 25%")
print("per-class training counts:", class_counts(mixture, 1000))
print("per-class test counts:    ", class_counts(mixture, 2500))

split = compose_split(pool, mixture, mixture, SamplingConfig(0.10, 0.25),
                      generator(0, "train"), generator(0, "test"))

train_labels = pool.labels[split.train_indices]
test_labels = pool.labels[split.test_indices]
print("\ndrawn training counts:", [int((train_labels == j).sum()) for j in (1, 2, 3)])
print("drawn test counts:    ", [int((test_labels == j).sum()) for j in (1, 2, 3)])

distinct_train = np.unique(split.train_indices)
print(f"\ntraining draws {split.train_indices.size}, distinct "
      f"{distinct_train.size} (duplicates from replacement: "
      f"{split.train_indices.size - distinct_train.size})")
overlap = np.intersect1d(split.test_indices, distinct_train)
print(f"test uniqueness: {np.unique(split.test_indices).size} of "
      f"{split.test_indices.size}; overlap with training: {overlap.size}")
