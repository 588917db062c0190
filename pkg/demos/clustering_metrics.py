"""
Scoring a clustering
====================

ACC matches cluster ids to classes with the Hungarian method before
counting hits; NMI compares the partitions with no matching at all.
"""

from ssel.evaluation import accuracy, contingency, hungarian_map, nmi

true = [0, 0, 0, 1, 1, 1, 2, 2, 2]
pred = [2, 2, 1, 0, 0, 0, 1, 1, 1]

print("contingency (pred x true):")
print(contingency(true, pred))
print("mapping:", hungarian_map(true, pred))
print(f"ACC {accuracy(true, pred):.3f}  NMI {nmi(true, pred):.3f}")

# Relabeling the clusters changes nothing
swapped = [{0: 1, 1: 2, 2: 0}[p] for p in pred]
print(f"relabeled: ACC {accuracy(true, swapped):.3f}  NMI {nmi(true, swapped):.3f}")
