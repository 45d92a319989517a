"""
Nearest-neighbor graph GPs
==========================

Build a nearest-neighbor DAG over scattered points, evaluate the factorized
density, and check it against the exact dense density when every earlier
point is a predecessor.
"""

import numpy as np

from gpscale import dense, graph
from gpscale.dense import CholeskyGp
from gpscale.graph import DagGp
from gpscale.kernels import Kernel

rng = np.random.default_rng(0)
kernel = Kernel.matern(1.5, sigma=1.0, length_scale=0.3)

# Order points along the first coordinate, then connect each to its 5 nearest predecessors.
x = rng.uniform(size=(400, 2))
x = x[graph.sort_locations(x)]
edges = graph.nearest_neighbor_graph(x, q=5)
print(f"{len(edges)} edges, first few (parent -> child):", edges.to_array()[:, :6].T.tolist())

dag = DagGp.from_edges(x, edges, kernel)
z = rng.standard_normal(len(x))
f = graph.graph_inv_transform(z, 0.0, dag)
print("log density of a draw:", graph.graph_lpdf(f, 0.0, dag))
print("whitening recovers the noise:", np.allclose(graph.graph_whiten(f, 0.0, dag), z))

# With complete predecessor sets the factorization is exact.
small = x[:20]
full = DagGp.complete(small, kernel)
gp = CholeskyGp.from_kernel(kernel, small)
f_small = dense.dense_inv_transform(z[:20], gp)
print("complete graph vs dense:", graph.graph_lpdf(f_small, 0.0, full), dense.dense_lpdf(f_small, gp))
