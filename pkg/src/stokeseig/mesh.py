"""Conforming triangulations of the benchmark domains.

A :class:`Mesh` is immutable after construction.  Edges are stored with
ascending vertex ids, which fixes the global tangent (low id -> high id) used
for degree-of-freedom signs and inter-element jumps.  Each triangle is stored
counter-clockwise with its bisection edge between local vertices 0 and 1, so
newest-vertex refinement needs no extra bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, IOFailureError, MeshError

INTERIOR = 0
DIRICHLET = 1
NEUMANN = 2

UNIT_SQUARE = "unit_square"
BI_UNIT_SQUARE = "bi_unit_square"

# local edge j joins local vertices j and (j+1) % 3; edge 0 is the bisection edge
_LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


@dataclass(frozen=True)
class Patch:
    """Triangles sharing one mesh entity, with their total measure."""
    center: tuple
    triangles: tuple
    measure: float


class Mesh:
    """Conforming triangulation with oriented edges and boundary tags.

    Parameters
    ----------
    vertices : (nv, 2) float array
    tri_vertices : (nt, 3) int array
        Counter-clockwise vertex ids; edge (v0, v1) is the bisection edge.
    tri_edges : (nt, 3) int array
        Edge id of local edge j in column j.
    tri_parents : (nt,) int array
        Id of the parent triangle in the mesh this one was refined from
        (-1 for meshes built from scratch).
    edges : (ne, 2) int array
        Ascending vertex ids.
    edge_tris : (ne, 2) int array
        Adjacent triangle ids, -1 when the edge is on the boundary.
    edge_tags : (ne,) int array
        INTERIOR, DIRICHLET or NEUMANN.
    """

    def __init__(self, vertices, tri_vertices, tri_edges, tri_parents,
                 edges, edge_tris, edge_tags, validate=True):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.tri_vertices = np.ascontiguousarray(tri_vertices, dtype=np.int64)
        self.tri_edges = np.ascontiguousarray(tri_edges, dtype=np.int64)
        self.tri_parents = np.ascontiguousarray(tri_parents, dtype=np.int64)
        self.edges = np.ascontiguousarray(edges, dtype=np.int64)
        self.edge_tris = np.ascontiguousarray(edge_tris, dtype=np.int64)
        self.edge_tags = np.ascontiguousarray(edge_tags, dtype=np.int64)
        for arr in (self.vertices, self.tri_vertices, self.tri_edges,
                    self.tri_parents, self.edges, self.edge_tris, self.edge_tags):
            arr.flags.writeable = False
        if validate:
            self._validate()

    # -- construction -----------------------------------------------------

    @classmethod
    def from_triangles(cls, vertices, tri_vertices, tri_parents=None,
                       boundary_tags=None, validate=True):
        """Build a mesh from vertex coordinates and triangle connectivity.

        ``boundary_tags`` maps ascending boundary vertex pairs to a tag;
        missing boundary edges default to DIRICHLET.
        """
        vertices = np.asarray(vertices, dtype=float)
        tri_vertices = np.asarray(tri_vertices, dtype=np.int64)
        nt = tri_vertices.shape[0]
        if tri_parents is None:
            tri_parents = np.full(nt, -1, dtype=np.int64)

        edges, tri_edges, edge_tris = _build_edges(tri_vertices)
        tags = np.zeros(len(edges), dtype=np.int64)
        on_boundary = edge_tris[:, 1] < 0
        if boundary_tags is None:
            tags[on_boundary] = DIRICHLET
        else:
            for e in np.nonzero(on_boundary)[0]:
                key = (int(edges[e, 0]), int(edges[e, 1]))
                tags[e] = boundary_tags.get(key, DIRICHLET)
        return cls(vertices, tri_vertices, tri_edges, tri_parents,
                   edges, edge_tris, tags, validate=validate)

    # -- counts ------------------------------------------------------------

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_edges(self):
        return self.edges.shape[0]

    @property
    def num_triangles(self):
        return self.tri_vertices.shape[0]

    def __repr__(self):
        return (f"Mesh({self.num_vertices} vertices, {self.num_edges} edges, "
                f"{self.num_triangles} triangles)")

    # -- cached geometry ----------------------------------------------------

    @cached_property
    def tri_areas(self):
        p = self.vertices[self.tri_vertices]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def h_tri(self):
        """Diameter of each triangle (its longest edge)."""
        return self.edge_lengths[self.tri_edges].max(axis=1)

    @cached_property
    def affine_maps(self):
        """(B, origin, det B) of the maps F(xh) = origin + B xh from the reference triangle."""
        p = self.vertices[self.tri_vertices]
        B = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
        det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
        return B, p[:, 0].copy(), det

    @cached_property
    def inv_maps(self):
        """(B^{-1}, B^{-T}) for every triangle."""
        B, _, det = self.affine_maps
        inv = np.empty_like(B)
        inv[:, 0, 0] = B[:, 1, 1]
        inv[:, 0, 1] = -B[:, 0, 1]
        inv[:, 1, 0] = -B[:, 1, 0]
        inv[:, 1, 1] = B[:, 0, 0]
        inv /= det[:, None, None]
        return inv, np.swapaxes(inv, 1, 2).copy()

    @cached_property
    def edge_sides(self):
        """(ne, 2, 2) array of (triangle, local slot) pairs per edge, -1 padded."""
        sides = np.full((self.num_edges, 2, 2), -1, dtype=np.int64)
        count = np.zeros(self.num_edges, dtype=np.int64)
        for t in range(self.num_triangles):
            for j in range(3):
                e = self.tri_edges[t, j]
                sides[e, count[e]] = (t, j)
                count[e] += 1
        return sides

    @cached_property
    def boundary_vertices(self):
        mask = np.zeros(self.num_vertices, dtype=bool)
        mask[self.edges[self.edge_tags != INTERIOR].ravel()] = True
        return mask

    # -- queries -------------------------------------------------------------

    def tri_local_edge_flipped(self):
        """(nt, 3) bool: local edge direction opposes the ascending global one."""
        a = self.tri_vertices
        b = np.roll(self.tri_vertices, -1, axis=1)
        return a > b

    def min_angle(self):
        p = self.vertices[self.tri_vertices]
        angles = []
        for i in range(3):
            u = p[:, (i + 1) % 3] - p[:, i]
            v = p[:, (i + 2) % 3] - p[:, i]
            cosang = (u * v).sum(axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            angles.append(np.arccos(np.clip(cosang, -1.0, 1.0)))
        return float(np.min(angles))

    # -- invariants -----------------------------------------------------------

    def _validate(self):
        if np.any(self.tri_areas <= 0.0):
            bad = int(np.argmin(self.tri_areas))
            raise MeshError(f"triangle {bad} is not counter-clockwise (area {self.tri_areas[bad]:g})")
        if np.any(self.edges[:, 0] >= self.edges[:, 1]):
            raise MeshError("edge vertex ids must be strictly ascending")
        counts = (self.edge_tris >= 0).sum(axis=1)
        if np.any((counts < 1) | (counts > 2)):
            raise MeshError("every edge must have one or two adjacent triangles")
        boundary = counts == 1
        if np.any(boundary != (self.edge_tags != INTERIOR)):
            raise MeshError("edge is boundary-tagged iff it has exactly one adjacent triangle")
        v, e, t = self.num_vertices, self.num_edges, self.num_triangles
        if v - e + t != 1:
            raise MeshError(f"Euler relation violated: V-E+T = {v}-{e}+{t} = {v - e + t}")
        # conformity: stored edge of every local pair is that exact vertex pair
        for j, (a, b) in enumerate(_LOCAL_EDGES):
            pair = np.sort(self.tri_vertices[:, [a, b]], axis=1)
            if not np.array_equal(pair, self.edges[self.tri_edges[:, j]]):
                raise MeshError("triangle-edge incidence is inconsistent (hanging vertex?)")


def _build_edges(tri_vertices):
    nt = tri_vertices.shape[0]
    raw = np.empty((3 * nt, 2), dtype=np.int64)
    for j, (a, b) in enumerate(_LOCAL_EDGES):
        raw[j * nt:(j + 1) * nt] = np.sort(tri_vertices[:, [a, b]], axis=1)
    edges, inverse = np.unique(raw, axis=0, return_inverse=True)
    tri_edges = inverse.reshape(3, nt).T.copy()
    edge_tris = np.full((len(edges), 2), -1, dtype=np.int64)
    count = np.zeros(len(edges), dtype=np.int64)
    # per-triangle fill keeps side order deterministic
    for t in range(nt):
        for j in range(3):
            e = tri_edges[t, j]
            if count[e] > 1:
                raise MeshError(f"edge {e} is shared by more than two triangles")
            edge_tris[e, count[e]] = t
            count[e] += 1
    return edges, tri_edges, edge_tris


def _orient_ccw(vertices, tri):
    p0, p1, p2 = (vertices[v] for v in tri)
    area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
    if area2 < 0.0:
        return (tri[0], tri[2], tri[1])
    return tuple(tri)


def _longest_edge_first(vertices, tri):
    """Cyclically rotate a CCW triangle so edge (v0, v1) is its longest edge."""
    best, best_len = 0, -1.0
    for j, (a, b) in enumerate(_LOCAL_EDGES):
        d = vertices[tri[b]] - vertices[tri[a]]
        ln = float(np.hypot(d[0], d[1]))
        if ln > best_len + 1e-14 * max(best_len, 1.0):
            best, best_len = j, ln
    return tuple(np.roll(tri, -best))


def _structured_triangles(vertices, cells, parities):
    """Split each quad cell (a, b, c, d) along one diagonal, CCW, labeled.

    The diagonal direction alternates with the cell parity (a union-jack
    pattern), which keeps the mesh invariant under the quarter-turn symmetry
    of the square for even N; a fixed direction would split the double
    eigenvalues of the square spectrum.
    """
    tris = []
    for (a, b, c, d), parity in zip(cells, parities):
        split = ((a, b, c), (a, c, d)) if parity == 0 else ((a, b, d), (b, c, d))
        for tri in split:
            tri = _orient_ccw(vertices, tri)
            tris.append(_longest_edge_first(vertices, tri))
    return np.array(tris, dtype=np.int64)


def build_square_mesh(N, domain=BI_UNIT_SQUARE):
    """Structured N x N grid of squares, each split along one diagonal.

    ``domain`` selects (0,1)^2 (``UNIT_SQUARE``) or (-1,1)^2
    (``BI_UNIT_SQUARE``).  All boundary edges are tagged Dirichlet.
    """
    _check_resolution(N)
    if domain == UNIT_SQUARE:
        lo, hi = 0.0, 1.0
    elif domain == BI_UNIT_SQUARE:
        lo, hi = -1.0, 1.0
    else:
        raise ConfigurationError(f"unknown square domain {domain!r}")
    coords = np.linspace(lo, hi, N + 1)
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return j * (N + 1) + i

    cells = [(vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
             for j in range(N) for i in range(N)]
    parities = [(i + j) % 2 for j in range(N) for i in range(N)]
    tris = _structured_triangles(vertices, cells, parities)
    return Mesh.from_triangles(vertices, tris)


def build_lshape_mesh(N):
    """L-shaped domain (-1,1)^2 minus (-1,0)x(-1,0), 6 N^2 triangles."""
    _check_resolution(N)
    n = 2 * N
    coords = np.linspace(-1.0, 1.0, n + 1)
    keep = np.full((n + 1) * (n + 1), -1, dtype=np.int64)
    vertices = []

    def raw(i, j):
        return j * (n + 1) + i

    cells = []
    parities = []
    for j in range(n):
        for i in range(n):
            cx = (coords[i] + coords[i + 1]) / 2.0
            cy = (coords[j] + coords[j + 1]) / 2.0
            if cx < 0.0 and cy < 0.0:
                continue
            cells.append((raw(i, j), raw(i + 1, j), raw(i + 1, j + 1), raw(i, j + 1)))
            parities.append((i + j) % 2)
    for cell in cells:
        for v in cell:
            if keep[v] < 0:
                keep[v] = len(vertices)
                vertices.append((coords[v % (n + 1)], coords[v // (n + 1)]))
    vertices = np.array(vertices)
    cells = [tuple(keep[v] for v in cell) for cell in cells]
    tris = _structured_triangles(vertices, cells, parities)
    return Mesh.from_triangles(vertices, tris)


def build_circle_mesh(N):
    """Polygonal unit disk from N concentric rings; exactly 6 N^2 triangles.

    Ring i carries 6i vertices at radius i/N; boundary vertices therefore lie
    exactly on the unit circle.
    """
    _check_resolution(N)
    vertices = [(0.0, 0.0)]
    ring_start = [0]
    for i in range(1, N + 1):
        ring_start.append(len(vertices))
        r = i / N
        angles = 2.0 * np.pi * np.arange(6 * i) / (6 * i)
        vertices.extend(zip(r * np.cos(angles), r * np.sin(angles)))
    vertices = np.array(vertices)

    def outer_id(i, k):
        return ring_start[i] + (k % (6 * i))

    tris = []
    for i in range(1, N + 1):
        for s in range(6):
            for j in range(i):
                o0 = outer_id(i, s * i + j)
                o1 = outer_id(i, s * i + j + 1)
                if i == 1:
                    tris.append((o0, o1, 0))
                    continue
                i0 = outer_id(i - 1, s * (i - 1) + j)
                tris.append((o0, o1, i0))
                if j < i - 1:
                    i1 = outer_id(i - 1, s * (i - 1) + j + 1)
                    tris.append((o1, i1, i0))
    tris = [_longest_edge_first(vertices, _orient_ccw(vertices, t)) for t in tris]
    return Mesh.from_triangles(vertices, np.array(tris, dtype=np.int64))


def _check_resolution(N):
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ConfigurationError(f"mesh resolution must be a positive integer, got {N!r}")


def retag_boundary(mesh, tagger):
    """Return a mesh with boundary tags replaced by ``tagger(midpoint) -> tag``."""
    tags = mesh.edge_tags.copy()
    for e in np.nonzero(mesh.edge_tags != INTERIOR)[0]:
        mid = mesh.vertices[mesh.edges[e]].mean(axis=0)
        tag = int(tagger(mid))
        if tag not in (DIRICHLET, NEUMANN):
            raise ConfigurationError(f"boundary tag must be DIRICHLET or NEUMANN, got {tag}")
        tags[e] = tag
    return Mesh(mesh.vertices, mesh.tri_vertices, mesh.tri_edges, mesh.tri_parents,
                mesh.edges, mesh.edge_tris, tags)


def tag_bottom_fixed(mesh, tol=1e-12):
    """Tag edges on y = 0 Dirichlet and every other boundary edge Neumann."""
    ymin = mesh.vertices[:, 1].min()

    def tagger(mid):
        return DIRICHLET if abs(mid[1] - ymin) <= tol else NEUMANN

    return retag_boundary(mesh, tagger)


# -- refinement ---------------------------------------------------------------


def refine(mesh, marked):
    """Conforming newest-vertex bisection of all ``marked`` triangles.

    Every marked triangle is bisected at least once; additional bisections
    propagate until no hanging vertex remains.  Boundary tags are inherited
    by the halves of split boundary edges.
    """
    marked = np.asarray(sorted(set(int(t) for t in marked)), dtype=np.int64)
    if marked.size and (marked.min() < 0 or marked.max() >= mesh.num_triangles):
        raise MeshError("marked set contains an invalid triangle id")
    if marked.size == 0:
        return mesh

    ref_edge = mesh.tri_edges[:, 0]
    edge_marked = np.zeros(mesh.num_edges, dtype=bool)
    edge_marked[ref_edge[marked]] = True
    # closure: a triangle with any marked edge must also have its bisection
    # edge marked, otherwise its subdivision would leave a hanging vertex
    while True:
        need = edge_marked[mesh.tri_edges].any(axis=1) & ~edge_marked[ref_edge]
        if not need.any():
            break
        edge_marked[ref_edge[need]] = True

    vertices = [tuple(p) for p in mesh.vertices]
    midpoint = {}
    for e in np.nonzero(edge_marked)[0]:
        a, b = mesh.edges[e]
        midpoint[e] = len(vertices)
        vertices.append(tuple((mesh.vertices[a] + mesh.vertices[b]) / 2.0))

    # tag inheritance for boundary edges (possibly cut in half)
    tag_map = {}
    for e in np.nonzero(mesh.edge_tags != INTERIOR)[0]:
        a, b = (int(v) for v in mesh.edges[e])
        tag = int(mesh.edge_tags[e])
        if edge_marked[e]:
            m = midpoint[e]
            tag_map[_key(a, m)] = tag
            tag_map[_key(m, b)] = tag
        else:
            tag_map[_key(a, b)] = tag

    new_tris = []
    new_parents = []

    def emit(tri, parent):
        new_tris.append(tri)
        new_parents.append(parent)

    def bisect(tri, edge_ids, parent):
        # tri = (v0, v1, v2) CCW with bisection edge (v0, v1); children keep
        # the new vertex last so their own bisection edge comes first
        v0, v1, v2 = tri
        e01, e12, e20 = edge_ids
        m = midpoint[e01]
        left = (v2, v0, m)
        right = (v1, v2, m)
        if e20 is not None and edge_marked[e20]:
            m2 = midpoint[e20]
            emit((m, v2, m2), parent)
            emit((v0, m, m2), parent)
        else:
            emit(left, parent)
        if e12 is not None and edge_marked[e12]:
            m2 = midpoint[e12]
            emit((m, v1, m2), parent)
            emit((v2, m, m2), parent)
        else:
            emit(right, parent)

    for t in range(mesh.num_triangles):
        tri = tuple(int(v) for v in mesh.tri_vertices[t])
        eids = tuple(int(e) for e in mesh.tri_edges[t])
        if edge_marked[eids[0]]:
            bisect(tri, eids, t)
        else:
            emit(tri, t)

    new_vertices = np.array(vertices)
    new_tris = np.array(new_tris, dtype=np.int64)
    return Mesh.from_triangles(new_vertices, new_tris,
                               tri_parents=np.array(new_parents, dtype=np.int64),
                               boundary_tags=tag_map)


def _key(a, b):
    return (a, b) if a < b else (b, a)


def uniform_refine(mesh):
    """Bisect every triangle (marks the whole mesh)."""
    return refine(mesh, range(mesh.num_triangles))


# -- patches -------------------------------------------------------------------


def patches(mesh):
    """Map every vertex and edge to its patch of adjacent triangles."""
    areas = mesh.tri_areas
    vertex_members = [[] for _ in range(mesh.num_vertices)]
    for t in range(mesh.num_triangles):
        for v in mesh.tri_vertices[t]:
            vertex_members[v].append(t)
    out = {}
    for v, members in enumerate(vertex_members):
        out[("vertex", v)] = Patch(("vertex", v), tuple(members),
                                   float(areas[list(members)].sum()))
    for e in range(mesh.num_edges):
        members = tuple(int(t) for t in mesh.edge_tris[e] if t >= 0)
        out[("edge", e)] = Patch(("edge", e), members,
                                 float(areas[list(members)].sum()))
    return out


# -- text format ----------------------------------------------------------------


def write_mesh(mesh, path):
    """Write the plain-text mesh format (counts header, then entity lines)."""
    try:
        with open(path, "w") as fp:
            fp.write(f"{mesh.num_vertices} {mesh.num_edges} {mesh.num_triangles}\n")
            for x, y in mesh.vertices:
                fp.write(f"{x:.17g} {y:.17g}\n")
            for (a, b), tag in zip(mesh.edges, mesh.edge_tags):
                fp.write(f"{a} {b} {tag}\n")
            for verts, eids in zip(mesh.tri_vertices, mesh.tri_edges):
                fp.write(" ".join(str(v) for v in (*verts, *eids)) + "\n")
    except OSError as exc:
        raise IOFailureError(f"cannot write mesh to {path}: {exc}") from exc


def read_mesh(path):
    """Read the plain-text mesh format written by :func:`write_mesh`."""
    try:
        with open(path) as fp:
            tokens = fp.read().split()
    except OSError as exc:
        raise IOFailureError(f"cannot read mesh from {path}: {exc}") from exc
    it = iter(tokens)
    try:
        nv, ne, nt = (int(next(it)) for _ in range(3))
        vertices = np.array([[float(next(it)) for _ in range(2)] for _ in range(nv)])
        edata = np.array([[int(next(it)) for _ in range(3)] for _ in range(ne)], dtype=np.int64)
        tdata = np.array([[int(next(it)) for _ in range(6)] for _ in range(nt)], dtype=np.int64)
    except (StopIteration, ValueError) as exc:
        raise IOFailureError(f"malformed mesh file {path}") from exc
    edges = edata[:, :2]
    tags = edata[:, 2]
    tri_vertices = tdata[:, :3]
    tri_edges = tdata[:, 3:]
    edge_tris = np.full((ne, 2), -1, dtype=np.int64)
    count = np.zeros(ne, dtype=np.int64)
    for t in range(nt):
        for e in tri_edges[t]:
            edge_tris[e, count[e]] = t
            count[e] += 1
    return Mesh(vertices, tri_vertices, tri_edges, np.full(nt, -1, dtype=np.int64),
                edges, edge_tris, tags)
