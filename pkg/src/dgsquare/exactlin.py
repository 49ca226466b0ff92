"""Exact rational linear algebra over bigraded vector spaces.

Everything in this package reduces to kernels, images and solving of
small dense matrices with Fraction entries.  All pivoting is
deterministic (first nonzero entry in lexicographic order), so every
construction downstream is reproducible bit-for-bit.

A *bidegree* is a pair ``(coh, wt)`` of a cohomological degree and an
internal weight.  Differentials always have shift +1 in ``coh`` and
preserve ``wt``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

Q = Fraction

Bidegree = tuple[int, int]


class StructuralError(Exception):
    """Shapes, rings or windows do not match."""


class WindowError(StructuralError):
    """A computation escaped the tabulated window."""


class NotAComplexError(StructuralError):
    """d compose d is nonzero; carries the offending bidegree."""


class PreconditionError(Exception):
    """An operation was called on data violating its contract."""


class DepthError(PreconditionError):
    """A resolution is not deep enough for the requested range."""


# ---------------------------------------------------------------------------
# dense matrices (lists of rows of Fractions)

Matrix = list  # list[list[Fraction]]
Vector = list  # list[Fraction]


def zeros(nrows: int, ncols: int) -> Matrix:
    return [[Q(0)] * ncols for _ in range(nrows)]


def identity(n: int) -> Matrix:
    m = zeros(n, n)
    for i in range(n):
        m[i][i] = Q(1)
    return m


def mat_copy(m: Matrix) -> Matrix:
    return [row[:] for row in m]


def mat_mul(a: Matrix, b: Matrix, out_cols: Optional[int] = None) -> Matrix:
    """Matrix product; ``out_cols`` disambiguates the width when b has
    zero rows (empty matrices carry no shape of their own)."""
    if not a:
        return []
    na, ka = len(a), len(a[0])
    if ka != len(b):
        raise StructuralError("matrix dimension mismatch in mat_mul")
    nb = len(b[0]) if b else (out_cols if out_cols is not None else 0)
    out = zeros(na, nb)
    for i in range(na):
        arow = a[i]
        orow = out[i]
        for k in range(ka):
            c = arow[k]
            if c:
                brow = b[k]
                for j in range(nb):
                    if brow[j]:
                        orow[j] += c * brow[j]
    return out


def mat_vec(a: Matrix, v: Vector) -> Vector:
    if a and len(a[0]) != len(v):
        raise StructuralError("matrix/vector dimension mismatch")
    return [sum((row[k] * v[k] for k in range(len(v)) if v[k]), Q(0)) for row in a]


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_scale(c: Fraction, a: Matrix) -> Matrix:
    return [[c * x for x in row] for row in a]


def mat_is_zero(a: Matrix) -> bool:
    return all(not x for row in a for x in row)


def hstack(a: Matrix, b: Matrix) -> Matrix:
    if not a:
        return mat_copy(b)
    if not b:
        return mat_copy(a)
    return [ra + rb for ra, rb in zip(a, b)]


def vstack(a: Matrix, b: Matrix) -> Matrix:
    return mat_copy(a) + mat_copy(b)


def columns(a: Matrix, idxs: Iterable[int]) -> Matrix:
    return [[row[j] for j in idxs] for row in a]


def column(a: Matrix, j: int) -> Vector:
    return [row[j] for row in a]


def from_columns(cols: list[Vector], nrows: int) -> Matrix:
    out = zeros(nrows, len(cols))
    for j, c in enumerate(cols):
        for i in range(nrows):
            out[i][j] = c[i]
    return out


def rref(m: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form; returns (rref matrix, pivot column list).

    Pivot choice is the first row with a nonzero entry in the leftmost
    unfinished column, making the result deterministic.
    """
    a = mat_copy(m)
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pr = None
        for i in range(r, nrows):
            if a[i][c]:
                pr = i
                break
        if pr is None:
            continue
        a[r], a[pr] = a[pr], a[r]
        pv = a[r][c]
        if pv != 1:
            a[r] = [x / pv if x else x for x in a[r]]
        ar = a[r]
        nz = [j for j in range(c, ncols) if ar[j]]
        for i in range(nrows):
            if i != r and a[i][c]:
                f = a[i][c]
                ai = a[i]
                for j in nz:
                    ai[j] -= f * ar[j]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return a, pivots


def solve(a: Matrix, b: Vector) -> Optional[Vector]:
    """One deterministic solution of a x = b, or None.

    Free variables are set to zero (RREF particular solution).
    """
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    if len(b) != nrows:
        raise StructuralError("solve: rhs length mismatch")
    aug = [row[:] + [b[i]] for i, row in enumerate(a)]
    if not aug:
        return [Q(0)] * ncols if all(not x for x in b) else ([Q(0)] * ncols)
    r, piv = rref(aug)
    if ncols in piv:
        return None
    x = [Q(0)] * ncols
    for i, c in enumerate(piv):
        x[c] = r[i][ncols]
    return x


def kernel_basis(a: Matrix, ncols: Optional[int] = None) -> list[Vector]:
    """Deterministic basis of the kernel of a (column vectors)."""
    if ncols is None:
        ncols = len(a[0]) if a else 0
    if not a:
        return [unit_vector(ncols, j) for j in range(ncols)]
    r, piv = rref(a)
    free = [j for j in range(ncols) if j not in piv]
    out = []
    for f in free:
        v = [Q(0)] * ncols
        v[f] = Q(1)
        for i, c in enumerate(piv):
            v[c] = -r[i][f]
        out.append(v)
    return out


def unit_vector(n: int, j: int) -> Vector:
    v = [Q(0)] * n
    v[j] = Q(1)
    return v


def column_pivots(a: Matrix) -> list[int]:
    """Indices of a deterministic maximal independent set of columns."""
    _, piv = rref(a)
    return piv


def in_span(span_cols: Matrix, v: Vector) -> Optional[Vector]:
    """Coordinates of v in the column span, or None."""
    return solve(span_cols, v)


def extend_to_basis(span: Matrix, cands: list[Vector], nrows: int) -> list[Vector]:
    """Greedy left-to-right selection of candidates independent of ``span``.

    Equivalent to testing each candidate with :func:`in_span` against the
    growing span, but done with a single elimination.
    """
    ns = len(span[0]) if span else 0
    piv = column_pivots(hstack(span, from_columns(cands, nrows)))
    return [cands[p - ns] for p in piv if p >= ns]


def rank(a: Matrix) -> int:
    return len(column_pivots(a))


def invert(a: Matrix) -> Matrix:
    n = len(a)
    aug = hstack(a, identity(n))
    r, piv = rref(aug)
    if piv != list(range(n)):
        raise StructuralError("matrix not invertible")
    return [row[n:] for row in r]


# ---------------------------------------------------------------------------
# bigraded spaces and maps


@dataclass
class BigradedSpace:
    """Finite bigraded vector space with labelled bases.

    ``labels[bd]`` is the ordered basis at bidegree ``bd``; bidegrees
    not present have dimension zero.
    """

    labels: dict[Bidegree, tuple] = field(default_factory=dict)

    def dim(self, bd: Bidegree) -> int:
        return len(self.labels.get(bd, ()))

    def bidegrees(self) -> list[Bidegree]:
        return sorted(bd for bd, ls in self.labels.items() if ls)

    def total_dim(self) -> int:
        return sum(len(ls) for ls in self.labels.values())

    def index(self, bd: Bidegree, label) -> int:
        return self.labels[bd].index(label)


class BigradedMap:
    """Blockwise map of bigraded spaces.

    ``shift`` is the cohomological degree of the map, ``wshift`` the
    weight shift (0 for differentials and ring homomorphisms).  The
    block at source bidegree ``(k, w)`` is a matrix into the target at
    ``(k + shift, w + wshift)``; absent blocks are zero.
    """

    def __init__(self, source: BigradedSpace, target: BigradedSpace,
                 shift: int = 0, wshift: int = 0,
                 blocks: Optional[dict[Bidegree, Matrix]] = None):
        self.source = source
        self.target = target
        self.shift = shift
        self.wshift = wshift
        self.blocks: dict[Bidegree, Matrix] = {}
        if blocks:
            for bd, m in blocks.items():
                self.set_block(bd, m)

    def target_bd(self, bd: Bidegree) -> Bidegree:
        return (bd[0] + self.shift, bd[1] + self.wshift)

    def set_block(self, bd: Bidegree, m: Matrix) -> None:
        tb = self.target_bd(bd)
        if len(m) != self.target.dim(tb):
            raise StructuralError(
                f"block at {bd}: {len(m)} rows, target dim {self.target.dim(tb)}")
        if m and len(m[0]) != self.source.dim(bd):
            raise StructuralError(
                f"block at {bd}: {len(m[0])} cols, source dim {self.source.dim(bd)}")
        if not mat_is_zero(m):
            self.blocks[bd] = m

    def block(self, bd: Bidegree) -> Matrix:
        if bd in self.blocks:
            return self.blocks[bd]
        return zeros(self.target.dim(self.target_bd(bd)), self.source.dim(bd))

    def apply(self, vec: dict) -> dict:
        """Apply to a vector given as {(bd, idx): coefficient}."""
        out: dict = {}
        for (bd, i), c in vec.items():
            if not c:
                continue
            blk = self.blocks.get(bd)
            if blk is None:
                continue
            tb = self.target_bd(bd)
            for r in range(len(blk)):
                e = blk[r][i]
                if e:
                    key = (tb, r)
                    out[key] = out.get(key, Q(0)) + c * e
    # prune zeros
        return {k: v for k, v in out.items() if v}

    def compose(self, other: "BigradedMap") -> "BigradedMap":
        """self after other."""
        out = BigradedMap(other.source, self.target,
                          shift=self.shift + other.shift,
                          wshift=self.wshift + other.wshift)
        for bd in other.source.bidegrees():
            mid = other.target_bd(bd)
            m = mat_mul(self.block(mid), other.block(bd), other.source.dim(bd))
            out.set_block(bd, m)
        return out

    def add(self, other: "BigradedMap") -> "BigradedMap":
        if (self.shift, self.wshift) != (other.shift, other.wshift):
            raise StructuralError("shift mismatch in map sum")
        out = BigradedMap(self.source, self.target, self.shift, self.wshift)
        for bd in set(self.blocks) | set(other.blocks):
            out.set_block(bd, mat_add(self.block(bd), other.block(bd)))
        return out

    def sub(self, other: "BigradedMap") -> "BigradedMap":
        return self.add(other.scale(Q(-1)))

    def scale(self, c: Fraction) -> "BigradedMap":
        out = BigradedMap(self.source, self.target, self.shift, self.wshift)
        for bd, m in self.blocks.items():
            out.set_block(bd, mat_scale(c, m))
        return out

    def is_zero(self) -> bool:
        return all(mat_is_zero(m) for m in self.blocks.values())


def solve_with_witness(m: BigradedMap, target_vec: dict) -> Optional[dict]:
    """Preimage of a bigraded vector under m, or None.

    The solution is the deterministic RREF particular solution, solved
    independently per source block.
    """
    # group rhs per target bidegree
    rhs: dict[Bidegree, dict[int, Fraction]] = {}
    for (bd, i), c in target_vec.items():
        if i >= m.target.dim(bd):
            raise StructuralError(f"vector entry outside target at {bd}")
        rhs.setdefault(bd, {})[i] = c
    out: dict = {}
    for tb, entries in rhs.items():
        sb = (tb[0] - m.shift, tb[1] - m.wshift)
        b = [entries.get(i, Q(0)) for i in range(m.target.dim(tb))]
        x = solve(m.block(sb), b)
        if x is None:
            return None
        for j, c in enumerate(x):
            if c:
                out[(sb, j)] = c
    return out


# ---------------------------------------------------------------------------
# complexes, cohomology, contraction


@dataclass
class CohBlock:
    """Cohomology of a complex at a fixed bidegree."""

    dim: int
    reps: list  # cocycle representatives (vectors in the ambient degree)
    _kernel: Matrix  # columns: kernel basis
    _image: Matrix  # columns: image basis

    def reduce(self, cocycle: Vector) -> Optional[Vector]:
        """Coordinates of a cocycle on the chosen cohomology basis.

        Returns None if the vector is not a cocycle modulo the image
        (i.e. not in the kernel at all).
        """
        ncols_img = len(self._image[0]) if self._image else 0
        span = hstack(self._image, from_columns(self.reps, len(cocycle)))
        x = solve(span, cocycle)
        if x is None:
            return None
        return x[ncols_img:]


class Complex:
    """A bounded bigraded cochain complex over the rationals."""

    def __init__(self, space: BigradedSpace, d: BigradedMap,
                 certified: Optional[tuple[int, int]] = None):
        if d.shift != 1 or d.wshift != 0:
            raise StructuralError("differential must have shift (+1, 0)")
        self.space = space
        self.d = d
        degs = [bd[0] for bd in space.bidegrees()] or [0]
        self.certified = certified if certified is not None else (min(degs), max(degs))
        self._coh: dict[Bidegree, CohBlock] = {}
        self._contraction = None

    def dim(self, bd: Bidegree) -> int:
        return self.space.dim(bd)

    def bidegrees(self) -> list[Bidegree]:
        return self.space.bidegrees()

    def check_d2(self) -> None:
        dd = self.d.compose(self.d)
        for bd, m in dd.blocks.items():
            if not mat_is_zero(m):
                raise NotAComplexError(f"d∘d nonzero at bidegree {bd}")

    def d_in(self, bd: Bidegree) -> Matrix:
        return self.d.block((bd[0] - 1, bd[1]))

    def d_out(self, bd: Bidegree) -> Matrix:
        return self.d.block(bd)

    def cohomology(self, bd: Bidegree) -> CohBlock:
        if bd in self._coh:
            return self._coh[bd]
        n = self.dim(bd)
        dout = self.d_out(bd)
        din = self.d_in(bd)
        kern = kernel_basis(dout, n)
        kmat = from_columns(kern, n)
        img_piv = column_pivots(din)
        imat = columns(din, img_piv)
        # extend the image to a basis of the kernel, deterministically
        reps = extend_to_basis(imat, kern, n)
        blk = CohBlock(dim=len(reps), reps=reps, _kernel=kmat, _image=imat)
        self._coh[bd] = blk
        return blk

    def cohomology_dims(self) -> dict[Bidegree, int]:
        out = {}
        for bd in self.bidegrees():
            h = self.cohomology(bd).dim
            if h:
                out[bd] = h
        # degrees where the complex is zero but neighbours are not can
        # still only carry zero cohomology, so this is complete
        return out

    def contraction(self) -> "Contraction":
        if self._contraction is None:
            self._contraction = Contraction(self)
        return self._contraction


def cohomology_at(d_in: BigradedMap, d_out: BigradedMap, k: int) -> dict[int, CohBlock]:
    """Cohomology ker(d_out)/im(d_in) at cohomological degree k, per weight.

    ``d_in`` lands in degree k and ``d_out`` leaves it.  Raises
    NotAComplexError when the composite is nonzero on the inspected
    blocks.
    """
    space = d_out.source
    out: dict[int, CohBlock] = {}
    weights = sorted({bd[1] for bd in space.bidegrees() if bd[0] == k}
                     | {bd[1] for bd in d_in.source.bidegrees() if bd[0] == k - 1})
    for w in weights:
        bd = (k, w)
        din = d_in.block((k - 1, w))
        dout = d_out.block(bd)
        comp = mat_mul(dout, din)
        if not mat_is_zero(comp):
            raise NotAComplexError(f"not a complex at bidegree {bd}")
        n = space.dim(bd)
        kern = kernel_basis(dout, n)
        img_piv = column_pivots(din)
        imat = columns(din, img_piv)
        reps = extend_to_basis(imat, kern, n)
        out[w] = CohBlock(dim=len(reps), reps=reps,
                          _kernel=from_columns(kern, n), _image=imat)
    return out


def coboundary_witness(cx: Complex, phi: dict) -> Optional[dict]:
    """Witness h with d(h) = phi, or None when phi is not a coboundary.

    ``phi`` must be a cocycle ({(bd, idx): coeff}); raises
    PreconditionError otherwise.
    """
    if any(v for v in cx.d.apply(phi).values()):
        raise PreconditionError("coboundary_witness: input is not a cocycle")
    return solve_with_witness(cx.d, phi)


class Contraction:
    """Deterministic splitting C ≃ H(C) ⊕ (contractible).

    Produces per-bidegree data: cohomology representatives ``iota``
    (columns), a projection ``pi`` onto cohomology coordinates, and a
    degree -1 homotopy ``h`` with  id - iota∘pi = d∘h + h∘d.
    """

    def __init__(self, cx: Complex):
        self.cx = cx
        self.iota: dict[Bidegree, Matrix] = {}
        self.pi: dict[Bidegree, Matrix] = {}
        self.h: dict[Bidegree, Matrix] = {}   # block at bd maps C^bd -> C^(bd-1)
        self.hdim: dict[Bidegree, int] = {}
        weights = sorted({bd[1] for bd in cx.bidegrees()})
        for w in weights:
            degs = sorted(bd[0] for bd in cx.bidegrees() if bd[1] == w)
            if not degs:
                continue
            self._build_weight(w, degs[0], degs[-1])

    def _build_weight(self, w: int, klo: int, khi: int) -> None:
        cx = self.cx
        # ascending in degree; B_k comes from d applied to L_{k-1}
        b_cols: Matrix = zeros(cx.dim((klo, w)), 0)
        b_pre: Matrix = zeros(0, 0)  # preimages (in C^{k-1}) of the B_k columns
        for k in range(klo, khi + 2):
            bd = (k, w)
            n = cx.dim(bd)
            dout = cx.d_out(bd)
            kern = kernel_basis(dout, n)
            kmat = from_columns(kern, n)
            # H reps: extend the image columns inside the kernel
            h_cols = extend_to_basis(b_cols, kern, n)
            hmat = from_columns(h_cols, n)
            # L: complement of the kernel among unit vectors
            l_cols = extend_to_basis(kmat, [unit_vector(n, j) for j in range(n)], n)
            lmat = from_columns(l_cols, n)
            basis = hstack(hstack(b_cols, hmat), lmat)
            nb = len(b_cols[0]) if b_cols else 0
            nh = len(h_cols)
            nl = len(l_cols)
            if n:
                inv = invert(basis) if n == nb + nh + nl else None
                if inv is None:
                    raise StructuralError("contraction basis not square")
                self.pi[bd] = inv[nb:nb + nh]
                # h: B-part goes to its preimage, rest to zero
                pre_n = cx.dim((k - 1, w))
                hblk = zeros(pre_n, n)
                for j in range(nb):
                    coords = inv[j]
                    for col in range(n):
                        if coords[col]:
                            for r in range(pre_n):
                                hblk[r][col] += coords[col] * b_pre[r][j]
                self.h[bd] = hblk
            else:
                self.pi[bd] = zeros(0, 0)
                self.h[bd] = zeros(cx.dim((k - 1, w)), 0)
            self.iota[bd] = hmat
            self.hdim[bd] = nh
            # next degree: B_{k+1} = d(L_k), preimages = L columns
            nxt = cx.dim((k + 1, w))
            b_cols = mat_mul(dout, lmat) if nl else zeros(nxt, 0)
            b_pre = lmat

    def h_blocks(self) -> dict[Bidegree, Matrix]:
        return self.h

    def project(self, bd: Bidegree, v: Vector) -> Vector:
        return mat_vec(self.pi.get(bd, zeros(0, len(v))), v)


# ---------------------------------------------------------------------------
# chain maps between complexes


class ChainMap:
    """A degree-0 (or shifted) map of complexes, blockwise."""

    def __init__(self, source: Complex, target: Complex,
                 shift: int = 0, wshift: int = 0,
                 blocks: Optional[dict[Bidegree, Matrix]] = None):
        self.source = source
        self.target = target
        self.map = BigradedMap(source.space, target.space, shift, wshift,
                               blocks or {})

    @property
    def blocks(self):
        return self.map.blocks

    def set_block(self, bd: Bidegree, m: Matrix) -> None:
        self.map.set_block(bd, m)

    def block(self, bd: Bidegree) -> Matrix:
        return self.map.block(bd)

    def apply(self, vec: dict) -> dict:
        return self.map.apply(vec)

    def check_chain(self) -> None:
        lhs = self.target.d.compose(self.map)
        sign = Q(-1) if self.map.shift % 2 else Q(1)
        rhs = self.map.compose(self.source.d).scale(sign)
        if not lhs.sub(rhs).is_zero():
            raise StructuralError("not a chain map")

    def compose(self, other: "ChainMap") -> "ChainMap":
        out = ChainMap(other.source, self.target,
                       self.map.shift + other.map.shift,
                       self.map.wshift + other.map.wshift)
        out.map = self.map.compose(other.map)
        return out

    def add(self, other: "ChainMap") -> "ChainMap":
        out = ChainMap(self.source, self.target, self.map.shift, self.map.wshift)
        out.map = self.map.add(other.map)
        return out

    def sub(self, other: "ChainMap") -> "ChainMap":
        out = ChainMap(self.source, self.target, self.map.shift, self.map.wshift)
        out.map = self.map.sub(other.map)
        return out

    def scale(self, c: Fraction) -> "ChainMap":
        out = ChainMap(self.source, self.target, self.map.shift, self.map.wshift)
        out.map = self.map.scale(c)
        return out

    def is_zero(self) -> bool:
        return self.map.is_zero()

    def induced_on_cohomology(self, bd: Bidegree) -> Matrix:
        """Matrix of H(f) from H(source) at bd to H(target) at the shifted
        bidegree, in the chosen cohomology bases."""
        src = self.source.cohomology(bd)
        tbd = self.map.target_bd(bd)
        tgt = self.target.cohomology(tbd)
        cols = []
        for rep in src.reps:
            img = mat_vec(self.block(bd), rep)
            coords = tgt.reduce(img)
            if coords is None:
                raise StructuralError("image of a cocycle is not a cocycle")
            cols.append(coords)
        return from_columns(cols, tgt.dim)


def identity_chain_map(cx: Complex) -> ChainMap:
    f = ChainMap(cx, cx)
    for bd in cx.bidegrees():
        f.set_block(bd, identity(cx.dim(bd)))
    return f


def is_quasi_iso_chain(f: ChainMap, degrees: tuple[int, int]) -> bool:
    """H(f) bijective at all bidegrees with coh degree inside ``degrees``."""
    lo, hi = degrees
    bds = {bd for bd in f.source.bidegrees() if lo <= bd[0] <= hi}
    bds |= {(bd[0] - f.map.shift, bd[1] - f.map.wshift)
            for bd in f.target.bidegrees() if lo <= bd[0] - f.map.shift <= hi}
    for bd in sorted(bds):
        m = f.induced_on_cohomology(bd)
        hs = f.source.cohomology(bd).dim
        ht = f.target.cohomology(f.map.target_bd(bd)).dim
        if hs != ht:
            return False
        if hs and rank(m) != hs:
            return False
    return True


def nullhomotopy(f: ChainMap) -> Optional[dict[Bidegree, Matrix]]:
    """Homotopy h with d∘h + h∘d = f for a degree-0 chain map, or None.

    Uses the contraction of the source: with id = ιπ + dh_C + h_C d,
    any chain map satisfies f = (fι)π + d(f h_C) + (f h_C) d.  When
    H(f) = 0 each f(ι e) is a coboundary with an explicit witness g,
    and h := gπ + f h_C works.  Returns blocks h[bd]: C^bd -> D^(bd-1).
    """
    if f.map.shift != 0:
        raise PreconditionError("nullhomotopy expects a degree-0 map")
    con = f.source.contraction()
    ws = f.map.wshift
    out: dict[Bidegree, Matrix] = {}
    for bd in f.source.bidegrees():
        n = f.source.dim(bd)
        tbd = (bd[0], bd[1] + ws)
        iota = con.iota.get(bd, zeros(n, 0))
        # witness columns for f(iota e_j)
        g_cols = []
        pre_dim = f.target.dim((tbd[0] - 1, tbd[1]))
        for j in range(len(iota[0]) if iota else 0):
            v = mat_vec(f.block(bd), column(iota, j))
            y = solve(f.target.d_in(tbd), v)
            if y is None:
                return None  # H(f) nonzero here
            g_cols.append(y)
        gmat = from_columns(g_cols, pre_dim)
        term1 = mat_mul(gmat, con.pi.get(bd, zeros(0, n)), n)
        hc = con.h.get(bd, zeros(f.source.dim((bd[0] - 1, bd[1])), n))
        term2 = mat_mul(f.block((bd[0] - 1, bd[1])), hc, n)
        blk = mat_add(term1, term2)
        if not mat_is_zero(blk):
            out[bd] = blk
    return out


def check_homotopy(f: ChainMap, h: dict[Bidegree, Matrix],
                   degrees: Optional[tuple[int, int]] = None) -> bool:
    """Verify d∘h + h∘d = f exactly (optionally on a coh degree range)."""
    ws = f.map.wshift
    for bd in f.source.bidegrees():
        if degrees and not degrees[0] <= bd[0] <= degrees[1]:
            continue
        n = f.source.dim(bd)
        tbd = (bd[0], bd[1] + ws)
        hk = h.get(bd, zeros(f.target.dim((tbd[0] - 1, tbd[1])), n))
        hk1 = h.get((bd[0] + 1, bd[1]),
                    zeros(f.target.dim(tbd), f.source.dim((bd[0] + 1, bd[1]))))
        lhs = mat_add(mat_mul(f.target.d_in(tbd), hk, n),
                      mat_mul(hk1, f.source.d_out(bd), n))
        if lhs != [row[:] for row in f.block(bd)] and not mat_is_zero(
                mat_sub(lhs, f.block(bd))):
            return False
    return True


def homotopy_inverse(f: ChainMap) -> ChainMap:
    """A chain map g with f∘g ≃ id and g∘f ≃ id, for a quasi-isomorphism.

    Built as ι_C ∘ H(f)^{-1} ∘ π_D from the contractions; at bidegrees
    where H(f) is not invertible (possible near window edges) the block
    is set to zero, which only affects uncertified degrees.
    """
    cs = f.source.contraction()
    ct = f.target.contraction()
    g = ChainMap(f.target, f.source, -f.map.shift, -f.map.wshift)
    for bd in f.source.bidegrees():
        tbd = f.map.target_bd(bd)
        iota = cs.iota.get(bd, zeros(f.source.dim(bd), 0))
        pi = ct.pi.get(tbd, zeros(0, f.target.dim(tbd)))
        # an empty matrix hides its column count, so take the dimensions
        # of both cohomologies from the contractions instead
        n_src = len(iota[0]) if iota else 0
        n_tgt = len(pi)
        if n_src != n_tgt or n_src == 0:
            continue
        hf = f.induced_on_cohomology(bd)
        try:
            hf_inv = invert(hf)
        except StructuralError:
            continue
        tn = f.target.dim(tbd)
        blk = mat_mul(iota, mat_mul(hf_inv, pi, tn), tn)
        g.set_block(tbd, blk)
    return g
