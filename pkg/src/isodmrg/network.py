"""Isometric tensor network states on a 2D open-boundary grid.

An ``IsoTNS`` holds an ``lx x ly`` grid of tensors encoding a state of
``(lx + 2) * ly`` spin-1/2 sites.  Interior grid columns carry one physical
leg per tensor; the leftmost and rightmost grid columns carry two (the edge
tensors also represent the dangling boundary spins), so physical sites live
on an ``(lx + 2) x ly`` lattice.  Physical site ``(row, col)`` maps to qubit
``row * (lx + 2) + col``.

Every tensor except one is an isometry from its incoming virtual legs to the
rest of its legs.  The remaining tensor, the orthogonality center, is an
arbitrary vector over all of its legs; the norm of the encoded state equals
the Frobenius norm of the center tensor.  Horizontal arrows point away from
the center column, vertical arrows point away from the center row inside the
center column and downward elsewhere.

Axis convention for every site tensor: physical legs first (in grid-column
order), then ``U``, ``D``, ``L``, ``R`` for whichever virtual legs exist at
that site.  All bond dimensions are powers of two.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import GuardError
from .tensors import contract, split_svd

_MAGIC = b"ISOT"
_VERSION = 1

_VIRTUAL_ORDER = ("U", "D", "L", "R")


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _ceil_pow2(n: int) -> int:
    if n <= 1:
        return 1
    return 1 << (n - 1).bit_length()


def phys_columns(lx: int, x: int) -> tuple[int, ...]:
    """Physical lattice columns represented by grid column x, in order."""
    if lx == 1:
        return (0, 1, 2)
    if x == 0:
        return (0, 1)
    if x == lx - 1:
        return (x + 1, x + 2)
    return (x + 1,)


def site_legs(lx: int, ly: int, x: int, y: int) -> tuple[str, ...]:
    """Canonical leg names at grid site (x, y), in axis order."""
    legs = [f"P{i}" for i in range(len(phys_columns(lx, x)))]
    if y > 0:
        legs.append("U")
    if y < ly - 1:
        legs.append("D")
    if x > 0:
        legs.append("L")
    if x < lx - 1:
        legs.append("R")
    return tuple(legs)


def input_legs(lx: int, ly: int, x: int, y: int, center: tuple[int, int]) -> tuple[str, ...]:
    """Incoming virtual legs at site (x, y) for the given center position."""
    cx, cy = center
    present = set(site_legs(lx, ly, x, y))
    if (x, y) == (cx, cy):
        return ()
    if x < cx:
        want = ("U", "R")
    elif x > cx:
        want = ("U", "L")
    elif y < cy:
        want = ("D",)
    else:
        want = ("U",)
    return tuple(l for l in want if l in present)


@dataclass
class MoveReport:
    """Outcome of a center move: exact shifts report fidelity one."""

    kind: str
    fidelity: float
    truncation_weight: float
    bond_dims: dict = field(default_factory=dict)


class IsoTNS:
    """Grid of isometric tensors with a movable orthogonality center."""

    def __init__(self, lx: int, ly: int, d: int, tensors, center: tuple[int, int]):
        if lx < 1 or ly < 1:
            raise ValueError("grid dimensions must be positive")
        if not _is_pow2(d):
            raise ValueError(f"bond dimension must be a power of two, got {d}")
        cx, cy = center
        if not (0 <= cx < lx and 0 <= cy < ly):
            raise ValueError(f"center {center} outside {lx}x{ly} grid")
        self.lx = lx
        self.ly = ly
        self.d = d
        self.center = (cx, cy)
        self.tensors = [[np.asarray(tensors[x][y], dtype=np.complex128) for y in range(ly)] for x in range(lx)]
        self._check_structure()

    # ----------------------------------------------------------------- layout

    def legs(self, x: int, y: int) -> tuple[str, ...]:
        return site_legs(self.lx, self.ly, x, y)

    def axis(self, x: int, y: int, leg: str) -> int:
        legs = self.legs(x, y)
        if leg not in legs:
            raise ValueError(f"site ({x},{y}) has no leg {leg!r}")
        return legs.index(leg)

    def leg_dim(self, x: int, y: int, leg: str) -> int:
        return self.tensors[x][y].shape[self.axis(x, y, leg)]

    def input_legs_at(self, x: int, y: int) -> tuple[str, ...]:
        return input_legs(self.lx, self.ly, x, y, self.center)

    @property
    def n_phys_qubits(self) -> int:
        return (self.lx + 2) * self.ly

    def qubit_index(self, x: int, y: int, slot: int) -> int:
        """Qubit number of physical slot ``slot`` of grid site (x, y)."""
        col = phys_columns(self.lx, x)[slot]
        return y * (self.lx + 2) + col

    def iter_sites_causal(self):
        """All sites in a topological order: center first, arrows respected."""
        cx, cy = self.center
        yield (cx, cy)
        for y in range(cy + 1, self.ly):
            yield (cx, y)
        for y in range(cy - 1, -1, -1):
            yield (cx, y)
        for x in range(cx + 1, self.lx):
            for y in range(self.ly):
                yield (x, y)
        for x in range(cx - 1, -1, -1):
            for y in range(self.ly):
                yield (x, y)

    # ---------------------------------------------------- center bookkeeping

    def center_tensor(self) -> np.ndarray:
        cx, cy = self.center
        return self.tensors[cx][cy]

    def center_vector(self) -> np.ndarray:
        return self.center_tensor().reshape(-1).copy()

    def set_center_vector(self, v: np.ndarray) -> None:
        cx, cy = self.center
        shape = self.tensors[cx][cy].shape
        v = np.asarray(v, dtype=np.complex128).reshape(-1)
        if v.size != int(np.prod(shape)):
            raise ValueError(f"center vector has size {v.size}, expected {int(np.prod(shape))}")
        self.tensors[cx][cy] = v.reshape(shape)

    def center_leg_dims(self) -> list[tuple[str, int]]:
        cx, cy = self.center
        t = self.tensors[cx][cy]
        return [(leg, t.shape[i]) for i, leg in enumerate(self.legs(cx, cy))]

    def norm(self) -> float:
        return float(np.linalg.norm(self.center_tensor()))

    def copy(self) -> "IsoTNS":
        return IsoTNS(
            self.lx,
            self.ly,
            self.d,
            [[t.copy() for t in col] for col in self.tensors],
            self.center,
        )

    # ------------------------------------------------------------ validation

    def _check_structure(self) -> None:
        for x in range(self.lx):
            for y in range(self.ly):
                t = self.tensors[x][y]
                legs = self.legs(x, y)
                if t.ndim != len(legs):
                    raise ValueError(f"site ({x},{y}) has {t.ndim} axes, expected legs {legs}")
                for i, leg in enumerate(legs):
                    dim = t.shape[i]
                    if leg.startswith("P") and dim != 2:
                        raise ValueError(f"site ({x},{y}) leg {leg} has dim {dim}, expected 2")
                    if not _is_pow2(dim):
                        raise ValueError(f"site ({x},{y}) leg {leg} has non-power-of-two dim {dim}")
        for x in range(self.lx):
            for y in range(self.ly):
                if x + 1 < self.lx:
                    a = self.leg_dim(x, y, "R")
                    b = self.leg_dim(x + 1, y, "L")
                    if a != b:
                        raise ValueError(f"horizontal bond ({x},{y})-({x + 1},{y}) mismatched: {a} vs {b}")
                if y + 1 < self.ly:
                    a = self.leg_dim(x, y, "D")
                    b = self.leg_dim(x, y + 1, "U")
                    if a != b:
                        raise ValueError(f"vertical bond ({x},{y})-({x},{y + 1}) mismatched: {a} vs {b}")

    def isometry_defect(self, x: int, y: int) -> float:
        """Max-abs deviation of W^dag W from identity over the input legs."""
        t = self.tensors[x][y]
        legs = self.legs(x, y)
        ins = self.input_legs_at(x, y)
        in_axes = [legs.index(l) for l in ins]
        out_axes = [i for i in range(len(legs)) if i not in in_axes]
        perm = out_axes + in_axes
        d_out = int(np.prod([t.shape[i] for i in out_axes], dtype=np.int64))
        d_in = int(np.prod([t.shape[i] for i in in_axes], dtype=np.int64))
        m = t.transpose(perm).reshape(d_out, d_in)
        g = m.conj().T @ m
        return float(np.max(np.abs(g - np.eye(d_in))))

    def validate(self, tol: float = 1e-8) -> None:
        """Check structure and isometry conditions; raise ValueError on failure."""
        self._check_structure()
        for x in range(self.lx):
            for y in range(self.ly):
                if (x, y) == self.center:
                    continue
                defect = self.isometry_defect(x, y)
                if defect > tol:
                    raise ValueError(f"site ({x},{y}) isometry defect {defect:.3e} exceeds {tol:.1e}")
        if not np.isfinite(self.norm()):
            raise ValueError("center tensor has non-finite norm")

    # ---------------------------------------------------------- constructors

    @classmethod
    def random(cls, lx: int, ly: int, d: int, seed: int) -> "IsoTNS":
        """Haar-style random isometric network with center at (0, 0)."""
        center = (0, 0)
        dims = _initial_bond_dims(lx, ly, d, center)
        rng = np.random.default_rng(seed)
        tensors = [[None] * ly for _ in range(lx)]
        for y in range(ly):
            for x in range(lx):
                legs = site_legs(lx, ly, x, y)
                ldims = [2 if l.startswith("P") else dims[_bond_key(x, y, l)] for l in legs]
                if (x, y) == center:
                    v = rng.normal(size=int(np.prod(ldims))) + 1j * rng.normal(size=int(np.prod(ldims)))
                    v /= np.linalg.norm(v)
                    tensors[x][y] = v.reshape(ldims)
                    continue
                ins = input_legs(lx, ly, x, y, center)
                outs = [l for l in legs if l not in ins]
                d_out = int(np.prod([ldims[legs.index(l)] for l in outs], dtype=np.int64))
                d_in = int(np.prod([ldims[legs.index(l)] for l in ins], dtype=np.int64))
                m = rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in))
                q, _ = np.linalg.qr(m)
                arr = q.reshape([ldims[legs.index(l)] for l in outs] + [ldims[legs.index(l)] for l in ins])
                order = [legs.index(l) for l in list(outs) + list(ins)]
                tensors[x][y] = np.moveaxis(arr, range(len(legs)), order)
        return cls(lx, ly, d, tensors, center)

    @classmethod
    def product_state(cls, lx: int, ly: int) -> "IsoTNS":
        """All-spins-up product state: every bond has dimension one."""
        tensors = [[None] * ly for _ in range(lx)]
        for x in range(lx):
            for y in range(ly):
                legs = site_legs(lx, ly, x, y)
                shape = [2 if l.startswith("P") else 1 for l in legs]
                t = np.zeros(shape, dtype=np.complex128)
                t[(0,) * len(shape)] = 1.0
                tensors[x][y] = t
        return cls(lx, ly, 1, tensors, (0, 0))

    # --------------------------------------------------------- center shifts

    def shift_center(self, direction: str) -> MoveReport:
        """Move the center one row up or down within its column, exactly."""
        report = self._shift(direction, max_rank=None)
        return report

    def _shift(self, direction: str, max_rank: int | None) -> MoveReport:
        if direction not in ("up", "down"):
            raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")
        cx, cy = self.center
        step = 1 if direction == "down" else -1
        ny = cy + step
        if not (0 <= ny < self.ly):
            raise ValueError(f"cannot shift {direction} from row {cy} in a height-{self.ly} column")
        out_leg = "D" if direction == "down" else "U"
        in_leg = "U" if direction == "down" else "D"

        t = self.tensors[cx][cy]
        legs = self.legs(cx, cy)
        keep_axes = [i for i, l in enumerate(legs) if l != out_leg]
        u, s, v, disc = split_svd(t, keep_axes, max_rank=max_rank)
        k = s.size
        new_here = np.moveaxis(u, -1, legs.index(out_leg))
        self.tensors[cx][cy] = new_here

        carrier = s[:, None] * v
        nb = self.tensors[cx][ny]
        nb_legs = self.legs(cx, ny)
        merged = contract(carrier, nb, [(1, nb_legs.index(in_leg))])
        self.tensors[cx][ny] = np.moveaxis(merged, 0, nb_legs.index(in_leg))
        self.center = (cx, ny)
        return MoveReport(
            kind=f"shift-{direction}",
            fidelity=1.0 if max_rank is None else float("nan"),
            truncation_weight=float(disc),
            bond_dims={"new_bond": k},
        )

    def move_center_to_row(self, row: int) -> list[MoveReport]:
        if not (0 <= row < self.ly):
            raise ValueError(f"row {row} outside column of height {self.ly}")
        reports = []
        while self.center[1] != row:
            reports.append(self.shift_center("down" if self.center[1] < row else "up"))
        return reports

    # ------------------------------------------------------------ moses move

    def moses_move(self, direction: str, rank_cap: int | None = None) -> MoveReport:
        """Move the center one column over by unzipping the center column.

        The center column is split into an isometric column that stays put
        and a zero-phys connector column that is absorbed into the neighbor,
        which becomes the new center column (center at its top row).  The
        split truncates: with default caps every new bond is at most ``d``
        and the new center column verticals are recompressed to ``d``.
        Passing ``rank_cap`` instead caps every new bond at that value and
        skips the recompression; ``rank_cap = d**2`` makes the move exact.

        Requires the center at the top row.  Returns a report whose fidelity
        compares the two affected columns before and after (this equals the
        global state fidelity because all other columns are isometric).
        """
        if direction not in ("left", "right"):
            raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")
        cx, cy = self.center
        if cy != 0:
            raise ValueError(f"moses move requires center at top row, center is at {self.center}")
        nx = cx + 1 if direction == "right" else cx - 1
        if not (0 <= nx < self.lx):
            raise ValueError(f"cannot move {direction} from column {cx} in a width-{self.lx} grid")
        if rank_cap is not None and not _is_pow2(rank_cap):
            raise ValueError(f"rank_cap must be a power of two, got {rank_cap}")

        h_cap = a_cap = v_cap = self.d if rank_cap is None else rank_cap
        col_cap = self.d if rank_cap is None else None
        keep_side = "L" if direction == "right" else "R"
        pass_side = "R" if direction == "right" else "L"

        lcol_x, rcol_x = (cx, nx) if direction == "right" else (nx, cx)
        old_left = [self.tensors[lcol_x][y].copy() for y in range(self.ly)]
        old_right = [self.tensors[rcol_x][y].copy() for y in range(self.ly)]
        norm_old = self.norm()

        for _ in range(self.ly - 1):
            self._shift("down", max_rank=None)

        truncation_weight = 0.0
        g_tensors = [None] * self.ly
        work = self.tensors[cx][self.ly - 1]
        work_legs = list(self.legs(cx, self.ly - 1))

        for y in range(self.ly - 1, -1, -1):
            legs_here = self.legs(cx, y)
            keep = [l for l in work_legs if l.startswith("P") or l == keep_side]
            if "A" in work_legs:
                keep.append("A")
            right_group = [l for l in work_legs if l not in keep]
            keep_axes = [work_legs.index(l) for l in keep]

            u1, s1, v1, _ = split_svd(work, keep_axes)
            rank1 = s1.size
            cap_a = 1 if y == 0 else a_cap
            keep1 = min(rank1, h_cap * cap_a)
            h_dim = min(h_cap, keep1)
            a_dim = min(cap_a, keep1 // h_dim)
            keep1 = h_dim * a_dim
            truncation_weight += float(np.sum(s1[keep1:] ** 2))
            u1 = u1[..., :keep1]
            carrier = _scale_rows(s1[:keep1], v1[:keep1])

            block = u1.reshape(u1.shape[:-1] + (h_dim, a_dim))
            new_names = keep + [pass_side, "U"]
            if y == 0:
                block = block[..., 0]
                new_names = keep + [pass_side]
            a_tensor = _to_canonical(block, _rename(new_names, {"A": "D"}), legs_here)
            self.tensors[cx][y] = a_tensor

            cshape = (h_dim, a_dim) + carrier.shape[1:]
            c_names = ["h", "a"] + right_group
            c_block = carrier.reshape(cshape)

            if y == 0:
                g_names = ["h", pass_side] + (["vd"] if "v" in right_group else [])
                order = [c_names.index(n) for n in ["h", "a", pass_side] + (["v"] if "v" in right_group else [])]
                g_tensors[y] = {"names": g_names, "array": c_block.transpose(order)[:, 0]}
            else:
                left2 = ["h", pass_side] + (["v"] if "v" in right_group else [])
                axes2 = [c_names.index(n) for n in left2]
                u2, s2, v2, _ = split_svd(c_block, axes2)
                keep2 = min(s2.size, v_cap)
                truncation_weight += float(np.sum(s2[keep2:] ** 2))
                g_names = ["h", pass_side] + (["vd"] if "v" in left2 else []) + ["vu"]
                g_tensors[y] = {"names": g_names, "array": u2[..., :keep2]}

                # remainder legs: (v up to G_y, a up to A_y, old bond into row y-1)
                rem = _scale_rows(s2[:keep2], v2[:keep2]).reshape((keep2, a_dim, -1))
                above = self.tensors[cx][y - 1]
                above_legs = list(self.legs(cx, y - 1))
                merged = contract(rem, above, [(2, above_legs.index("D"))])
                rest = [l for l in above_legs if l != "D"]
                work = merged
                work_legs = ["v", "A"] + rest

        new_center_col = nx
        self._absorb_connectors(g_tensors, direction, new_center_col, pass_side)
        self.center = (new_center_col, 0)

        if col_cap is not None:
            for _ in range(self.ly - 1):
                rep = self._shift("down", max_rank=col_cap)
                truncation_weight += rep.truncation_weight
            for _ in range(self.ly - 1):
                self._shift("up", max_rank=None)

        new_left = [self.tensors[lcol_x][y] for y in range(self.ly)]
        new_right = [self.tensors[rcol_x][y] for y in range(self.ly)]
        norm_new = self.norm()
        overlap = _column_pair_overlap(
            self.lx, self.ly, lcol_x, rcol_x, new_left, new_right, old_left, old_right
        )
        fidelity = abs(overlap) / (norm_old * norm_new) if norm_old * norm_new > 0 else 0.0
        self._check_structure()
        return MoveReport(
            kind=f"moses-{direction}",
            fidelity=float(fidelity),
            truncation_weight=float(truncation_weight),
            bond_dims={"column": new_center_col},
        )

    def _absorb_connectors(self, g_tensors, direction, nx, pass_side):
        """Contract the connector column into column nx, fusing vertical bonds."""
        nb_side = "L" if direction == "right" else "R"
        for y in range(self.ly):
            g = g_tensors[y]
            g_names = g["names"]
            g_arr = g["array"]
            b = self.tensors[nx][y]
            b_legs = list(self.legs(nx, y))
            merged = contract(g_arr, b, [(g_names.index(pass_side), b_legs.index(nb_side))])
            m_names = [n for n in g_names if n != pass_side] + [l for l in b_legs if l != nb_side]

            new_legs = list(self.legs(nx, y))
            target = []
            for leg in new_legs:
                if leg == nb_side:
                    target.append(("h",))
                elif leg == "U":
                    target.append(("vu", "U") if "vu" in m_names else ("U",))
                elif leg == "D":
                    target.append(("vd", "D") if "vd" in m_names else ("D",))
                else:
                    target.append((leg,))
            flat = [n for group in target for n in group]
            merged = merged.transpose([m_names.index(n) for n in flat])
            shape = []
            i = 0
            for group in target:
                dim = 1
                for _ in group:
                    dim *= merged.shape[i]
                    i += 1
                shape.append(dim)
            self.tensors[nx][y] = merged.reshape(shape)

    # -------------------------------------------------------- full contraction

    def contract_full(self, max_qubits: int = 26) -> np.ndarray:
        """Exact statevector of the encoded state (amplitude array, axis=qubit).

        Guarded: refuses lattices larger than ``max_qubits`` physical sites.
        """
        n = self.n_phys_qubits
        if n > max_qubits:
            raise GuardError(f"contract_full needs {n} qubits, guard allows {max_qubits}")
        state = None
        open_legs: list[tuple] = []

        for (x, y) in self.iter_sites_causal():
            t = self.tensors[x][y]
            legs = self.legs(x, y)
            ins = self.input_legs_at(x, y)
            in_axes = [legs.index(l) for l in ins]
            in_bonds = [_bond_key(x, y, l) for l in ins]
            if state is None:
                state = t
                remaining = [i for i in range(len(legs))]
                open_legs = [_leg_id(self.lx, x, y, legs[i]) for i in remaining]
                continue
            pairs = [(open_legs.index(b), ax) for b, ax in zip(in_bonds, in_axes)]
            state = contract(state, t, pairs)
            kept = [b for i, b in enumerate(open_legs) if i not in [p[0] for p in pairs]]
            new = [_leg_id(self.lx, x, y, legs[i]) for i in range(len(legs)) if i not in in_axes]
            open_legs = kept + new

        qubits = []
        for i, b in enumerate(open_legs):
            if b[0] != "q":
                raise AssertionError(f"non-physical leg {b} left open after contraction")
            qubits.append((b[1], i))
        perm = [axis for _, axis in sorted(qubits)]
        return state.transpose(perm).reshape(-1)

    # ----------------------------------------------------------- persistence

    def save(self, path: str) -> None:
        """Write a self-contained little-endian binary snapshot."""
        with open(path, "wb") as f:
            f.write(_MAGIC)
            f.write(struct.pack("<6I", _VERSION, self.lx, self.ly, self.d, *self.center))
            for y in range(self.ly):
                for x in range(self.lx):
                    t = np.ascontiguousarray(self.tensors[x][y], dtype="<c16")
                    f.write(struct.pack("<I", t.ndim))
                    f.write(struct.pack(f"<{t.ndim}I", *t.shape))
                    f.write(t.tobytes())

    @classmethod
    def load(cls, path: str) -> "IsoTNS":
        with open(path, "rb") as f:
            magic = f.read(4)
            if magic != _MAGIC:
                raise ValueError(f"not an isoTNS file (magic {magic!r})")
            version, lx, ly, d, cx, cy = struct.unpack("<6I", f.read(24))
            if version != _VERSION:
                raise ValueError(f"unsupported format version {version}")
            tensors = [[None] * ly for _ in range(lx)]
            for y in range(ly):
                for x in range(lx):
                    (ndim,) = struct.unpack("<I", f.read(4))
                    shape = struct.unpack(f"<{ndim}I", f.read(4 * ndim))
                    count = int(np.prod(shape, dtype=np.int64))
                    buf = f.read(16 * count)
                    tensors[x][y] = np.frombuffer(buf, dtype="<c16").reshape(shape).astype(np.complex128)
            trailing = f.read(1)
            if trailing:
                raise ValueError("trailing bytes after tensor blocks")
        return cls(lx, ly, d, tensors, (cx, cy))


# ------------------------------------------------------------------ helpers


def _bond_key(x: int, y: int, leg: str) -> tuple:
    """Grid-unique key of the bond behind a virtual leg at (x, y)."""
    if leg == "L":
        return ("h", x - 1, y)
    if leg == "R":
        return ("h", x, y)
    if leg == "U":
        return ("v", x, y - 1)
    if leg == "D":
        return ("v", x, y)
    raise ValueError(f"not a virtual leg: {leg!r}")


def _leg_id(lx: int, x: int, y: int, leg: str) -> tuple:
    if leg.startswith("P"):
        col = phys_columns(lx, x)[int(leg[1:])]
        return ("q", y * (lx + 2) + col)
    return _bond_key(x, y, leg)


def _rename(names: list[str], mapping: dict) -> list[str]:
    return [mapping.get(n, n) for n in names]


def _scale_rows(s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Multiply axis 0 of v by the singular values s."""
    return s.reshape((-1,) + (1,) * (v.ndim - 1)) * v


def _to_canonical(arr: np.ndarray, names: list[str], target: tuple[str, ...]) -> np.ndarray:
    """Permute axes named ``names`` into the canonical order ``target``."""
    if sorted(names) != sorted(target):
        raise AssertionError(f"leg mismatch: have {names}, want {target}")
    return arr.transpose([names.index(l) for l in target])


def _initial_bond_dims(lx: int, ly: int, d: int, center: tuple[int, int]) -> dict:
    """Feasible power-of-two bond dims, capped at d, for a random network.

    Walks sites in reverse topological order, growing each tensor's input
    bonds round-robin while the product stays within its output budget, so
    every tensor admits an exact isometry.
    """
    probe = IsoTNS.__new__(IsoTNS)
    probe.lx, probe.ly, probe.center = lx, ly, center
    order = list(probe.iter_sites_causal())
    dims: dict = {}
    for (x, y) in reversed(order):
        if (x, y) == center:
            continue
        legs = site_legs(lx, ly, x, y)
        ins = input_legs(lx, ly, x, y, center)
        budget = 1
        for l in legs:
            if l.startswith("P"):
                budget *= 2
            elif l not in ins:
                budget *= dims[_bond_key(x, y, l)]
        grow = {l: 1 for l in ins}
        progressed = True
        while progressed:
            progressed = False
            for l in ins:
                total = int(np.prod(list(grow.values()), dtype=np.int64))
                if grow[l] * 2 <= d and total * 2 <= budget:
                    grow[l] *= 2
                    progressed = True
        for l in ins:
            dims[_bond_key(x, y, l)] = grow[l]
    return dims


def _column_pair_overlap(lx, ly, lcol_x, rcol_x, new_left, new_right, old_left, old_right):
    """<new|old> for the state slice carried by two adjacent columns.

    Contracts the row ladder of the bra pair against the ket pair over all
    open legs (physical plus outward horizontal bonds), carrying the four
    vertical bonds from row to row.
    """

    def row_pair(left_t, right_t, y):
        l_legs = list(site_legs(lx, ly, lcol_x, y))
        r_legs = list(site_legs(lx, ly, rcol_x, y))
        merged = contract(left_t, right_t, [(l_legs.index("R"), r_legs.index("L"))])
        names = [("l", n) for n in l_legs if n != "R"] + [("r", n) for n in r_legs if n != "L"]
        return merged, names

    env = None
    env_names: list = []
    for y in range(ly):
        ket, names = row_pair(old_left[y], old_right[y], y)
        bra, _ = row_pair(new_left[y], new_right[y], y)
        bra = bra.conj()
        open_names = [n for n in names if n[1].startswith("P") or n[1] in ("L", "R")]
        pairs = [(names.index(n), names.index(n)) for n in open_names]
        cross = contract(bra, ket, pairs)
        rest = [n for n in names if n not in open_names]
        cross_names = [("b",) + n for n in rest] + [("k",) + n for n in rest]
        if env is None:
            env = cross
            env_names = cross_names
        else:
            pairs = []
            for i, en in enumerate(env_names):
                side, col, leg = en
                if leg == "D":
                    pairs.append((i, cross_names.index((side, col, "U"))))
            env = contract(env, cross, pairs)
            contracted_env = [p[0] for p in pairs]
            contracted_cross = [p[1] for p in pairs]
            env_names = [n for i, n in enumerate(env_names) if i not in contracted_env] + [
                n for i, n in enumerate(cross_names) if i not in contracted_cross
            ]
        for n in env_names:
            if n[2] == "U":
                raise AssertionError(f"unconsumed upward bond {n}")
    if env_names:
        raise AssertionError(f"legs left after ladder: {env_names}")
    return complex(env)
