"""Activity-based bound tightening for binary variables."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class Propagator:
    """Tightens binary bounds using row activity limits.

    All rows are rewritten as ``a x <= b`` (``>`` rows negated, ``=`` rows
    split in two) once, so each round is a handful of vectorised passes over
    the nonzeros.
    """

    def __init__(self, A: sp.csr_matrix, sense, rhs, binary, tol: float = 1e-9):
        A = sp.csr_matrix(A)
        sense = np.asarray(sense)
        blocks, rhss = [], []
        for s, sign in (("<", 1.0), (">", -1.0), ("=", 1.0), ("=", -1.0)):
            sel = np.flatnonzero(sense == s)
            if sel.size:
                blocks.append(sign * A[sel])
                rhss.append(sign * np.asarray(rhs)[sel])
        if blocks:
            L = sp.vstack(blocks).tocoo()
            self.b = np.concatenate(rhss)
        else:
            L = sp.coo_matrix((0, A.shape[1]))
            self.b = np.zeros(0)
        self.row, self.col, self.val = L.row, L.col, L.data
        self.n_rows = L.shape[0]
        self.binary = np.asarray(binary, dtype=bool)
        self.on_binary = self.binary[self.col]
        self.tol = tol

    def run(self, lb: np.ndarray, ub: np.ndarray, max_rounds: int = 20) -> bool:
        """Tighten ``lb``/``ub`` in place.  Returns False if infeasibility is detected."""
        r, j, a = self.row, self.col, self.val
        pos = a > 0
        for _ in range(max_rounds):
            lo = np.where(pos, a * lb[j], a * ub[j])  # minimal contribution
            inf = ~np.isfinite(lo)
            fin = np.where(inf, 0.0, lo)
            act = np.bincount(r, weights=fin, minlength=self.n_rows)
            ninf = np.bincount(r, weights=inf.astype(float), minlength=self.n_rows)
            if np.any((ninf == 0) & (act > self.b + self.tol * np.maximum(1.0, np.abs(self.b)))):
                return False
            # minimal activity of the rest of the row
            rest_ok = np.where(inf, ninf[r] == 1, ninf[r] == 0)
            rest = act[r] - fin
            cand = self.on_binary & rest_ok
            if not cand.any():
                return True
            limit = (self.b[r[cand]] - rest[cand]) / a[cand]
            jc, pc = j[cand], pos[cand]
            new_ub = np.floor(limit[pc] + 1e-7)
            new_lb = np.ceil(limit[~pc] - 1e-7)
            old_l, old_u = lb.copy(), ub.copy()
            np.minimum.at(ub, jc[pc], new_ub)
            np.maximum.at(lb, jc[~pc], new_lb)
            if np.any(lb > ub):
                return False
            if np.array_equal(old_l, lb) and np.array_equal(old_u, ub):
                return True
        return True
