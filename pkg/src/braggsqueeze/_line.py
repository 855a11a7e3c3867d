"""Sliding-window storage for a field on the domain plus its two exterior lines.

Outside ``[0, n_z)`` the fibre is modelled as semi-infinite kappa=0 lines on
which ``a`` drifts right and ``b`` drifts left unchanged.  A step's one-cell
shift then never copies data: each row lives in a fixed buffer and the
domain is a window that slides one cell per step (left over the ``a``
buffer, right over the ``b`` buffer).  Cells pushed out of the domain stay in
the buffer as exterior values, and cells entering it are whatever the buffer
holds there (zero unless an exterior was loaded).  The backward solve slides
the window the other way, which is exactly the transpose of the shift.
"""
from __future__ import annotations

import numpy as np


class ExtendedLine:
    """Real-row storage (Re a, Im a, Re b, Im b) covering steps ``m_lo..m_hi``.

    ``pad`` extra cells on each side hold exterior values that never enter
    the domain within the step range.
    """

    def __init__(self, n: int, m_lo: int, m_hi: int, m: int | None = None, pad: int = 0):
        if m_hi < m_lo:
            raise ValueError("m_hi < m_lo")
        self.n = n
        self.m_lo = m_lo
        self.m_hi = m_hi
        size = n + (m_hi - m_lo) + 2 * pad
        self.a = np.zeros((2, size))
        self.b = np.zeros((2, size))
        self._a0 = m_hi + pad
        self._b0 = pad - m_lo
        self.m = m_lo if m is None else m
        self._check()

    def _check(self):
        if not self.m_lo <= self.m <= self.m_hi:
            raise IndexError(f"step {self.m} outside storage range [{self.m_lo}, {self.m_hi}]")

    @property
    def ia(self) -> int:
        return self._a0 - self.m

    @property
    def ib(self) -> int:
        return self._b0 + self.m

    def rows(self, lo: int = 0, hi: int | None = None):
        """Domain views ``[lo, hi)`` at the current step, as four 1-D rows."""
        hi = self.n if hi is None else hi
        ia, ib = self.ia, self.ib
        return (self.a[0, ia + lo:ia + hi], self.a[1, ia + lo:ia + hi],
                self.b[0, ib + lo:ib + hi], self.b[1, ib + lo:ib + hi])

    def advance(self):
        self.m += 1
        self._check()

    def retreat(self):
        self.m -= 1
        self._check()

    def set_domain(self, y: np.ndarray):
        r = self.rows()
        for k in range(4):
            r[k][:] = y[k]

    def domain(self) -> np.ndarray:
        return np.stack(self.rows())

    # exterior values as complex arrays, nearest cell first

    def a_left(self) -> np.ndarray:
        ia = self.ia
        return (self.a[0, :ia] + 1j * self.a[1, :ia])[::-1]

    def a_right(self) -> np.ndarray:
        s = self.ia + self.n
        return self.a[0, s:] + 1j * self.a[1, s:]

    def b_left(self) -> np.ndarray:
        ib = self.ib
        return (self.b[0, :ib] + 1j * self.b[1, :ib])[::-1]

    def b_right(self) -> np.ndarray:
        s = self.ib + self.n
        return self.b[0, s:] + 1j * self.b[1, s:]

    def load_exterior(self, a_left=(), a_right=(), b_left=(), b_right=()):
        """Place nearest-first exterior values around the current window."""
        for buf, start, vals, sign in ((self.a, self.ia, a_left, -1), (self.a, self.ia + self.n, a_right, 1),
                                       (self.b, self.ib, b_left, -1), (self.b, self.ib + self.n, b_right, 1)):
            vals = np.asarray(vals, dtype=complex)
            k = vals.shape[0]
            if k == 0:
                continue
            if sign < 0:
                if k > start:
                    raise ValueError("exterior longer than storage padding")
                buf[0, start - k:start] = vals.real[::-1]
                buf[1, start - k:start] = vals.imag[::-1]
            else:
                if start + k > buf.shape[1]:
                    raise ValueError("exterior longer than storage padding")
                buf[0, start:start + k] = vals.real
                buf[1, start:start + k] = vals.imag
