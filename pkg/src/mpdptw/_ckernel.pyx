# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel: chromosome decoding, repair and evaluation.

Same contract and floating-point operation order as ``_pykernel``.
"""

import math

from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

BACKEND = "cython"

cdef double INF = float("inf")


cdef class Kernel:
    cdef int n, K, width
    cdef double* dist
    cdef double* e
    cdef double* l
    cdef double* s
    cdef long* q
    cdef int* partner
    cdef double* speed
    cdef double* unit_cost
    cdef double* capacity
    cdef int* pref
    cdef int* pref_len
    cdef int* closed
    cdef int* buf
    cdef int* blen
    cdef int* scratch
    cdef int* stamp_member
    cdef int* stamp_emitted
    cdef int* deferred
    cdef int* owner
    cdef int* moves
    cdef int stamp
    cdef readonly double w1, w2
    cdef readonly int n_vehicles
    cdef readonly list prefixes

    def __cinit__(self):
        self.dist = NULL

    def __init__(self, dist, e, l, s, q, partner, speed, unit_cost, capacity, w1, w2, prefixes=None):
        cdef int i, j, k, n = len(e), K = len(capacity)
        self.n = n
        self.K = K
        self.n_vehicles = K
        self.w1 = float(w1)
        self.w2 = float(w2)
        if prefixes is None:
            prefixes = [[0] for _ in range(K)]
        if len(prefixes) != K:
            raise ValueError("one prefix per vehicle required")
        self.prefixes = [list(p) for p in prefixes]
        self.width = n + 2 + max(len(p) for p in self.prefixes)
        self.dist = <double*> malloc(n * n * sizeof(double))
        self.e = <double*> malloc(n * sizeof(double))
        self.l = <double*> malloc(n * sizeof(double))
        self.s = <double*> malloc(n * sizeof(double))
        self.q = <long*> malloc(n * sizeof(long))
        self.partner = <int*> malloc(n * sizeof(int))
        self.speed = <double*> malloc(K * sizeof(double))
        self.unit_cost = <double*> malloc(K * sizeof(double))
        self.capacity = <double*> malloc(K * sizeof(double))
        self.pref = <int*> malloc(K * self.width * sizeof(int))
        self.pref_len = <int*> malloc(K * sizeof(int))
        self.closed = <int*> malloc(K * sizeof(int))
        self.buf = <int*> malloc(K * self.width * sizeof(int))
        self.blen = <int*> malloc(K * sizeof(int))
        self.scratch = <int*> malloc(self.width * sizeof(int))
        self.stamp_member = <int*> malloc(n * sizeof(int))
        self.stamp_emitted = <int*> malloc(n * sizeof(int))
        self.deferred = <int*> malloc(n * sizeof(int))
        self.owner = <int*> malloc(n * sizeof(int))
        self.moves = <int*> malloc((n + 1) * sizeof(int))
        if (self.dist == NULL or self.e == NULL or self.l == NULL or self.s == NULL or self.q == NULL
                or self.partner == NULL or self.speed == NULL or self.unit_cost == NULL
                or self.capacity == NULL or self.pref == NULL or self.pref_len == NULL
                or self.closed == NULL or self.buf == NULL or self.blen == NULL or self.scratch == NULL
                or self.stamp_member == NULL or self.stamp_emitted == NULL or self.deferred == NULL
                or self.owner == NULL or self.moves == NULL):
            raise MemoryError()
        for i in range(n):
            row = dist[i]
            for j in range(n):
                self.dist[i * n + j] = row[j]
            self.e[i] = e[i]
            self.l[i] = l[i]
            self.s[i] = s[i]
            self.q[i] = q[i]
            self.partner[i] = partner[i]
            self.stamp_member[i] = 0
            self.stamp_emitted[i] = 0
            self.deferred[i] = -1
        self.stamp = 0
        for k in range(K):
            self.speed[k] = speed[k]
            self.unit_cost[k] = unit_cost[k]
            self.capacity[k] = capacity[k]
            p = self.prefixes[k]
            self.pref_len[k] = len(p)
            for i in range(len(p)):
                self.pref[k * self.width + i] = p[i]
            self.closed[k] = 1 if (len(p) >= 2 and p[len(p) - 1] == 0) else 0

    def __dealloc__(self):
        free(self.dist); free(self.e); free(self.l); free(self.s); free(self.q)
        free(self.partner); free(self.speed); free(self.unit_cost); free(self.capacity)
        free(self.pref); free(self.pref_len); free(self.closed); free(self.buf); free(self.blen)
        free(self.scratch); free(self.stamp_member); free(self.stamp_emitted); free(self.deferred)
        free(self.owner); free(self.moves)

    # ------------------------------------------------------------------ eval
    cdef void _eval(self, int* r, int length, int k, int ins_pos, int ins_node,
                    double* cost, double* tard, long* peak, long* low) noexcept nogil:
        # evaluates r with ins_node placed before r[ins_pos] when ins_pos >= 0
        cdef double t = 0.0, total = 0.0, tt = 0.0, d, a, ej, late
        cdef double sp = self.speed[k]
        cdef long y = 0, pk = 0, lw = 0
        cdef int n = self.n, idx, prev, j, m, total_len
        total_len = length + (1 if ins_pos >= 0 else 0)
        prev = r[0]
        for m in range(1, total_len):
            if ins_pos < 0 or m < ins_pos:
                j = r[m]
            elif m == ins_pos:
                j = ins_node
            else:
                j = r[m - 1]
            d = self.dist[prev * n + j]
            total = total + d
            a = t + d / sp
            ej = self.e[j]
            t = (a if a > ej else ej) + self.s[j]
            if j != 0:
                late = t - self.l[j]
                if late > 0.0:
                    tt = tt + late
            y = y + self.q[j]
            if y > pk:
                pk = y
            if y < lw:
                lw = y
            prev = j
        cost[0] = self.unit_cost[k] * total
        tard[0] = tt
        peak[0] = pk
        low[0] = lw

    def route_eval(self, route, int k):
        cdef int length = len(route), i
        if length > self.width:
            raise ValueError("route too long")
        for i in range(length):
            self.scratch[i] = route[i]
        cdef double c, t
        cdef long pk, lw
        self._eval(self.scratch, length, k, -1, 0, &c, &t, &pk, &lw)
        return c, t, pk, lw

    def route_fitness(self, route, int k):
        c, t, _, _ = self.route_eval(route, k)
        return self.w1 * c + self.w2 * t

    def evaluate(self, routes):
        costs = []
        tards = []
        for k, r in enumerate(routes):
            c, t, _, _ = self.route_eval(r, k)
            costs.append(c)
            tards.append(t)
        return math.fsum(costs), math.fsum(tards)

    cdef tuple _evaluate_buf(self):
        cdef int k
        cdef double c, t
        cdef long pk, lw
        costs = []
        tards = []
        for k in range(self.K):
            self._eval(self.buf + k * self.width, self.blen[k], k, -1, 0, &c, &t, &pk, &lw)
            costs.append(c)
            tards.append(t)
        return math.fsum(costs), math.fsum(tards)

    # ---------------------------------------------------------------- buffers
    cdef int _load_routes(self, routes) except -1:
        cdef int k, i, length
        if len(routes) != self.K:
            raise ValueError("one route per vehicle required")
        for k in range(self.K):
            r = routes[k]
            length = len(r)
            if length > self.width:
                raise ValueError("route too long")
            for i in range(length):
                self.buf[k * self.width + i] = r[i]
            self.blen[k] = length
        return 0

    cdef list _dump_routes(self):
        cdef int k, i
        out = []
        for k in range(self.K):
            out.append([self.buf[k * self.width + i] for i in range(self.blen[k])])
        return out

    cdef tuple _dump_tuple(self):
        cdef int k, i
        out = []
        for k in range(self.K):
            out.append(tuple([self.buf[k * self.width + i] for i in range(self.blen[k])]))
        return tuple(out)

    cdef tuple _dump_encoded(self, double f1, double f2):
        cdef int k, i, w = self.width, plen, blen
        cdef int* r
        routes = []
        perm = []
        splits = []
        for k in range(self.K):
            r = self.buf + k * w
            blen = self.blen[k]
            routes.append(tuple([r[i] for i in range(blen)]))
            if self.closed[k]:
                splits.append(0)
                continue
            plen = self.pref_len[k]
            for i in range(plen, blen - 1):
                perm.append(r[i])
            splits.append(blen - 1 - plen)
        return tuple(routes), f1, f2, tuple(perm), tuple(splits)

    cdef int _decode(self, perm, splits) except -1:
        cdef int k, i, cnt, pos = 0, w = self.width, plen, nperm = len(perm)
        cdef int* r
        if len(splits) != self.K:
            raise ValueError(f"expected {self.K} split counts, got {len(splits)}")
        for k in range(self.K):
            cnt = splits[k]
            if cnt < 0:
                raise ValueError("negative split count")
            if pos + cnt > nperm:
                raise ValueError("split counts do not cover the permutation")
            r = self.buf + k * w
            plen = self.pref_len[k]
            memcpy(r, self.pref + k * w, plen * sizeof(int))
            if self.closed[k]:
                if cnt:
                    raise ValueError(f"vehicle {k} is closed but received {cnt} genes")
                self.blen[k] = plen
                continue
            if plen + cnt + 1 > w:
                raise ValueError("route too long")
            for i in range(cnt):
                r[plen + i] = perm[pos + i]
            pos += cnt
            r[plen + cnt] = 0
            self.blen[k] = plen + cnt + 1
        if pos != nperm:
            raise ValueError("split counts do not cover the permutation")
        return 0

    # ----------------------------------------------------------------- repair
    cdef void _fix_precedence(self) noexcept nogil:
        cdef int k, i, m, nd, p, c, head, end, out_len
        cdef int w = self.width
        cdef int* r
        if self.stamp > 2000000000:
            for i in range(self.n):
                self.stamp_member[i] = 0
                self.stamp_emitted[i] = 0
            self.stamp = 0
        for k in range(self.K):
            if self.closed[k]:
                continue
            r = self.buf + k * w
            head = self.pref_len[k]
            end = self.blen[k] - 1
            self.stamp += 1
            for i in range(head, end):
                self.stamp_member[r[i]] = self.stamp
            out_len = 0
            for i in range(head, end):
                nd = r[i]
                p = self.partner[nd]
                if (self.q[nd] < 0 and p >= 0 and self.stamp_member[p] == self.stamp
                        and self.stamp_emitted[p] != self.stamp):
                    self.deferred[p] = nd
                    continue
                self.scratch[out_len] = nd
                out_len += 1
                self.stamp_emitted[nd] = self.stamp
                if self.deferred[nd] >= 0:
                    c = self.deferred[nd]
                    self.deferred[nd] = -1
                    self.scratch[out_len] = c
                    out_len += 1
                    self.stamp_emitted[c] = self.stamp
            for m in range(out_len):
                r[head + m] = self.scratch[m]

    cdef int _best_slot(self, int* r, int length, int nd, int first, int k) noexcept nogil:
        cdef int j, best_j = -1
        cdef double best_f = INF, f, c, t
        cdef long pk, lw
        for j in range(first, length):
            self._eval(r, length, k, j, nd, &c, &t, &pk, &lw)
            f = self.w1 * c + self.w2 * t
            if f < best_f:
                best_f = f
                best_j = j
        return best_j

    cdef int _fix_pairing(self) noexcept nogil:
        cdef int k, i, nd, n_moves = 0, m, c, src, host, w = self.width, idx, first, j, length
        cdef int* r
        cdef int* hr
        for i in range(self.n):
            self.owner[i] = -1
        for k in range(self.K):
            r = self.buf + k * w
            for i in range(1, self.blen[k] - 1):
                self.owner[r[i]] = k
        for k in range(self.K):
            if self.closed[k]:
                continue
            r = self.buf + k * w
            for i in range(self.pref_len[k], self.blen[k] - 1):
                nd = r[i]
                if self.q[nd] < 0 and self.owner[self.partner[nd]] != -1 and self.owner[self.partner[nd]] != k:
                    self.moves[n_moves] = nd
                    n_moves += 1
        for m in range(n_moves):
            c = self.moves[m]
            src = self.owner[c]
            host = self.owner[self.partner[c]]
            if self.closed[host]:
                return -1
            r = self.buf + src * w
            length = self.blen[src]
            idx = 0
            while r[idx] != c:
                idx += 1
            for i in range(idx, length - 1):
                r[i] = r[i + 1]
            self.blen[src] = length - 1
            hr = self.buf + host * w
            length = self.blen[host]
            idx = 0
            while hr[idx] != self.partner[c]:
                idx += 1
            first = idx + 1
            if first < self.pref_len[host]:
                first = self.pref_len[host]
            j = self._best_slot(hr, length, c, first, host)
            for i in range(length, j, -1):
                hr[i] = hr[i - 1]
            hr[j] = c
            self.blen[host] = length + 1
            self.owner[c] = host
        return 0

    cdef void _loads(self, int* r, int length, long* peak, long* low, long* before_last) noexcept nogil:
        cdef long y = 0, pk, lw
        cdef int i
        for i in range(length):
            y += self.q[r[i]]
            if i == 0:
                pk = y
                lw = y
            else:
                if y > pk:
                    pk = y
                if y < lw:
                    lw = y
            if i == length - 2:
                before_last[0] = y
        peak[0] = pk
        low[0] = lw

    cdef int _remove(self, int k, int nd) noexcept nogil:
        cdef int* r = self.buf + k * self.width
        cdef int length = self.blen[k], idx = 0, i
        while r[idx] != nd:
            idx += 1
        for i in range(idx, length - 1):
            r[i] = r[i + 1]
        self.blen[k] = length - 1
        return 0

    cdef int _fix_capacity(self) noexcept nogil:
        cdef int k, h, i, bad, p, d, host, w = self.width, hl
        cdef long y, need, pk, lw, bl
        cdef double res, best_res
        cdef int* r
        cdef int* hr
        for k in range(self.K):
            while True:
                r = self.buf + k * w
                y = 0
                bad = -1
                for i in range(self.blen[k]):
                    y += self.q[r[i]]
                    if y > self.capacity[k] or y < 0:
                        bad = i
                        break
                if bad < 0:
                    break
                p = r[bad]
                if bad < self.pref_len[k] or self.closed[k] or self.q[p] <= 0:
                    return -1
                need = self.q[p]
                host = -1
                best_res = -INF
                for h in range(self.K):
                    if h == k or self.closed[h]:
                        continue
                    bl = 0
                    self._loads(self.buf + h * w, self.blen[h], &pk, &lw, &bl)
                    if lw < 0 or pk > self.capacity[h] or bl + need > self.capacity[h]:
                        continue
                    res = self.capacity[h] - pk
                    if res > best_res:
                        best_res = res
                        host = h
                if host < 0:
                    return -1
                d = self.partner[p]
                self._remove(k, p)
                self._remove(k, d)
                hr = self.buf + host * w
                hl = self.blen[host]
                hr[hl - 1] = p
                hr[hl] = d
                hr[hl + 1] = 0
                self.blen[host] = hl + 2
        return 0

    cdef int _repair(self) noexcept nogil:
        self._fix_precedence()
        if self._fix_pairing() < 0:
            return -1
        return self._fix_capacity()

    def repair(self, routes):
        self._load_routes(routes)
        if self._repair() < 0:
            return None
        return self._dump_routes()

    def process(self, perm, splits):
        """Decode, repair and evaluate.

        Returns ``(routes, f1, f2, perm, splits)`` with perm/splits re-encoding the
        repaired routes, or ``None`` when capacity cannot be restored.
        """
        self._decode(perm, splits)
        if self._repair() < 0:
            return None
        f1, f2 = self._evaluate_buf()
        return self._dump_encoded(f1, f2)
