"""Pure-Python kernel: chromosome decoding, repair and evaluation.

Mirrors ``_ckernel.pyx`` operation for operation so both backends return
bit-identical floats. Routes are lists of node ids bracketed by the depot.
``prefixes[k]`` is the frozen head of vehicle k's route (at least ``[0]``); a
prefix that already ends back at the depot closes the vehicle.
"""

import math

BACKEND = "python"


class Kernel:
    def __init__(self, dist, e, l, s, q, partner, speed, unit_cost, capacity, w1, w2, prefixes=None):
        self.dist = [list(row) for row in dist]
        self.e = list(e)
        self.l = list(l)
        self.s = list(s)
        self.q = list(q)
        self.partner = list(partner)
        self.speed = list(speed)
        self.unit_cost = list(unit_cost)
        self.capacity = list(capacity)
        self.w1 = float(w1)
        self.w2 = float(w2)
        self.n_vehicles = len(self.capacity)
        if prefixes is None:
            prefixes = [[0] for _ in range(self.n_vehicles)]
        if len(prefixes) != self.n_vehicles:
            raise ValueError("one prefix per vehicle required")
        self.prefixes = [list(p) for p in prefixes]
        self.closed = [len(p) >= 2 and p[-1] == 0 for p in self.prefixes]

    # -- evaluation -------------------------------------------------------
    def route_eval(self, route, k):
        """(cost, tardiness, peak load, lowest load) of one route."""
        dist, e, l, s, q = self.dist, self.e, self.l, self.s, self.q
        speed = self.speed[k]
        t = 0.0
        y = 0
        peak = 0
        low = 0
        length = 0.0
        tard = 0.0
        prev = route[0]
        for idx in range(1, len(route)):
            j = route[idx]
            d = dist[prev][j]
            length += d
            a = t + d / speed
            ej = e[j]
            t = (a if a > ej else ej) + s[j]
            if j != 0:
                late = t - l[j]
                if late > 0.0:
                    tard += late
            y += q[j]
            if y > peak:
                peak = y
            if y < low:
                low = y
            prev = j
        return self.unit_cost[k] * length, tard, peak, low

    def evaluate(self, routes):
        costs = []
        tards = []
        for k, r in enumerate(routes):
            c, t, _, _ = self.route_eval(r, k)
            costs.append(c)
            tards.append(t)
        return math.fsum(costs), math.fsum(tards)

    def route_fitness(self, route, k):
        c, t, _, _ = self.route_eval(route, k)
        return self.w1 * c + self.w2 * t

    # -- decoding ---------------------------------------------------------
    def decode(self, perm, splits):
        if len(splits) != self.n_vehicles:
            raise ValueError(f"expected {self.n_vehicles} split counts, got {len(splits)}")
        routes = []
        pos = 0
        for k in range(self.n_vehicles):
            n = splits[k]
            if n < 0:
                raise ValueError("negative split count")
            block = list(perm[pos:pos + n])
            pos += n
            if self.closed[k]:
                if n:
                    raise ValueError(f"vehicle {k} is closed but received {n} genes")
                routes.append(list(self.prefixes[k]))
            else:
                routes.append(self.prefixes[k] + block + [0])
        if pos != len(perm):
            raise ValueError("split counts do not cover the permutation")
        return routes

    def encode(self, routes):
        perm = []
        splits = []
        for k, r in enumerate(routes):
            if self.closed[k]:
                splits.append(0)
                continue
            head = len(self.prefixes[k])
            perm.extend(r[head:-1])
            splits.append(len(r) - 1 - head)
        return perm, splits

    # -- repair stages ------------------------------------------------------
    def fix_precedence(self, routes):
        q, partner = self.q, self.partner
        for k, r in enumerate(routes):
            if self.closed[k]:
                continue
            head = len(self.prefixes[k])
            suffix = r[head:-1]
            members = set(suffix)
            emitted = set()
            deferred = {}
            out = []
            for n in suffix:
                p = partner[n]
                if q[n] < 0 and p in members and p not in emitted:
                    deferred[p] = n
                    continue
                out.append(n)
                emitted.add(n)
                c = deferred.pop(n, None)
                if c is not None:
                    out.append(c)
                    emitted.add(c)
            routes[k] = r[:head] + out + [0]
        return routes

    def best_slot(self, route, node, first, k):
        """Insert position in ``route`` (index the node will occupy) minimising route fitness."""
        best_j = -1
        best_f = math.inf
        for j in range(first, len(route)):
            cand = route[:j] + [node] + route[j:]
            f = self.route_fitness(cand, k)
            if f < best_f:
                best_f = f
                best_j = j
        return best_j

    def fix_pairing(self, routes):
        q, partner = self.q, self.partner
        owner = {}
        for k, r in enumerate(routes):
            for n in r[1:-1]:
                owner[n] = k
        moves = []
        for k, r in enumerate(routes):
            if self.closed[k]:
                continue
            for n in r[len(self.prefixes[k]):-1]:
                if q[n] < 0 and owner.get(partner[n], k) != k:
                    moves.append(n)
        for c in moves:
            src = owner[c]
            host = owner[partner[c]]
            if self.closed[host]:
                return None
            routes[src].remove(c)
            r = routes[host]
            first = max(r.index(partner[c]) + 1, len(self.prefixes[host]))
            j = self.best_slot(r, c, first, host)
            r.insert(j, c)
            owner[c] = host
        return routes

    def _loads(self, route):
        q = self.q
        y = 0
        out = []
        for n in route:
            y += q[n]
            out.append(y)
        return out

    def fix_capacity(self, routes):
        q, partner, cap = self.q, self.partner, self.capacity
        for k in range(self.n_vehicles):
            while True:
                r = routes[k]
                loads = self._loads(r)
                bad = -1
                for idx, y in enumerate(loads):
                    if y > cap[k] or y < 0:
                        bad = idx
                        break
                if bad < 0:
                    break
                p = r[bad]
                if bad < len(self.prefixes[k]) or self.closed[k] or q[p] <= 0:
                    return None
                need = q[p]
                host = -1
                best_res = -math.inf
                for h in range(self.n_vehicles):
                    if h == k or self.closed[h]:
                        continue
                    hl = self._loads(routes[h])
                    peak = max(hl)
                    if min(hl) < 0 or peak > cap[h] or hl[-2] + need > cap[h]:
                        continue
                    res = cap[h] - peak
                    if res > best_res:
                        best_res = res
                        host = h
                if host < 0:
                    return None
                d = partner[p]
                r.remove(p)
                r.remove(d)
                hr = routes[host]
                hr[-1:] = [p, d, 0]
        return routes

    def repair(self, routes):
        routes = self.fix_precedence(routes)
        routes = self.fix_pairing(routes)
        if routes is None:
            return None
        return self.fix_capacity(routes)

    # -- full pipeline --------------------------------------------------------
    def process(self, perm, splits):
        """Decode, repair and evaluate.

        Returns ``(routes, f1, f2, perm, splits)`` with perm/splits re-encoding the
        repaired routes, or ``None`` when capacity cannot be restored.
        """
        routes = self.repair(self.decode(perm, splits))
        if routes is None:
            return None
        f1, f2 = self.evaluate(routes)
        new_perm, new_splits = self.encode(routes)
        return tuple(tuple(r) for r in routes), f1, f2, tuple(new_perm), tuple(new_splits)
