"""Flat-array convex polytope kernel for the hot cell-construction path.

A polytope lives in preallocated buffers so the Monte Carlo loop never
touches Python objects:

    verts      (maxv, 3) float64   vertex coordinates, rows [0:nv) valid
    face_vert  (maxf, maxfv) int32 vertex indices of each face cycle
    face_len   (maxf,) int32       cycle length per face, rows [0:nf) valid

Face cycles are counterclockwise seen from outside. Capacities are read
from the buffer shapes; all functions return an error status instead of
raising when a buffer would overflow. Functions hold no global state, so
parallel workers are safe as long as each owns its buffers.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# classification epsilon: a vertex within this distance of a clipping
# plane is treated as lying on it (single rule, keeps the cut cycle
# consistent across adjacent faces)
ON_PLANE_EPS = 1e-12

SQRT3 = math.sqrt(3.0)

# clip statuses
CLIP_NO_CUT = 0
CLIP_CUT = 1
# build statuses
BUILD_NEED_MORE = 0
BUILD_OK = 1
# failures (all negative)
ERR_VERT_OVERFLOW = -1
ERR_FACE_OVERFLOW = -2
ERR_CYCLE_OVERFLOW = -3
ERR_EMPTY = -4
ERR_EULER = -5
ERR_BAD_SITE = -6

# generous for unit-intensity cells (observed face counts stay below 40)
DEFAULT_MAX_FACES = 128
DEFAULT_MAX_VERTS = 2 * DEFAULT_MAX_FACES
DEFAULT_MAX_CYCLE = 64


def alloc_buffers(maxv=DEFAULT_MAX_VERTS, maxf=DEFAULT_MAX_FACES, maxfv=DEFAULT_MAX_CYCLE):
    """Allocate one polytope buffer set (verts, face_vert, face_len)."""
    return (
        np.empty((maxv, 3), np.float64),
        np.empty((maxf, maxfv), np.int32),
        np.zeros(maxf, np.int32),
    )


@njit(cache=True)
def init_cube(half_width, verts, face_vert, face_len):
    """Fill the buffers with the cube [-h, h]^3. Returns (nv, nf)."""
    h = half_width
    verts[0, 0] = -h; verts[0, 1] = -h; verts[0, 2] = -h
    verts[1, 0] = h;  verts[1, 1] = -h; verts[1, 2] = -h
    verts[2, 0] = h;  verts[2, 1] = h;  verts[2, 2] = -h
    verts[3, 0] = -h; verts[3, 1] = h;  verts[3, 2] = -h
    verts[4, 0] = -h; verts[4, 1] = -h; verts[4, 2] = h
    verts[5, 0] = h;  verts[5, 1] = -h; verts[5, 2] = h
    verts[6, 0] = h;  verts[6, 1] = h;  verts[6, 2] = h
    verts[7, 0] = -h; verts[7, 1] = h;  verts[7, 2] = h
    # outward counterclockwise cycles
    face_vert[0, 0] = 0; face_vert[0, 1] = 3; face_vert[0, 2] = 2; face_vert[0, 3] = 1
    face_vert[1, 0] = 4; face_vert[1, 1] = 5; face_vert[1, 2] = 6; face_vert[1, 3] = 7
    face_vert[2, 0] = 1; face_vert[2, 1] = 2; face_vert[2, 2] = 6; face_vert[2, 3] = 5
    face_vert[3, 0] = 0; face_vert[3, 1] = 4; face_vert[3, 2] = 7; face_vert[3, 3] = 3
    face_vert[4, 0] = 0; face_vert[4, 1] = 1; face_vert[4, 2] = 5; face_vert[4, 3] = 4
    face_vert[5, 0] = 3; face_vert[5, 1] = 7; face_vert[5, 2] = 6; face_vert[5, 3] = 2
    for f in range(6):
        face_len[f] = 4
    return 8, 6


@njit(cache=True)
def max_vertex_norm(verts, nv):
    """Largest distance of any vertex from the origin."""
    m = 0.0
    for i in range(nv):
        r = verts[i, 0] ** 2 + verts[i, 1] ** 2 + verts[i, 2] ** 2
        if r > m:
            m = r
    return math.sqrt(m)


@njit(cache=True)
def clip(verts, nv, face_vert, face_len, nf,
         out_verts, out_face_vert, out_face_len,
         nx, ny, nz, offset, on_eps):
    """Clip by the half-space n.y <= offset into the out buffers.

    Returns (out_nv, out_nf, status). With CLIP_NO_CUT the out buffers are
    untouched and the caller keeps the input buffers; with CLIP_CUT the
    result (including the new cut face) is in the out buffers.

    Vertices within on_eps of the plane are classified on-plane and kept
    without duplication; crossing vertices are created once per edge and
    shared by both incident faces.
    """
    maxv = out_verts.shape[0]
    maxf = out_face_vert.shape[0]
    maxfv = out_face_vert.shape[1]

    side = np.empty(nv, np.float64)
    cls = np.empty(nv, np.int8)
    n_outside = 0
    for i in range(nv):
        s = nx * verts[i, 0] + ny * verts[i, 1] + nz * verts[i, 2] - offset
        side[i] = s
        if s > on_eps:
            cls[i] = 1
            n_outside += 1
        elif s < -on_eps:
            cls[i] = -1
        else:
            cls[i] = 0
    if n_outside == 0:
        return nv, nf, CLIP_NO_CUT

    # keep inside and on-plane vertices, compacted
    vmap = np.empty(nv, np.int32)
    out_nv = 0
    for i in range(nv):
        if cls[i] <= 0:
            out_verts[out_nv, 0] = verts[i, 0]
            out_verts[out_nv, 1] = verts[i, 1]
            out_verts[out_nv, 2] = verts[i, 2]
            vmap[i] = out_nv
            out_nv += 1
        else:
            vmap[i] = -1
    if out_nv == 0:
        return 0, 0, ERR_EMPTY

    # crossing vertices, deduplicated per undirected edge
    cr_lo = np.empty(maxv, np.int32)
    cr_hi = np.empty(maxv, np.int32)
    cr_idx = np.empty(maxv, np.int32)
    n_cr = 0

    cycle = np.empty(maxfv + 8, np.int32)
    out_nf = 0
    for f in range(nf):
        m = face_len[f]
        out_len = 0
        ia = face_vert[f, m - 1]
        ca = cls[ia]
        overflow = False
        for j in range(m):
            ib = face_vert[f, j]
            cb = cls[ib]
            if (ca > 0 and cb < 0) or (ca < 0 and cb > 0):
                lo = ia if ia < ib else ib
                hi = ib if ia < ib else ia
                ci = -1
                for t in range(n_cr):
                    if cr_lo[t] == lo and cr_hi[t] == hi:
                        ci = cr_idx[t]
                        break
                if ci < 0:
                    if out_nv >= maxv or n_cr >= maxv:
                        return 0, 0, ERR_VERT_OVERFLOW
                    sa = side[ia]
                    t_ = sa / (sa - side[ib])
                    out_verts[out_nv, 0] = verts[ia, 0] + t_ * (verts[ib, 0] - verts[ia, 0])
                    out_verts[out_nv, 1] = verts[ia, 1] + t_ * (verts[ib, 1] - verts[ia, 1])
                    out_verts[out_nv, 2] = verts[ia, 2] + t_ * (verts[ib, 2] - verts[ia, 2])
                    ci = out_nv
                    cr_lo[n_cr] = lo
                    cr_hi[n_cr] = hi
                    cr_idx[n_cr] = ci
                    n_cr += 1
                    out_nv += 1
                if out_len >= cycle.shape[0]:
                    overflow = True
                    break
                cycle[out_len] = ci
                out_len += 1
            if cb <= 0:
                if out_len >= cycle.shape[0]:
                    overflow = True
                    break
                cycle[out_len] = vmap[ib]
                out_len += 1
            ia = ib
            ca = cb
        if overflow or out_len > maxfv:
            return 0, 0, ERR_CYCLE_OVERFLOW
        if out_len >= 3:
            if out_nf >= maxf:
                return 0, 0, ERR_FACE_OVERFLOW
            for j in range(out_len):
                out_face_vert[out_nf, j] = cycle[j]
            out_face_len[out_nf] = out_len
            out_nf += 1

    # cut face: every result vertex lying on the plane belongs to it
    cut = np.empty(maxv, np.int32)
    n_cut = 0
    for i in range(nv):
        if cls[i] == 0:
            cut[n_cut] = vmap[i]
            n_cut += 1
    for t in range(n_cr):
        cut[n_cut] = cr_idx[t]
        n_cut += 1
    if n_cut >= 3:
        if out_nf >= maxf:
            return 0, 0, ERR_FACE_OVERFLOW
        if n_cut > maxfv:
            return 0, 0, ERR_CYCLE_OVERFLOW
        # in-plane right-handed basis (e1, e2, n); ascending angle around
        # the centroid is counterclockwise seen from outside (+n side)
        anx = abs(nx)
        any_ = abs(ny)
        anz = abs(nz)
        if anx <= any_ and anx <= anz:
            ax, ay, az = 1.0, 0.0, 0.0
        elif any_ <= anz:
            ax, ay, az = 0.0, 1.0, 0.0
        else:
            ax, ay, az = 0.0, 0.0, 1.0
        e1x = ny * az - nz * ay
        e1y = nz * ax - nx * az
        e1z = nx * ay - ny * ax
        inv = 1.0 / math.sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
        e1x *= inv
        e1y *= inv
        e1z *= inv
        e2x = ny * e1z - nz * e1y
        e2y = nz * e1x - nx * e1z
        e2z = nx * e1y - ny * e1x
        cx = 0.0
        cy = 0.0
        cz = 0.0
        for t in range(n_cut):
            i = cut[t]
            cx += out_verts[i, 0]
            cy += out_verts[i, 1]
            cz += out_verts[i, 2]
        cx /= n_cut
        cy /= n_cut
        cz /= n_cut
        ang = np.empty(n_cut, np.float64)
        for t in range(n_cut):
            i = cut[t]
            dx = out_verts[i, 0] - cx
            dy = out_verts[i, 1] - cy
            dz = out_verts[i, 2] - cz
            ang[t] = math.atan2(dx * e2x + dy * e2y + dz * e2z,
                                dx * e1x + dy * e1y + dz * e1z)
        # insertion sort (n_cut is small)
        for t in range(1, n_cut):
            key_a = ang[t]
            key_i = cut[t]
            u = t - 1
            while u >= 0 and ang[u] > key_a:
                ang[u + 1] = ang[u]
                cut[u + 1] = cut[u]
                u -= 1
            ang[u + 1] = key_a
            cut[u + 1] = key_i
        for t in range(n_cut):
            out_face_vert[out_nf, t] = cut[t]
        out_face_len[out_nf] = n_cut
        out_nf += 1
    return out_nv, out_nf, CLIP_CUT


@njit(cache=True)
def measure(verts, nv, face_vert, face_len, nf, gx, gy, gz):
    """Volume and surface area by centroid-fan triangulation of each face.

    Volume is the sum of signed tetrahedra against (gx, gy, gz); with
    outward counterclockwise faces and an interior reference point every
    contribution is positive.
    """
    vol = 0.0
    area = 0.0
    for f in range(nf):
        m = face_len[f]
        cx = 0.0
        cy = 0.0
        cz = 0.0
        for j in range(m):
            i = face_vert[f, j]
            cx += verts[i, 0]
            cy += verts[i, 1]
            cz += verts[i, 2]
        cx /= m
        cy /= m
        cz /= m
        ux = cx - gx
        uy = cy - gy
        uz = cz - gz
        for j in range(m):
            i0 = face_vert[f, j]
            i1 = face_vert[f, (j + 1) % m]
            ax = verts[i0, 0] - cx
            ay = verts[i0, 1] - cy
            az = verts[i0, 2] - cz
            bx = verts[i1, 0] - cx
            by = verts[i1, 1] - cy
            bz = verts[i1, 2] - cz
            crx = ay * bz - az * by
            cry = az * bx - ax * bz
            crz = ax * by - ay * bx
            area += 0.5 * math.sqrt(crx * crx + cry * cry + crz * crz)
            vx = verts[i0, 0] - gx
            vy = verts[i0, 1] - gy
            vz = verts[i0, 2] - gz
            wx = verts[i1, 0] - gx
            wy = verts[i1, 1] - gy
            wz = verts[i1, 2] - gz
            vol += (ux * (vy * wz - vz * wy)
                    - uy * (vx * wz - vz * wx)
                    + uz * (vx * wy - vy * wx)) / 6.0
    return vol, area


@njit(cache=True)
def euler_defect(nv, face_len, nf):
    """V - E + F - 2 with E taken as half the summed cycle lengths.

    Returns a nonzero sentinel when the edge sum is odd.
    """
    esum = 0
    for f in range(nf):
        esum += face_len[f]
    if esum % 2 != 0:
        return 10 ** 9
    return nv - esum // 2 + nf - 2


@njit(cache=True)
def build_cell(sites, dists, region_radius,
               verts_a, fv_a, fl_a, verts_b, fv_b, fl_b,
               on_eps, early_stop):
    """Clip the cube [-R, R]^3 by origin/site bisectors in distance order.

    sites must be sorted by ascending distance dists. Processing stops as
    soon as the next site distance reaches twice the current farthest
    vertex distance rho: no bisector of a farther site can reach the cell.
    If the sites are exhausted first, the cell is final only when
    2 * rho <= region_radius (the unsampled region cannot contain a
    cutting site, and the seed cube provably did not truncate the cell);
    otherwise BUILD_NEED_MORE asks the caller to enlarge the region.

    Returns (status, nv, nf, in_a, rho). in_a tells which buffer set holds
    the result. The Euler relation is checked on every success.
    """
    nv, nf = init_cube(region_radius, verts_a, fv_a, fl_a)
    in_a = True
    rho = region_radius * SQRT3
    finished = False
    for s in range(sites.shape[0]):
        d = dists[s]
        if d <= 0.0:
            return ERR_BAD_SITE, nv, nf, in_a, rho
        if early_stop and d >= 2.0 * rho:
            finished = True
            break
        off = 0.5 * d
        if off >= rho:
            # bisector plane lies beyond every vertex
            continue
        nx = sites[s, 0] / d
        ny = sites[s, 1] / d
        nz = sites[s, 2] / d
        if in_a:
            nnv, nnf, st = clip(verts_a, nv, fv_a, fl_a, nf,
                                verts_b, fv_b, fl_b, nx, ny, nz, off, on_eps)
        else:
            nnv, nnf, st = clip(verts_b, nv, fv_b, fl_b, nf,
                                verts_a, fv_a, fl_a, nx, ny, nz, off, on_eps)
        if st < 0:
            return st, nv, nf, in_a, rho
        if st == CLIP_CUT:
            in_a = not in_a
            nv = nnv
            nf = nnf
            if in_a:
                rho = max_vertex_norm(verts_a, nv)
            else:
                rho = max_vertex_norm(verts_b, nv)
    if not finished and 2.0 * rho > region_radius:
        return BUILD_NEED_MORE, nv, nf, in_a, rho
    if in_a:
        defect = euler_defect(nv, fl_a, nf)
    else:
        defect = euler_defect(nv, fl_b, nf)
    if defect != 0:
        return ERR_EULER, nv, nf, in_a, rho
    return BUILD_OK, nv, nf, in_a, rho
