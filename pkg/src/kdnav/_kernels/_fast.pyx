# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Mirrors ``_pure`` operation for operation (same formulas, same evaluation
order, same tie-breaking), so both backends produce identical trajectories.
Status codes: 0=active, 1=arrived, 2=collided.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

cdef double _LP_EPS = 1e-10
cdef double _TINY = 1e-12


def integrate_window(double[:, ::1] positions, double[:, ::1] velocities,
                     double[:, ::1] goals, double[::1] radii,
                     signed char[::1] status, double[:, ::1] actions,
                     double dt_sim, int n_substeps,
                     double[::1] arrival_thresholds,
                     double collision_threshold):
    cdef int n = positions.shape[0]
    events_arr = np.empty((n, 3), dtype=np.int32)
    cdef int[:, ::1] ev = events_arr
    newly_arr = np.empty(n, dtype=np.int32)
    cdef int[::1] newly = newly_arr
    cdef int n_events = 0, n_new, s, i, j, k
    cdef double dx, dy, thr
    cdef bint any_active, hit

    for i in range(n):
        if status[i] == 0:
            velocities[i, 0] = actions[i, 0]
            velocities[i, 1] = actions[i, 1]

    for s in range(n_substeps):
        any_active = False
        for i in range(n):
            if status[i] == 0:
                any_active = True
                positions[i, 0] += velocities[i, 0] * dt_sim
                positions[i, 1] += velocities[i, 1] * dt_sim
        if not any_active:
            break

        # arrivals first: ties inside a substep resolve in favor of arrival
        for i in range(n):
            if status[i] != 0:
                continue
            dx = goals[i, 0] - positions[i, 0]
            dy = goals[i, 1] - positions[i, 1]
            if dx * dx + dy * dy <= arrival_thresholds[i] * arrival_thresholds[i]:
                status[i] = 1
                velocities[i, 0] = 0.0
                velocities[i, 1] = 0.0
                ev[n_events, 0] = i
                ev[n_events, 1] = 1
                ev[n_events, 2] = s
                n_events += 1

        # collisions against every non-arrived agent, decided simultaneously
        n_new = 0
        for i in range(n):
            if status[i] != 0:
                continue
            hit = False
            for j in range(n):
                if j == i or status[j] == 1:
                    continue
                dx = positions[i, 0] - positions[j, 0]
                dy = positions[i, 1] - positions[j, 1]
                if collision_threshold > 0.0:
                    thr = collision_threshold
                else:
                    thr = radii[i] + radii[j]
                if dx * dx + dy * dy <= thr * thr:
                    hit = True
                    break
            if hit:
                newly[n_new] = i
                n_new += 1
        for k in range(n_new):
            i = newly[k]
            status[i] = 2
            velocities[i, 0] = 0.0
            velocities[i, 1] = 0.0
            ev[n_events, 0] = i
            ev[n_events, 1] = 2
            ev[n_events, 2] = s
            n_events += 1

    return events_arr[:n_events].copy()


def neighbor_table(double[:, ::1] positions, double[:, ::1] velocities,
                   signed char[::1] status, double sense_radius):
    cdef int n = positions.shape[0]
    cdef int n_act = 0, i, j, k, total
    cdef double dx, dy, r2 = sense_radius * sense_radius

    for i in range(n):
        if status[i] == 0:
            n_act += 1

    ids_arr = np.empty(n_act, dtype=np.int32)
    counts_arr = np.zeros(n_act, dtype=np.int32)
    rows_arr = np.empty((n_act * (n - 1 if n > 0 else 0), 4), dtype=np.float64)
    cdef int[::1] ids = ids_arr
    cdef int[::1] counts = counts_arr
    cdef double[:, ::1] rows = rows_arr

    k = 0
    total = 0
    for i in range(n):
        if status[i] != 0:
            continue
        ids[k] = i
        for j in range(n):
            if j == i or status[j] == 1:
                continue
            dx = positions[j, 0] - positions[i, 0]
            dy = positions[j, 1] - positions[i, 1]
            if dx * dx + dy * dy <= r2:
                rows[total, 0] = dx
                rows[total, 1] = dy
                rows[total, 2] = velocities[j, 0] - velocities[i, 0]
                rows[total, 3] = velocities[j, 1] - velocities[i, 1]
                counts[k] += 1
                total += 1
        k += 1
    return ids_arr, counts_arr, rows_arr[:total].copy()


# ---------------------------------------------------------------------------
# ORCA linear programs
# ---------------------------------------------------------------------------

cdef bint _lp1(double[:, ::1] pts, double[:, ::1] dirs, int line_no,
               double radius, double opt_x, double opt_y, bint dir_opt,
               double *res_x, double *res_y) noexcept:
    cdef double px = pts[line_no, 0], py = pts[line_no, 1]
    cdef double dx = dirs[line_no, 0], dy = dirs[line_no, 1]
    cdef double dot = px * dx + py * dy
    cdef double disc = dot * dot + radius * radius - (px * px + py * py)
    cdef double sq, t_left, t_right, qx, qy, ex, ey, denom, numer, t
    cdef int i
    if disc < 0.0:
        return False
    sq = sqrt(disc)
    t_left = -dot - sq
    t_right = -dot + sq

    for i in range(line_no):
        qx = pts[i, 0]
        qy = pts[i, 1]
        ex = dirs[i, 0]
        ey = dirs[i, 1]
        denom = dx * ey - dy * ex
        numer = ex * (py - qy) - ey * (px - qx)
        if fabs(denom) <= _LP_EPS:
            if numer < 0.0:
                return False
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return False

    if dir_opt:
        if opt_x * dx + opt_y * dy > 0.0:
            t = t_right
        else:
            t = t_left
    else:
        t = dx * (opt_x - px) + dy * (opt_y - py)
        if t < t_left:
            t = t_left
        elif t > t_right:
            t = t_right
    res_x[0] = px + t * dx
    res_y[0] = py + t * dy
    return True


cdef int _lp2(double[:, ::1] pts, double[:, ::1] dirs, int n_lines,
              double radius, double opt_x, double opt_y, bint dir_opt,
              double *res_x, double *res_y) noexcept:
    cdef double length, px, py, dx, dy
    cdef int i
    if dir_opt:
        res_x[0] = opt_x * radius
        res_y[0] = opt_y * radius
    elif opt_x * opt_x + opt_y * opt_y > radius * radius:
        length = sqrt(opt_x * opt_x + opt_y * opt_y)
        res_x[0] = opt_x / length * radius
        res_y[0] = opt_y / length * radius
    else:
        res_x[0] = opt_x
        res_y[0] = opt_y

    for i in range(n_lines):
        px = pts[i, 0]
        py = pts[i, 1]
        dx = dirs[i, 0]
        dy = dirs[i, 1]
        if dx * (py - res_y[0]) - dy * (px - res_x[0]) > 0.0:
            if not _lp1(pts, dirs, i, radius, opt_x, opt_y, dir_opt,
                        res_x, res_y):
                return i
    return n_lines


cdef void _lp3(double[:, ::1] pts, double[:, ::1] dirs, int n_lines,
               int begin, double radius, double[:, ::1] proj_pts,
               double[:, ::1] proj_dirs, double *res_x,
               double *res_y) noexcept:
    cdef double distance = 0.0
    cdef double px, py, dx, dy, qx, qy, ex, ey, determ, t, ppx, ppy
    cdef double ddx, ddy, length, nx, ny
    cdef int i, j, n_proj, cnt
    for i in range(begin, n_lines):
        px = pts[i, 0]
        py = pts[i, 1]
        dx = dirs[i, 0]
        dy = dirs[i, 1]
        if dx * (py - res_y[0]) - dy * (px - res_x[0]) > distance:
            n_proj = 0
            for j in range(i):
                qx = pts[j, 0]
                qy = pts[j, 1]
                ex = dirs[j, 0]
                ey = dirs[j, 1]
                determ = dx * ey - dy * ex
                if fabs(determ) <= _LP_EPS:
                    if dx * ex + dy * ey > 0.0:
                        continue
                    ppx = 0.5 * (px + qx)
                    ppy = 0.5 * (py + qy)
                else:
                    t = (ex * (py - qy) - ey * (px - qx)) / determ
                    ppx = px + t * dx
                    ppy = py + t * dy
                ddx = ex - dx
                ddy = ey - dy
                length = sqrt(ddx * ddx + ddy * ddy)
                proj_pts[n_proj, 0] = ppx
                proj_pts[n_proj, 1] = ppy
                proj_dirs[n_proj, 0] = ddx / length
                proj_dirs[n_proj, 1] = ddy / length
                n_proj += 1
            nx = res_x[0]
            ny = res_y[0]
            cnt = _lp2(proj_pts, proj_dirs, n_proj, radius, -dy, dx, True,
                       &nx, &ny)
            if cnt >= n_proj:
                res_x[0] = nx
                res_y[0] = ny
            distance = dx * (py - res_y[0]) - dy * (px - res_x[0])


def solve_lp2(points, directions, preferred, double max_speed):
    pts_arr = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    dirs_arr = np.ascontiguousarray(directions, dtype=np.float64).reshape(-1, 2)
    cdef double[:, ::1] pts = pts_arr
    cdef double[:, ::1] dirs = dirs_arr
    cdef double rx = 0.0, ry = 0.0
    cdef int cnt = _lp2(pts, dirs, pts_arr.shape[0], max_speed,
                        float(preferred[0]), float(preferred[1]), False,
                        &rx, &ry)
    return np.array([rx, ry]), cnt


cdef int _orca_lines(int i, double[:, ::1] positions, double[:, ::1] velocities,
                     double[::1] radii, signed char[::1] status,
                     double tau, double dt, double buffer_factor,
                     double neighbor_dist, double[:, ::1] pts,
                     double[:, ::1] dirs) noexcept:
    cdef double pix = positions[i, 0], piy = positions[i, 1]
    cdef double vix = velocities[i, 0], viy = velocities[i, 1]
    cdef double inv_tau = 1.0 / tau
    cdef double inv_dt = 1.0 / dt
    cdef double nd2 = neighbor_dist * neighbor_dist
    cdef int n = positions.shape[0]
    cdef int j, n_lines = 0
    cdef double rel_px, rel_py, rel_vx, rel_vy, dist_sq, comb_r, comb_r_sq
    cdef double wx, wy, w_len_sq, w_len, dot1, dot2, uwx, uwy
    cdef double dir_x, dir_y, ux, uy, leg, d

    for j in range(n):
        if j == i or status[j] == 1:
            continue
        rel_px = positions[j, 0] - pix
        rel_py = positions[j, 1] - piy
        dist_sq = rel_px * rel_px + rel_py * rel_py
        if dist_sq > nd2:
            continue
        rel_vx = vix - velocities[j, 0]
        rel_vy = viy - velocities[j, 1]
        comb_r = buffer_factor * (radii[i] + radii[j])
        comb_r_sq = comb_r * comb_r

        if dist_sq > comb_r_sq:
            wx = rel_vx - inv_tau * rel_px
            wy = rel_vy - inv_tau * rel_py
            w_len_sq = wx * wx + wy * wy
            dot1 = wx * rel_px + wy * rel_py
            if dot1 < 0.0 and dot1 * dot1 > comb_r_sq * w_len_sq:
                w_len = sqrt(w_len_sq)
                uwx = wx / w_len
                uwy = wy / w_len
                dir_x = uwy
                dir_y = -uwx
                ux = (comb_r * inv_tau - w_len) * uwx
                uy = (comb_r * inv_tau - w_len) * uwy
            else:
                leg = sqrt(dist_sq - comb_r_sq)
                if rel_px * wy - rel_py * wx > 0.0:
                    dir_x = (rel_px * leg - rel_py * comb_r) / dist_sq
                    dir_y = (rel_px * comb_r + rel_py * leg) / dist_sq
                else:
                    dir_x = -(rel_px * leg + rel_py * comb_r) / dist_sq
                    dir_y = (rel_px * comb_r - rel_py * leg) / dist_sq
                dot2 = rel_vx * dir_x + rel_vy * dir_y
                ux = dot2 * dir_x - rel_vx
                uy = dot2 * dir_y - rel_vy
        else:
            wx = rel_vx - inv_dt * rel_px
            wy = rel_vy - inv_dt * rel_py
            w_len = sqrt(wx * wx + wy * wy)
            if w_len < _TINY:
                d = sqrt(dist_sq)
                if d > _TINY:
                    uwx = -rel_px / d
                    uwy = -rel_py / d
                else:
                    uwx = 1.0
                    uwy = 0.0
                w_len = 0.0
            else:
                uwx = wx / w_len
                uwy = wy / w_len
            dir_x = uwy
            dir_y = -uwx
            ux = (comb_r * inv_dt - w_len) * uwx
            uy = (comb_r * inv_dt - w_len) * uwy

        pts[n_lines, 0] = vix + 0.5 * ux
        pts[n_lines, 1] = viy + 0.5 * uy
        dirs[n_lines, 0] = dir_x
        dirs[n_lines, 1] = dir_y
        n_lines += 1
    return n_lines


def orca_velocities(double[:, ::1] positions, double[:, ::1] velocities,
                    double[::1] radii, signed char[::1] status,
                    double[:, ::1] pref_velocities, double[::1] max_speeds,
                    double tau, double dt, double buffer_factor,
                    double neighbor_dist):
    cdef int n = positions.shape[0]
    out_arr = np.zeros((n, 2))
    cdef double[:, ::1] out = out_arr
    cdef int cap = n - 1 if n > 1 else 1
    pts_arr = np.empty((cap, 2))
    dirs_arr = np.empty((cap, 2))
    proj_pts_arr = np.empty((cap, 2))
    proj_dirs_arr = np.empty((cap, 2))
    cdef double[:, ::1] pts = pts_arr
    cdef double[:, ::1] dirs = dirs_arr
    cdef double[:, ::1] proj_pts = proj_pts_arr
    cdef double[:, ::1] proj_dirs = proj_dirs_arr
    cdef int i, n_lines, cnt
    cdef double rx, ry

    for i in range(n):
        if status[i] != 0:
            continue
        n_lines = _orca_lines(i, positions, velocities, radii, status,
                              tau, dt, buffer_factor, neighbor_dist,
                              pts, dirs)
        rx = 0.0
        ry = 0.0
        cnt = _lp2(pts, dirs, n_lines, max_speeds[i],
                   pref_velocities[i, 0], pref_velocities[i, 1], False,
                   &rx, &ry)
        if cnt < n_lines:
            _lp3(pts, dirs, n_lines, cnt, max_speeds[i], proj_pts,
                 proj_dirs, &rx, &ry)
        out[i, 0] = rx
        out[i, 1] = ry
    return out_arr
