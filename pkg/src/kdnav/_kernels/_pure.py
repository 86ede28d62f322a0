"""Pure numpy/python implementations of the hot kernels.

Reference backend: the Cython module ``_fast`` mirrors these functions
operation for operation, so both backends make identical floating-point
decisions. Agent status codes are 0=active, 1=arrived, 2=collided.
"""

from __future__ import annotations

import math

import numpy as np

ACTIVE, ARRIVED, COLLIDED = 0, 1, 2

_LP_EPS = 1e-10
_TINY = 1e-12


def integrate_window(positions, velocities, goals, radii, status, actions,
                     dt_sim, n_substeps, arrival_thresholds, collision_threshold):
    """Advance one control window of ``n_substeps`` fixed substeps in place.

    Active agents move with their (already speed-clamped) action velocity.
    After each substep, arrivals are detected first, then collisions against
    every non-arrived agent; ties within a substep therefore resolve in favor
    of arrival. Newly collided agents freeze with zero velocity.

    Returns an (M, 3) int32 array of status-change events
    ``(agent_id, new_status, substep_index)``.
    """
    n = positions.shape[0]
    events = []

    active = status == ACTIVE
    velocities[active] = actions[active]

    for s in range(n_substeps):
        active = status == ACTIVE
        if not np.any(active):
            break
        positions[active] += velocities[active] * dt_sim

        # arrivals first
        dg = goals - positions
        d2 = dg[:, 0] ** 2 + dg[:, 1] ** 2
        arrived_now = active & (d2 <= arrival_thresholds ** 2)
        for i in np.nonzero(arrived_now)[0]:
            events.append((i, ARRIVED, s))
        status[arrived_now] = ARRIVED
        velocities[arrived_now] = 0.0

        # collisions among the rest; arrived agents are fully removed
        active = status == ACTIVE
        if not np.any(active):
            continue
        considered = status != ARRIVED
        diff = positions[:, None, :] - positions[None, :, :]
        dist2 = diff[:, :, 0] ** 2 + diff[:, :, 1] ** 2
        if collision_threshold > 0.0:
            thr2 = np.full((n, n), collision_threshold ** 2)
        else:
            rsum = radii[:, None] + radii[None, :]
            thr2 = rsum ** 2
        hit = dist2 <= thr2
        np.fill_diagonal(hit, False)
        collided_now = active & (hit & considered[None, :]).any(axis=1)
        for i in np.nonzero(collided_now)[0]:
            events.append((i, COLLIDED, s))
        status[collided_now] = COLLIDED
        velocities[collided_now] = 0.0

    if not events:
        return np.empty((0, 3), dtype=np.int32)
    return np.array(events, dtype=np.int32)


def neighbor_table(positions, velocities, status, sense_radius):
    """Gather each active agent's neighbors within the sensing radius.

    Neighbors are all other non-arrived agents (collided ones persist as
    static obstacles). Returns ``(ids, counts, rows)`` where ``ids`` are the
    active agent indices in ascending order, ``counts[k]`` the neighbor count
    of ``ids[k]``, and ``rows`` the concatenated neighbor records
    ``[dpx, dpy, dvx, dvy]`` grouped per agent in ascending neighbor order.
    The dummy all-zeros record is *not* included here.
    """
    ids = np.nonzero(status == ACTIVE)[0].astype(np.int32)
    considered = status != ARRIVED
    diff = positions[:, None, :] - positions[None, :, :]
    dist2 = diff[:, :, 0] ** 2 + diff[:, :, 1] ** 2
    within = dist2 <= sense_radius ** 2
    np.fill_diagonal(within, False)
    mask = within & considered[None, :]

    counts = np.zeros(len(ids), dtype=np.int32)
    chunks = []
    for k, i in enumerate(ids):
        js = np.nonzero(mask[i])[0]
        counts[k] = len(js)
        if len(js):
            chunks.append(np.hstack([positions[js] - positions[i],
                                     velocities[js] - velocities[i]]))
    if chunks:
        rows = np.vstack(chunks)
    else:
        rows = np.empty((0, 4))
    return ids, counts, rows


# ---------------------------------------------------------------------------
# ORCA: incremental 2D linear program over half-plane constraints, with the
# standard projection fallback when infeasible.
# ---------------------------------------------------------------------------

def _lp1(pts, dirs, line_no, radius, opt_x, opt_y, dir_opt, res_x, res_y):
    px, py = pts[line_no]
    dx, dy = dirs[line_no]
    dot = px * dx + py * dy
    disc = dot * dot + radius * radius - (px * px + py * py)
    if disc < 0.0:
        return False, res_x, res_y
    sq = math.sqrt(disc)
    t_left = -dot - sq
    t_right = -dot + sq

    for i in range(line_no):
        qx, qy = pts[i]
        ex, ey = dirs[i]
        denom = dx * ey - dy * ex
        numer = ex * (py - qy) - ey * (px - qx)
        if abs(denom) <= _LP_EPS:
            if numer < 0.0:
                return False, res_x, res_y
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return False, res_x, res_y

    if dir_opt:
        t = t_right if (opt_x * dx + opt_y * dy > 0.0) else t_left
    else:
        t = dx * (opt_x - px) + dy * (opt_y - py)
        if t < t_left:
            t = t_left
        elif t > t_right:
            t = t_right
    return True, px + t * dx, py + t * dy


def _lp2(pts, dirs, radius, opt_x, opt_y, dir_opt):
    if dir_opt:
        # opt is a unit direction: start from the disk boundary
        res_x, res_y = opt_x * radius, opt_y * radius
    elif opt_x * opt_x + opt_y * opt_y > radius * radius:
        length = math.sqrt(opt_x * opt_x + opt_y * opt_y)
        res_x, res_y = opt_x / length * radius, opt_y / length * radius
    else:
        res_x, res_y = opt_x, opt_y

    for i in range(len(pts)):
        px, py = pts[i]
        dx, dy = dirs[i]
        if dx * (py - res_y) - dy * (px - res_x) > 0.0:
            ok, nx, ny = _lp1(pts, dirs, i, radius, opt_x, opt_y, dir_opt,
                              res_x, res_y)
            if not ok:
                return i, res_x, res_y
            res_x, res_y = nx, ny
    return len(pts), res_x, res_y


def _lp3(pts, dirs, begin, radius, res_x, res_y):
    distance = 0.0
    for i in range(begin, len(pts)):
        px, py = pts[i]
        dx, dy = dirs[i]
        if dx * (py - res_y) - dy * (px - res_x) > distance:
            proj_pts = []
            proj_dirs = []
            for j in range(i):
                qx, qy = pts[j]
                ex, ey = dirs[j]
                determ = dx * ey - dy * ex
                if abs(determ) <= _LP_EPS:
                    if dx * ex + dy * ey > 0.0:
                        continue  # same-direction parallel: redundant
                    ppx, ppy = 0.5 * (px + qx), 0.5 * (py + qy)
                else:
                    t = (ex * (py - qy) - ey * (px - qx)) / determ
                    ppx, ppy = px + t * dx, py + t * dy
                ddx, ddy = ex - dx, ey - dy
                length = math.sqrt(ddx * ddx + ddy * ddy)
                proj_pts.append((ppx, ppy))
                proj_dirs.append((ddx / length, ddy / length))
            cnt, nx, ny = _lp2(proj_pts, proj_dirs, radius, -dy, dx, True)
            if cnt >= len(proj_pts):
                # infeasible sub-program keeps the previous result
                res_x, res_y = nx, ny
            distance = dx * (py - res_y) - dy * (px - res_x)
    return res_x, res_y


def solve_lp2(points, directions, preferred, max_speed):
    """Nearest feasible velocity to ``preferred`` under half-plane constraints.

    Returns ``(result, feasible_count)``; a count below ``len(points)`` marks
    the first violated constraint (the caller then runs the fallback).
    """
    pts = [(float(p[0]), float(p[1])) for p in points]
    dirs = [(float(d[0]), float(d[1])) for d in directions]
    cnt, rx, ry = _lp2(pts, dirs, float(max_speed),
                       float(preferred[0]), float(preferred[1]), False)
    return np.array([rx, ry]), cnt


def _orca_lines(i, positions, velocities, radii, considered,
                tau, dt, buffer_factor, neighbor_dist):
    pix, piy = positions[i]
    vix, viy = velocities[i]
    inv_tau = 1.0 / tau
    inv_dt = 1.0 / dt
    nd2 = neighbor_dist * neighbor_dist

    pts = []
    dirs = []
    for j in range(positions.shape[0]):
        if j == i or not considered[j]:
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
            # no current overlap: truncated velocity-obstacle cone
            wx = rel_vx - inv_tau * rel_px
            wy = rel_vy - inv_tau * rel_py
            w_len_sq = wx * wx + wy * wy
            dot1 = wx * rel_px + wy * rel_py
            if dot1 < 0.0 and dot1 * dot1 > comb_r_sq * w_len_sq:
                w_len = math.sqrt(w_len_sq)
                uwx, uwy = wx / w_len, wy / w_len
                dir_x, dir_y = uwy, -uwx
                ux = (comb_r * inv_tau - w_len) * uwx
                uy = (comb_r * inv_tau - w_len) * uwy
            else:
                leg = math.sqrt(dist_sq - comb_r_sq)
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
            # already overlapping: push out within one control period
            wx = rel_vx - inv_dt * rel_px
            wy = rel_vy - inv_dt * rel_py
            w_len = math.sqrt(wx * wx + wy * wy)
            if w_len < _TINY:
                d = math.sqrt(dist_sq)
                if d > _TINY:
                    uwx, uwy = -rel_px / d, -rel_py / d
                else:
                    uwx, uwy = 1.0, 0.0
                w_len = 0.0
            else:
                uwx, uwy = wx / w_len, wy / w_len
            dir_x, dir_y = uwy, -uwx
            ux = (comb_r * inv_dt - w_len) * uwx
            uy = (comb_r * inv_dt - w_len) * uwy

        pts.append((vix + 0.5 * ux, viy + 0.5 * uy))
        dirs.append((dir_x, dir_y))
    return pts, dirs


def orca_velocity_single(i, positions, velocities, radii, considered,
                         pref, max_speed, tau, dt, buffer_factor,
                         neighbor_dist):
    pts, dirs = _orca_lines(i, positions, velocities, radii, considered,
                            tau, dt, buffer_factor, neighbor_dist)
    cnt, rx, ry = _lp2(pts, dirs, max_speed, pref[0], pref[1], False)
    if cnt < len(pts):
        rx, ry = _lp3(pts, dirs, cnt, max_speed, rx, ry)
    return rx, ry


def orca_velocities(positions, velocities, radii, status, pref_velocities,
                    max_speeds, tau, dt, buffer_factor, neighbor_dist):
    """ORCA velocity for every active agent; zero rows for the rest."""
    n = positions.shape[0]
    out = np.zeros((n, 2))
    considered = status != ARRIVED
    for i in range(n):
        if status[i] != ACTIVE:
            continue
        rx, ry = orca_velocity_single(
            i, positions, velocities, radii, considered,
            (pref_velocities[i, 0], pref_velocities[i, 1]),
            max_speeds[i], tau, dt, buffer_factor, neighbor_dist)
        out[i, 0] = rx
        out[i, 1] = ry
    return out
