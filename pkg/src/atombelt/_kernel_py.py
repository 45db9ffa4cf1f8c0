"""Pure-Python trajectory integrator.

Mirror of the compiled backend in _kernel.pyx: identical expression order,
identical libm scalar calls, so both produce bit-identical trajectories.
When touching either file, change the other the same way.
"""

import math

BOUND = 0
ESCAPED = 1
BACKGROUND = 2
NONFINITE = 3
NOCONVERGE = 4

PI = 3.141592653589793

_C_CRIT = 0.5 * math.exp(-0.5)     # tilt beyond which the transverse cut has no extrema
_SCREEN = 1.0 - math.exp(-0.5)     # cheap lower bound on U_eff/U_loc, see check below


def _cut_extrema(u_loc, w, mg):
    """Extrema of f(t) = -u_loc exp(-2 t^2) + mg w t along the gravity axis.

    Returns (u_eff, f_min, ok): barrier height above the tilted minimum and
    the minimum value. Derivative bisection to |f'| < 1e-3 mg, 200-iteration
    cap; t is in waist units.
    """
    if mg <= 0.0:
        return u_loc, -u_loc, True
    if u_loc <= 0.0:
        return 0.0, -u_loc, True
    c = mg * w / (4.0 * u_loc)
    if c >= _C_CRIT:
        return 0.0, -u_loc, True
    tol = 1e-3 * c
    lo = -0.5
    hi = 0.0
    mid = -0.25
    ok = False
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g1 = mid * math.exp(-2.0 * mid * mid) + c
        if abs(g1) < tol:
            ok = True
            break
        if g1 > 0.0:
            hi = mid
        else:
            lo = mid
    if not ok:
        return 0.0, -u_loc, False
    t_min = mid
    lo = -6.0
    hi = -0.5
    ok = False
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g1 = mid * math.exp(-2.0 * mid * mid) + c
        if abs(g1) < tol:
            ok = True
            break
        if g1 > 0.0:
            lo = mid
        else:
            hi = mid
    if not ok:
        return 0.0, -u_loc, False
    t_bar = mid
    f_min = -u_loc * math.exp(-2.0 * t_min * t_min) + mg * w * t_min
    f_bar = -u_loc * math.exp(-2.0 * t_bar * t_bar) + mg * w * t_bar
    return f_bar - f_min, f_min, True


def run(plan):
    """Integrate one trajectory. Returns
    (status, step, t_event, (x, y, z, vx, vy, vz), n_scatter, n_recorded,
     final_energy, final_ueff).
    """
    # state
    x = plan.x; y = plan.y; z = plan.z
    vx = plan.vx; vy = plan.vy; vz = plan.vz
    # stepping
    dt = plan.dt
    n_steps = plan.n_steps
    # trap
    depth = plan.depth
    w02 = plan.w0 * plan.w0
    inv_z0 = 1.0 / plan.rayleigh
    inv_z02 = inv_z0 * inv_z0
    k = plan.k
    contrast = plan.contrast
    mass = plan.mass
    grav = plan.grav
    gxa = plan.gx; gya = plan.gy; gza = plan.gz
    mg = mass * grav
    half_cpl = 0.5 * (1.0 + contrast)
    hdtm = 0.5 * dt / mass
    # profile
    seg_t1 = plan.seg_t1; seg_t0 = plan.seg_t0
    seg_nu0 = plan.seg_nu0; seg_slope = plan.seg_slope; seg_phi0 = plan.seg_phi0
    nseg1 = len(plan.seg_t0) - 1
    prof_end = plan.prof_end
    phi_end = plan.phi_end
    lam = plan.lam
    # modulations
    aom_x = plan.aom_x; aom_y = plan.aom_y; aom_sl = plan.aom_sl
    n_aom = len(plan.aom_x)
    sched_t = plan.sched_t; sched_f = plan.sched_f; sched_sl = plan.sched_sl
    n_sch = len(plan.sched_t)
    # tapes
    bg_t = plan.bg_t
    rc_t = plan.rc_t; rc_u = plan.rc_u; rc_sx = plan.rc_sx
    rc_nx = plan.rc_nx; rc_ny = plan.rc_ny; rc_nz = plan.rc_nz
    n_rc = len(plan.rc_t)
    kick = plan.kick
    ph_iv = plan.ph_iv
    ph_off = plan.ph_off
    n_ph = len(plan.ph_off)
    # options and outputs
    esc_every = plan.esc_every
    rec_every = plan.rec_every
    out_t = plan.out_t
    out_s = plan.out_s

    p = 0          # profile segment pointer
    sp = 0         # depth schedule pointer
    rc = 0         # recoil tape pointer
    n_sc = 0
    n_rec = 0
    cur_idx = 0
    cur_off = ph_off[0] if n_ph > 0 else 0.0
    t = 0.0
    status = BOUND
    t_event = 0.0
    e_fin = 0.0
    ueff_fin = 0.0

    def field(tq, xq, yq, zq):
        # shared evaluation: envelope, gaussian, lattice factor, modulation
        nonlocal p, sp
        if tq >= prof_end:
            phi_p = phi_end
            nu = 0.0
        else:
            while p < nseg1 and tq >= seg_t1[p]:
                p += 1
            tau = tq - seg_t0[p]
            nu = seg_nu0[p] + seg_slope[p] * tau
            phi_p = seg_phi0[p] + PI * (seg_nu0[p] * tau + 0.5 * seg_slope[p] * tau * tau)
        fac = 1.0
        if n_aom > 0:
            fq = abs(nu)
            if fq >= aom_x[n_aom - 1]:
                fac = aom_y[n_aom - 1]
            else:
                ia = 0
                while aom_x[ia + 1] < fq:
                    ia += 1
                fac = aom_y[ia] + (fq - aom_x[ia]) * aom_sl[ia]
        if n_sch > 0:
            if tq <= sched_t[0]:
                fac = fac * sched_f[0]
            elif tq >= sched_t[n_sch - 1]:
                fac = fac * sched_f[n_sch - 1]
            else:
                while sched_t[sp + 1] < tq:
                    sp += 1
                fac = fac * (sched_f[sp] + (tq - sched_t[sp]) * sched_sl[sp])
        zr = zq * inv_z0
        zr2 = zr * zr
        den = 1.0 + zr2
        a_env = 1.0 / den
        w2 = w02 * den
        rho2 = xq * xq + yq * yq
        gexp = math.exp(-2.0 * rho2 / w2)
        psi2 = 2.0 * ((phi_p + cur_off) - k * zq)
        s = 0.5 * (1.0 + contrast * math.cos(psi2))
        return nu, fac, a_env, w2, rho2, gexp, psi2, s

    def force(tq, xq, yq, zq):
        nu, fac, a_env, w2, rho2, gexp, psi2, s = field(tq, xq, yq, zq)
        ucoef = depth * fac
        core = ucoef * a_env * gexp
        fpre = -4.0 * core * s / w2
        fxq = fpre * xq
        fyq = fpre * yq
        dw2 = 2.0 * zq * inv_z02 * w02
        dlog = (-2.0 * zq * inv_z02) * a_env + (2.0 * rho2 / (w2 * w2)) * dw2
        ds = contrast * k * math.sin(psi2)
        fzq = core * (dlog * s + ds)
        if mg > 0.0:
            fxq = fxq - mg * gxa
            fyq = fyq - mg * gya
            fzq = fzq - mg * gza
        return fxq, fyq, fzq

    def check(tq, full):
        # escape test; returns (flag, e_well, u_eff, ok). flag 1 = escaped.
        nu, fac, a_env, w2, rho2, gexp, psi2, s = field(tq, x, y, z)
        if rho2 > 2.25 * w2:
            return 1, 0.0, 0.0, True
        if tq >= prof_end:
            vsw = 0.0
        else:
            vsw = 0.5 * lam * nu
        ucoef = depth * fac
        u_loc = ucoef * a_env * half_cpl
        v_atom = -ucoef * a_env * gexp * s + mg * (gxa * x + gya * y + gza * z)
        dvz = vz - vsw
        ke = 0.5 * mass * (vx * vx + vy * vy + dvz * dvz)
        w = math.sqrt(w2)
        mgw_h = 0.5 * mg * w
        e_est = ke + v_atom + u_loc
        if not full and e_est + mgw_h < _SCREEN * u_loc - mgw_h:
            return 0, e_est, u_loc, True
        u_eff, f_min, ok = _cut_extrema(u_loc, w, mg)
        if not ok:
            return 0, 0.0, 0.0, False
        e = ke + v_atom - f_min
        return (1 if e >= u_eff else 0), e, u_eff, True

    if rec_every > 0:
        out_t[0] = 0.0
        out_s[0, 0] = x; out_s[0, 1] = y; out_s[0, 2] = z
        out_s[0, 3] = vx; out_s[0, 4] = vy; out_s[0, 5] = vz
        n_rec = 1

    fx, fy, fz = force(0.0, x, y, z)
    i = 0
    while i < n_steps:
        if n_ph > 0:
            j = int(t / ph_iv)
            if j >= n_ph:
                j = n_ph - 1
            if j != cur_idx:
                cur_idx = j
                cur_off = ph_off[j]
                fx, fy, fz = force(t, x, y, z)
        if bg_t <= t:
            status = BACKGROUND
            t_event = bg_t
            break
        while rc < n_rc and rc_t[rc] <= t:
            nu, fac, a_env, w2, rho2, gexp, psi2, s = field(t, x, y, z)
            if rc_u[rc] < fac * a_env * gexp * s:
                vx = vx + kick * rc_nx[rc]
                vy = vy + kick * rc_ny[rc]
                vz = vz + kick * (rc_nz[rc] + rc_sx[rc])
                n_sc += 1
            rc += 1
        if esc_every > 0 and i % esc_every == 0:
            if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)
                    and math.isfinite(vx) and math.isfinite(vy) and math.isfinite(vz)):
                status = NONFINITE
                t_event = t
                break
            flag, e, ueff, ok = check(t, False)
            if not ok:
                status = NOCONVERGE
                t_event = t
                break
            if flag:
                status = ESCAPED
                t_event = t
                e_fin = e
                ueff_fin = ueff
                break
        vx = vx + hdtm * fx
        vy = vy + hdtm * fy
        vz = vz + hdtm * fz
        x = x + dt * vx
        y = y + dt * vy
        z = z + dt * vz
        t = t + dt
        fx, fy, fz = force(t, x, y, z)
        vx = vx + hdtm * fx
        vy = vy + hdtm * fy
        vz = vz + hdtm * fz
        i += 1
        if rec_every > 0 and i % rec_every == 0:
            out_t[n_rec] = t
            out_s[n_rec, 0] = x; out_s[n_rec, 1] = y; out_s[n_rec, 2] = z
            out_s[n_rec, 3] = vx; out_s[n_rec, 4] = vy; out_s[n_rec, 5] = vz
            n_rec += 1

    if status == BOUND:
        # trailing tape events, then exact classification at the final time
        while rc < n_rc and rc_t[rc] <= t:
            nu, fac, a_env, w2, rho2, gexp, psi2, s = field(t, x, y, z)
            if rc_u[rc] < fac * a_env * gexp * s:
                vx = vx + kick * rc_nx[rc]
                vy = vy + kick * rc_ny[rc]
                vz = vz + kick * (rc_nz[rc] + rc_sx[rc])
                n_sc += 1
            rc += 1
        if bg_t <= t:
            status = BACKGROUND
            t_event = bg_t
        else:
            flag, e, ueff, ok = check(t, True)
            if not ok:
                status = NOCONVERGE
            elif flag:
                status = ESCAPED
            e_fin = e
            ueff_fin = ueff
            t_event = t

    if rec_every > 0 and (n_rec == 0 or out_t[n_rec - 1] != t):
        out_t[n_rec] = t
        out_s[n_rec, 0] = x; out_s[n_rec, 1] = y; out_s[n_rec, 2] = z
        out_s[n_rec, 3] = vx; out_s[n_rec, 4] = vy; out_s[n_rec, 5] = vz
        n_rec += 1

    return status, i, t_event, (x, y, z, vx, vy, vz), n_sc, n_rec, e_fin, ueff_fin
