# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory integrator.

Mirror of _kernel_py.py: identical expression order, identical libm calls,
so both produce bit-identical trajectories (the extension is built with
-ffp-contract=off to keep it that way). When touching either file, change
the other the same way.
"""

from libc.math cimport exp, sin, cos, sqrt, fabs, isfinite

BOUND = 0
ESCAPED = 1
BACKGROUND = 2
NONFINITE = 3
NOCONVERGE = 4

cdef double PI = 3.141592653589793
cdef double C_CRIT = 0.5 * exp(-0.5)
cdef double SCREEN = 1.0 - exp(-0.5)


cdef struct Ctx:
    # trap
    double depth, w02, inv_z0, inv_z02, k, contrast, mass, grav
    double gxa, gya, gza, mg, half_cpl
    # profile
    double* seg_t0
    double* seg_t1
    double* seg_nu0
    double* seg_slope
    double* seg_phi0
    long nseg1
    double prof_end, phi_end, lam
    # modulations
    double* aom_x
    double* aom_y
    double* aom_sl
    long n_aom
    double* sched_t
    double* sched_f
    double* sched_sl
    long n_sch
    # mutable pointers and the phase offset in force
    long p, sp
    double cur_off


cdef struct Field:
    double nu, fac, a_env, w2, rho2, gexp, psi2, s


cdef inline void _field(Ctx* c, double tq, double xq, double yq, double zq,
                        Field* o) noexcept nogil:
    cdef double phi_p, tau, nu, fac, fq, zr, zr2, den
    cdef long ia
    if tq >= c.prof_end:
        phi_p = c.phi_end
        nu = 0.0
    else:
        while c.p < c.nseg1 and tq >= c.seg_t1[c.p]:
            c.p += 1
        tau = tq - c.seg_t0[c.p]
        nu = c.seg_nu0[c.p] + c.seg_slope[c.p] * tau
        phi_p = c.seg_phi0[c.p] + PI * (c.seg_nu0[c.p] * tau + 0.5 * c.seg_slope[c.p] * tau * tau)
    fac = 1.0
    if c.n_aom > 0:
        fq = fabs(nu)
        if fq >= c.aom_x[c.n_aom - 1]:
            fac = c.aom_y[c.n_aom - 1]
        else:
            ia = 0
            while c.aom_x[ia + 1] < fq:
                ia += 1
            fac = c.aom_y[ia] + (fq - c.aom_x[ia]) * c.aom_sl[ia]
    if c.n_sch > 0:
        if tq <= c.sched_t[0]:
            fac = fac * c.sched_f[0]
        elif tq >= c.sched_t[c.n_sch - 1]:
            fac = fac * c.sched_f[c.n_sch - 1]
        else:
            while c.sched_t[c.sp + 1] < tq:
                c.sp += 1
            fac = fac * (c.sched_f[c.sp] + (tq - c.sched_t[c.sp]) * c.sched_sl[c.sp])
    zr = zq * c.inv_z0
    zr2 = zr * zr
    den = 1.0 + zr2
    o.a_env = 1.0 / den
    o.w2 = c.w02 * den
    o.rho2 = xq * xq + yq * yq
    o.gexp = exp(-2.0 * o.rho2 / o.w2)
    o.psi2 = 2.0 * ((phi_p + c.cur_off) - c.k * zq)
    o.s = 0.5 * (1.0 + c.contrast * cos(o.psi2))
    o.nu = nu
    o.fac = fac


cdef inline void _force(Ctx* c, double tq, double xq, double yq, double zq,
                        double* fxq, double* fyq, double* fzq) noexcept nogil:
    cdef Field f
    cdef double ucoef, core, fpre, dw2, dlog, ds
    _field(c, tq, xq, yq, zq, &f)
    ucoef = c.depth * f.fac
    core = ucoef * f.a_env * f.gexp
    fpre = -4.0 * core * f.s / f.w2
    fxq[0] = fpre * xq
    fyq[0] = fpre * yq
    dw2 = 2.0 * zq * c.inv_z02 * c.w02
    dlog = (-2.0 * zq * c.inv_z02) * f.a_env + (2.0 * f.rho2 / (f.w2 * f.w2)) * dw2
    ds = c.contrast * c.k * sin(f.psi2)
    fzq[0] = core * (dlog * f.s + ds)
    if c.mg > 0.0:
        fxq[0] = fxq[0] - c.mg * c.gxa
        fyq[0] = fyq[0] - c.mg * c.gya
        fzq[0] = fzq[0] - c.mg * c.gza


cdef inline int _cut_extrema(double u_loc, double w, double mg,
                             double* u_eff, double* f_min) noexcept nogil:
    cdef double c, tol, lo, hi, mid, g1, t_min, t_bar, f_bar
    cdef int it, ok
    if mg <= 0.0:
        u_eff[0] = u_loc
        f_min[0] = -u_loc
        return 1
    if u_loc <= 0.0:
        u_eff[0] = 0.0
        f_min[0] = -u_loc
        return 1
    c = mg * w / (4.0 * u_loc)
    if c >= C_CRIT:
        u_eff[0] = 0.0
        f_min[0] = -u_loc
        return 1
    tol = 1e-3 * c
    lo = -0.5
    hi = 0.0
    mid = -0.25
    ok = 0
    for it in range(200):
        mid = 0.5 * (lo + hi)
        g1 = mid * exp(-2.0 * mid * mid) + c
        if fabs(g1) < tol:
            ok = 1
            break
        if g1 > 0.0:
            hi = mid
        else:
            lo = mid
    if ok == 0:
        u_eff[0] = 0.0
        f_min[0] = -u_loc
        return 0
    t_min = mid
    lo = -6.0
    hi = -0.5
    ok = 0
    for it in range(200):
        mid = 0.5 * (lo + hi)
        g1 = mid * exp(-2.0 * mid * mid) + c
        if fabs(g1) < tol:
            ok = 1
            break
        if g1 > 0.0:
            lo = mid
        else:
            hi = mid
    if ok == 0:
        u_eff[0] = 0.0
        f_min[0] = -u_loc
        return 0
    t_bar = mid
    f_min[0] = -u_loc * exp(-2.0 * t_min * t_min) + mg * w * t_min
    f_bar = -u_loc * exp(-2.0 * t_bar * t_bar) + mg * w * t_bar
    u_eff[0] = f_bar - f_min[0]
    return 1


cdef inline int _check(Ctx* c, double tq, int full,
                       double x, double y, double z,
                       double vx, double vy, double vz,
                       int* flag, double* e_out, double* ueff_out) noexcept nogil:
    cdef Field f
    cdef double vsw, ucoef, u_loc, v_atom, dvz, ke, w, mgw_h, e_est, u_eff, f_min, e
    _field(c, tq, x, y, z, &f)
    if f.rho2 > 2.25 * f.w2:
        flag[0] = 1
        e_out[0] = 0.0
        ueff_out[0] = 0.0
        return 1
    if tq >= c.prof_end:
        vsw = 0.0
    else:
        vsw = 0.5 * c.lam * f.nu
    ucoef = c.depth * f.fac
    u_loc = ucoef * f.a_env * c.half_cpl
    v_atom = -ucoef * f.a_env * f.gexp * f.s + c.mg * (c.gxa * x + c.gya * y + c.gza * z)
    dvz = vz - vsw
    ke = 0.5 * c.mass * (vx * vx + vy * vy + dvz * dvz)
    w = sqrt(f.w2)
    mgw_h = 0.5 * c.mg * w
    e_est = ke + v_atom + u_loc
    if full == 0 and e_est + mgw_h < SCREEN * u_loc - mgw_h:
        flag[0] = 0
        e_out[0] = e_est
        ueff_out[0] = u_loc
        return 1
    if _cut_extrema(u_loc, w, c.mg, &u_eff, &f_min) == 0:
        flag[0] = 0
        e_out[0] = 0.0
        ueff_out[0] = 0.0
        return 0
    e = ke + v_atom - f_min
    flag[0] = 1 if e >= u_eff else 0
    e_out[0] = e
    ueff_out[0] = u_eff
    return 1


def run(plan):
    """Integrate one trajectory. Same contract as _kernel_py.run."""
    cdef double x = plan.x, y = plan.y, z = plan.z
    cdef double vx = plan.vx, vy = plan.vy, vz = plan.vz
    cdef double dt = plan.dt
    cdef long n_steps = plan.n_steps

    cdef Ctx c
    c.depth = plan.depth
    c.w02 = plan.w0 * plan.w0
    c.inv_z0 = 1.0 / plan.rayleigh
    c.inv_z02 = c.inv_z0 * c.inv_z0
    c.k = plan.k
    c.contrast = plan.contrast
    c.mass = plan.mass
    c.grav = plan.grav
    c.gxa = plan.gx
    c.gya = plan.gy
    c.gza = plan.gz
    c.mg = c.mass * c.grav
    c.half_cpl = 0.5 * (1.0 + c.contrast)
    cdef double hdtm = 0.5 * dt / c.mass

    cdef double[::1] seg_t0 = plan.seg_t0
    cdef double[::1] seg_t1 = plan.seg_t1
    cdef double[::1] seg_nu0 = plan.seg_nu0
    cdef double[::1] seg_slope = plan.seg_slope
    cdef double[::1] seg_phi0 = plan.seg_phi0
    c.seg_t0 = &seg_t0[0]
    c.seg_t1 = &seg_t1[0]
    c.seg_nu0 = &seg_nu0[0]
    c.seg_slope = &seg_slope[0]
    c.seg_phi0 = &seg_phi0[0]
    c.nseg1 = seg_t0.shape[0] - 1
    c.prof_end = plan.prof_end
    c.phi_end = plan.phi_end
    c.lam = plan.lam

    cdef double[::1] aom_x = plan.aom_x
    cdef double[::1] aom_y = plan.aom_y
    cdef double[::1] aom_sl = plan.aom_sl
    c.n_aom = aom_x.shape[0]
    c.aom_x = &aom_x[0] if c.n_aom > 0 else NULL
    c.aom_y = &aom_y[0] if c.n_aom > 0 else NULL
    c.aom_sl = &aom_sl[0] if c.n_aom > 1 else NULL

    cdef double[::1] sched_t = plan.sched_t
    cdef double[::1] sched_f = plan.sched_f
    cdef double[::1] sched_sl = plan.sched_sl
    c.n_sch = sched_t.shape[0]
    c.sched_t = &sched_t[0] if c.n_sch > 0 else NULL
    c.sched_f = &sched_f[0] if c.n_sch > 0 else NULL
    c.sched_sl = &sched_sl[0] if c.n_sch > 1 else NULL

    cdef double bg_t = plan.bg_t
    cdef double[::1] rc_t = plan.rc_t
    cdef double[::1] rc_u = plan.rc_u
    cdef double[::1] rc_sx = plan.rc_sx
    cdef double[::1] rc_nx = plan.rc_nx
    cdef double[::1] rc_ny = plan.rc_ny
    cdef double[::1] rc_nz = plan.rc_nz
    cdef long n_rc = rc_t.shape[0]
    cdef double kick = plan.kick
    cdef double ph_iv = plan.ph_iv
    cdef double[::1] ph_off = plan.ph_off
    cdef long n_ph = ph_off.shape[0]

    cdef long esc_every = plan.esc_every
    cdef long rec_every = plan.rec_every
    cdef double[::1] out_t = plan.out_t
    cdef double[:, ::1] out_s = plan.out_s

    c.p = 0
    c.sp = 0
    cdef long rc = 0
    cdef long n_sc = 0
    cdef long n_rec = 0
    cdef long cur_idx = 0
    c.cur_off = ph_off[0] if n_ph > 0 else 0.0
    cdef double t = 0.0
    cdef int status = 0
    cdef double t_event = 0.0
    cdef double e_fin = 0.0
    cdef double ueff_fin = 0.0

    cdef double fx, fy, fz
    cdef long i = 0, j
    cdef int flag, ok
    cdef double e, ueff
    cdef Field fv

    if rec_every > 0:
        out_t[0] = 0.0
        out_s[0, 0] = x; out_s[0, 1] = y; out_s[0, 2] = z
        out_s[0, 3] = vx; out_s[0, 4] = vy; out_s[0, 5] = vz
        n_rec = 1

    _force(&c, 0.0, x, y, z, &fx, &fy, &fz)
    while i < n_steps:
        if n_ph > 0:
            j = <long>(t / ph_iv)
            if j >= n_ph:
                j = n_ph - 1
            if j != cur_idx:
                cur_idx = j
                c.cur_off = ph_off[j]
                _force(&c, t, x, y, z, &fx, &fy, &fz)
        if bg_t <= t:
            status = BACKGROUND
            t_event = bg_t
            break
        while rc < n_rc and rc_t[rc] <= t:
            _field(&c, t, x, y, z, &fv)
            if rc_u[rc] < fv.fac * fv.a_env * fv.gexp * fv.s:
                vx = vx + kick * rc_nx[rc]
                vy = vy + kick * rc_ny[rc]
                vz = vz + kick * (rc_nz[rc] + rc_sx[rc])
                n_sc += 1
            rc += 1
        if esc_every > 0 and i % esc_every == 0:
            if not (isfinite(x) and isfinite(y) and isfinite(z)
                    and isfinite(vx) and isfinite(vy) and isfinite(vz)):
                status = NONFINITE
                t_event = t
                break
            ok = _check(&c, t, 0, x, y, z, vx, vy, vz, &flag, &e, &ueff)
            if ok == 0:
                status = NOCONVERGE
                t_event = t
                break
            if flag != 0:
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
        _force(&c, t, x, y, z, &fx, &fy, &fz)
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
        while rc < n_rc and rc_t[rc] <= t:
            _field(&c, t, x, y, z, &fv)
            if rc_u[rc] < fv.fac * fv.a_env * fv.gexp * fv.s:
                vx = vx + kick * rc_nx[rc]
                vy = vy + kick * rc_ny[rc]
                vz = vz + kick * (rc_nz[rc] + rc_sx[rc])
                n_sc += 1
            rc += 1
        if bg_t <= t:
            status = BACKGROUND
            t_event = bg_t
        else:
            ok = _check(&c, t, 1, x, y, z, vx, vy, vz, &flag, &e, &ueff)
            if ok == 0:
                status = NOCONVERGE
            elif flag != 0:
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
